// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace softcache {

/// Euclidean projection onto the capped simplex
/// { x : 0 <= x_i <= box, sum x_i <= budget }.
/// If the box-clamped point already fits the budget it is the projection;
/// otherwise the budget is active and the projection is
/// x_i = clamp(y_i - tau, 0, box) with tau > 0 chosen so the sum equals the
/// budget. The shift applies to the *unclamped* input: clamping first and
/// shifting after is not the same map. The sum is continuous and strictly
/// decreasing in tau around the root, so bisection finds it.
inline std::vector<double> project_capped_simplex(std::vector<double> y, double box,
                                                  double budget) {
    double clamped_sum = 0.0;
    for (double v : y) clamped_sum += std::clamp(v, 0.0, box);
    if (clamped_sum <= budget) {
        for (double& v : y) v = std::clamp(v, 0.0, box);
        return y;
    }

    double lo = 0.0, hi = 0.0;
    for (double v : y) hi = std::max(hi, v);
    for (int it = 0; it < 200; ++it) {
        const double tau = 0.5 * (lo + hi);
        double s = 0.0;
        for (double v : y) s += std::clamp(v - tau, 0.0, box);
        if (s > budget)
            lo = tau;
        else
            hi = tau;
    }
    const double tau = 0.5 * (lo + hi);
    for (double& v : y) v = std::clamp(v - tau, 0.0, box);
    return y;
}

} // namespace softcache
