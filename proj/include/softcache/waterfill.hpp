// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "softcache/placement.hpp"

namespace softcache {

namespace detail {

/// Closed-form optimum for a given multiplier: the interior expression
/// ln(p_i lambda T / rho) / (lambda T) clamped to [0, M]. The clamp
/// reproduces the three branches (p_i below/inside/above the thresholds).
inline double waterfill_level(double p_i, double a, double rho, double m_cells) {
    return std::clamp(std::log(p_i * a / rho) / a, 0.0, m_cells);
}

} // namespace detail

/// Baseline optimal placement: maximizes the no-soft-hit objective over the
/// feasible set by the closed-form water-filling solution, with the capacity
/// multiplier rho found by bisection (total copies are monotone nonincreasing
/// in rho). When total capacity exceeds K*M the box optimum N_i = M is
/// returned with rho = 0.
inline std::pair<PlacementVector, SolveReport> solve_baseline(const ContentCatalog& catalog,
                                                              const AccessModel& model,
                                                              int cells, int capacity) {
    catalog.validate();
    model.validate();
    if (cells < 1 || capacity < 1)
        throw InvalidParameterError("need cells M >= 1 and capacity C >= 1");

    const int k = catalog.content_count();
    const double a = model.lambda_ttl();
    const double m = static_cast<double>(cells);
    const double target = static_cast<double>(cells) * capacity;

    PlacementVector placement;
    placement.cells = cells;
    placement.capacity = capacity;
    placement.n.assign(static_cast<std::size_t>(k), 0.0);

    SolveReport report;

    if (target >= m * k) {
        // capacity never binds: every content in every cell
        std::fill(placement.n.begin(), placement.n.end(), m);
        report.rho = 0.0;
        report.iterations = 0;
        report.kkt_residual = 0.0;
        report.objective_value = g_base(catalog, placement, model);
        return {placement, report};
    }

    const auto [p_min_it, p_max_it] =
        std::minmax_element(catalog.popularity.begin(), catalog.popularity.end());
    // rho_lo forces N_i = M for all i (total K*M >= target); rho_hi forces 0.
    double rho_lo = a * *p_min_it * std::exp(-a * m) * 0.5;
    double rho_hi = a * *p_max_it;

    auto total_at = [&](double rho) {
        double sum = 0.0;
        for (double p : catalog.popularity) sum += detail::waterfill_level(p, a, rho, m);
        return sum;
    };

    double total = 0.0;
    int iterations = 0;
    const int max_iterations = 400;
    double rho = rho_hi;
    for (; iterations < max_iterations; ++iterations) {
        rho = std::sqrt(rho_lo * rho_hi); // geometric midpoint: rho spans decades
        total = total_at(rho);
        if (std::abs(total - target) <= 1e-12 * target) break;
        if (total > target)
            rho_lo = rho;
        else
            rho_hi = rho;
    }
    if (std::abs(total - target) > 1e-9 * target)
        throw NumericFailureError("water-filling bisection did not converge");

    for (int i = 0; i < k; ++i)
        placement.n[static_cast<std::size_t>(i)] =
            detail::waterfill_level(catalog.popularity[static_cast<std::size_t>(i)], a, rho, m);

    // KKT residual: stationarity on each branch plus the capacity mismatch.
    double residual = std::abs(placement.total_copies() - target);
    for (int i = 0; i < k; ++i) {
        const double p = catalog.popularity[static_cast<std::size_t>(i)];
        const double n_i = placement.n[static_cast<std::size_t>(i)];
        const double slope = a * p * std::exp(-a * n_i);
        if (n_i <= 0.0)
            residual = std::max(residual, std::max(0.0, slope - rho));
        else if (n_i >= m)
            residual = std::max(residual, std::max(0.0, rho - slope));
        else
            residual = std::max(residual, std::abs(slope - rho));
    }

    report.rho = rho;
    report.iterations = iterations;
    report.kkt_residual = residual;
    report.objective_value = g_base(catalog, placement, model);
    return {placement, report};
}

} // namespace softcache
