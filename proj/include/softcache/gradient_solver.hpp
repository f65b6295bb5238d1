// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "softcache/placement.hpp"
#include "softcache/projection.hpp"
#include "softcache/waterfill.hpp"

namespace softcache {

struct SolveOptions {
    double tolerance = 1e-8; // projected-gradient norm stopping threshold
    int max_iterations = 10000;
    double armijo_sigma = 1e-4;
    bool warm_start = true;    // start from the baseline water-filling point
    bool canonicalize = true;  // Case 1: lexicographic tie-break on flat optima
};

namespace detail {

/// In a Case-1 graph the objective depends on directed-complete components
/// only through their total copy count, so any split of that total is
/// optimal. Rewrites each such component to the lexicographically smallest
/// split: earlier indices take as little as the box allows.
inline void canonicalize_complete_components(const UtilityGraph& u, double box,
                                             std::vector<double>& n) {
    const int k = u.content_count();
    auto sym = u.symmetrized_rows();
    std::vector<int> comp(static_cast<std::size_t>(k), -1);
    for (int root = 0; root < k; ++root) {
        if (comp[static_cast<std::size_t>(root)] >= 0) continue;
        std::vector<std::int32_t> members, stack{root};
        comp[static_cast<std::size_t>(root)] = root;
        while (!stack.empty()) {
            std::int32_t v = stack.back();
            stack.pop_back();
            members.push_back(v);
            for (std::int32_t w : sym[static_cast<std::size_t>(v)])
                if (comp[static_cast<std::size_t>(w)] < 0) {
                    comp[static_cast<std::size_t>(w)] = root;
                    stack.push_back(w);
                }
        }
        if (members.size() < 2) continue;
        bool complete = true;
        for (std::int32_t v : members)
            if (u.rows[static_cast<std::size_t>(v)].size() + 1 < members.size()) {
                complete = false;
                break;
            }
        if (!complete) continue;

        std::sort(members.begin(), members.end());
        double total = 0.0;
        for (std::int32_t v : members) total += n[static_cast<std::size_t>(v)];
        double rest = static_cast<double>(members.size());
        for (std::int32_t v : members) {
            rest -= 1.0;
            const double take = std::clamp(total - rest * box, 0.0, box);
            n[static_cast<std::size_t>(v)] = take;
            total -= take;
        }
    }
}

using Objective = std::function<double(const PlacementVector&)>;
using Gradient = std::function<std::vector<double>(const PlacementVector&)>;

/// Projected gradient ascent with Armijo backtracking over the feasible set
/// {0 <= N <= M, sum N <= M*C}.
inline std::pair<PlacementVector, SolveReport> ascend(PlacementVector x,
                                                      const Objective& objective,
                                                      const Gradient& gradient,
                                                      const SolveOptions& opts) {
    const double box = static_cast<double>(x.cells);
    const double budget = x.total_capacity();
    x.n = project_capped_simplex(std::move(x.n), box, budget);

    double value = objective(x);
    double step = 1.0;
    double pg_norm = 0.0;
    int it = 0;
    bool converged = false;

    std::vector<double> grad;
    PlacementVector trial = x;
    for (; it < opts.max_iterations; ++it) {
        grad = gradient(x);

        // unit-step projected gradient, also the convergence measure
        {
            std::vector<double> probe(x.n.size());
            for (std::size_t i = 0; i < probe.size(); ++i) probe[i] = x.n[i] + grad[i];
            probe = project_capped_simplex(std::move(probe), box, budget);
            double s = 0.0;
            for (std::size_t i = 0; i < probe.size(); ++i) {
                const double d = probe[i] - x.n[i];
                s += d * d;
            }
            pg_norm = std::sqrt(s);
        }
        if (pg_norm <= opts.tolerance) {
            converged = true;
            break;
        }

        step = std::min(step * 2.0, 1e12);
        bool accepted = false;
        for (int bt = 0; bt < 80; ++bt) {
            trial.n.assign(x.n.size(), 0.0);
            for (std::size_t i = 0; i < x.n.size(); ++i) trial.n[i] = x.n[i] + step * grad[i];
            trial.n = project_capped_simplex(std::move(trial.n), box, budget);

            double inner = 0.0;
            for (std::size_t i = 0; i < x.n.size(); ++i)
                inner += grad[i] * (trial.n[i] - x.n[i]);
            if (inner <= 0.0) {
                step *= 0.5;
                continue;
            }
            const double trial_value = objective(trial);
            if (trial_value >= value + opts.armijo_sigma * inner) {
                x.n.swap(trial.n);
                value = trial_value;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break; // step underflow: no ascent direction left
    }

    SolveReport report;
    report.objective_value = value;
    report.iterations = it;
    report.kkt_residual = pg_norm;
    report.converged = converged || pg_norm <= opts.tolerance;

    // multiplier estimate: on the active capacity face the gradient equals
    // rho on strictly interior coordinates
    if (x.total_copies() >= budget - 1e-6) {
        grad = gradient(x);
        double sum = 0.0;
        int count = 0;
        for (std::size_t i = 0; i < x.n.size(); ++i)
            if (x.n[i] > 1e-9 && x.n[i] < box - 1e-9) {
                sum += grad[i];
                ++count;
            }
        report.rho = count > 0 ? sum / count : 0.0;
    } else {
        report.rho = 0.0;
    }
    return {std::move(x), report};
}

inline PlacementVector solver_start(const ContentCatalog& catalog, const AccessModel& model,
                                    int cells, int capacity, bool warm_start) {
    if (warm_start) return solve_baseline(catalog, model, cells, capacity).first;
    PlacementVector x;
    x.cells = cells;
    x.capacity = capacity;
    const double fill =
        std::min(static_cast<double>(cells),
                 static_cast<double>(cells) * capacity / catalog.content_count());
    x.n.assign(static_cast<std::size_t>(catalog.content_count()), fill);
    return x;
}

} // namespace detail

/// Case-1 recommendation-aware optimal placement: maximizes the Case-1
/// soft-hit objective over the feasible set by projected gradient ascent.
/// The problem is concave, so a point with small projected gradient is
/// within first-order tolerance of the global optimum.
inline std::pair<PlacementVector, SolveReport> solve_u_aware_case1(
    const ContentCatalog& catalog, const UtilityGraph& u, const AccessModel& model,
    int cells, int capacity, const SolveOptions& opts = {}) {
    if (!u.is_case1())
        throw WrongCaseError("solve_u_aware_case1 requires a Case-1 graph");
    catalog.validate();
    model.validate();
    detail::check_graph(catalog, u);

    auto x0 = detail::solver_start(catalog, model, cells, capacity, opts.warm_start);
    auto [x, report] = detail::ascend(
        std::move(x0),
        [&](const PlacementVector& p) { return g_sch1(catalog, u, p, model); },
        [&](const PlacementVector& p) { return grad_g_sch1(catalog, u, p, model); }, opts);

    if (opts.canonicalize) {
        detail::canonicalize_complete_components(u, static_cast<double>(cells), x.n);
        report.objective_value = g_sch1(catalog, u, x, model);
    }
    return {std::move(x), report};
}

/// Case-2 recommendation-aware optimal placement (constant soft-hit utility
/// c from the graph), same scheme as Case 1.
inline std::pair<PlacementVector, SolveReport> solve_u_aware_case2(
    const ContentCatalog& catalog, const UtilityGraph& u, const AccessModel& model,
    int cells, int capacity, const SolveOptions& opts = {}) {
    if (u.is_case1())
        throw WrongCaseError("solve_u_aware_case2 requires a Case-2 graph");
    catalog.validate();
    model.validate();
    detail::check_graph(catalog, u);

    auto x0 = detail::solver_start(catalog, model, cells, capacity, opts.warm_start);
    return detail::ascend(
        std::move(x0),
        [&](const PlacementVector& p) { return g_sch2(catalog, u, p, model); },
        [&](const PlacementVector& p) { return grad_g_sch2(catalog, u, p, model); }, opts);
}

} // namespace softcache
