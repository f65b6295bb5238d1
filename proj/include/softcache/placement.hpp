// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "softcache/catalog.hpp"
#include "softcache/errors.hpp"

namespace softcache {

/// Exponential meeting model: residual time to the next user-cell contact has
/// CDF F(t) = 1 - exp(-lambda t); a request may wait up to the deadline ttl.
struct AccessModel {
    double lambda = 0.0; // meeting rate, 1/seconds
    double ttl = 0.0;    // deadline T, seconds

    double lambda_ttl() const { return lambda * ttl; }

    void validate() const {
        if (!(lambda > 0.0) || !(ttl > 0.0))
            throw InvalidParameterError("access model requires lambda > 0 and ttl > 0");
    }
};

/// Continuous replica counts N over the catalog, with the cell count M and
/// per-cell capacity C that define feasibility.
struct PlacementVector {
    std::vector<double> n;
    int cells = 0;    // M
    int capacity = 0; // C, contents per cell

    int content_count() const { return static_cast<int>(n.size()); }
    double total_capacity() const { return static_cast<double>(cells) * capacity; }
    double total_copies() const { return std::accumulate(n.begin(), n.end(), 0.0); }

    bool feasible(double slack = 1e-9) const {
        for (double v : n)
            if (!(v >= -slack) || !(v <= cells + slack)) return false;
        return total_copies() <= total_capacity() + std::max(slack, 1e-9);
    }

    void require_feasible() const {
        if (!feasible())
            throw ConstraintViolationError("placement violates box or capacity constraints");
    }
};

/// Solver output record.
struct SolveReport {
    double objective_value = 0.0;
    int iterations = 0;
    double kkt_residual = 0.0;
    double rho = 0.0; // capacity-constraint multiplier
    bool converged = true;
};

/// Probability that none of `n_holders` storing cells is met within the
/// deadline: exp(-lambda * ttl * N).
inline double p_miss(double n_holders, const AccessModel& model) {
    if (n_holders < 0.0)
        throw InvalidParameterError("holder count must be >= 0");
    return std::exp(-model.lambda_ttl() * n_holders);
}

namespace detail {

inline void check_dims(const ContentCatalog& catalog, const PlacementVector& placement) {
    if (catalog.content_count() != placement.content_count())
        throw InvalidParameterError("catalog and placement sizes differ");
    placement.require_feasible();
}

inline void check_graph(const ContentCatalog& catalog, const UtilityGraph& u) {
    if (catalog.content_count() != u.content_count())
        throw InvalidParameterError("catalog and graph sizes differ");
}

/// Row sums over the indicator support including the implicit diagonal:
/// s_i = N_i + sum_{j in R_i} N_j.
inline std::vector<double> support_sums(const UtilityGraph& u, const std::vector<double>& n) {
    std::vector<double> s(n.size());
    for (std::size_t i = 0; i < n.size(); ++i) {
        double acc = n[i];
        for (std::int32_t j : u.rows[i]) acc += n[static_cast<std::size_t>(j)];
        s[i] = acc;
    }
    return s;
}

} // namespace detail

/// Baseline expected cache hit ratio: sum_i p_i (1 - exp(-lambda T N_i)).
inline double g_base(const ContentCatalog& catalog, const PlacementVector& placement,
                     const AccessModel& model) {
    detail::check_dims(catalog, placement);
    const double a = model.lambda_ttl();
    double hit = 0.0;
    for (int i = 0; i < catalog.content_count(); ++i)
        hit += catalog.popularity[static_cast<std::size_t>(i)] *
               -std::expm1(-a * placement.n[static_cast<std::size_t>(i)]);
    return hit;
}

/// Case-1 soft-hit ratio: sum_i p_i (1 - exp(-lambda T (N_i + sum_{j in R_i} N_j))).
inline double g_sch1(const ContentCatalog& catalog, const UtilityGraph& u,
                     const PlacementVector& placement, const AccessModel& model) {
    if (!u.is_case1())
        throw WrongCaseError("g_sch1 requires a Case-1 graph");
    detail::check_dims(catalog, placement);
    detail::check_graph(catalog, u);
    const double a = model.lambda_ttl();
    const auto s = detail::support_sums(u, placement.n);
    double hit = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        hit += catalog.popularity[i] * -std::expm1(-a * s[i]);
    return hit;
}

/// Case-2 expected utility:
/// sum_i p_i [ (1-exp(-aN_i)) + c exp(-aN_i)(1 - exp(-a sum_{j in R_i} N_j)) ].
inline double g_sch2(const ContentCatalog& catalog, const UtilityGraph& u,
                     const PlacementVector& placement, const AccessModel& model) {
    if (u.is_case1())
        throw WrongCaseError("g_sch2 requires a Case-2 graph");
    detail::check_dims(catalog, placement);
    detail::check_graph(catalog, u);
    const double a = model.lambda_ttl();
    const double c = u.utility_c();
    double value = 0.0;
    for (std::size_t i = 0; i < placement.n.size(); ++i) {
        double rel = 0.0;
        for (std::int32_t j : u.rows[i]) rel += placement.n[static_cast<std::size_t>(j)];
        const double own_miss = std::exp(-a * placement.n[i]);
        value += catalog.popularity[i] *
                 ((1.0 - own_miss) + c * own_miss * -std::expm1(-a * rel));
    }
    return value;
}

/// Gradient of g_base: d/dN_m = lambda T p_m exp(-lambda T N_m).
inline std::vector<double> grad_g_base(const ContentCatalog& catalog,
                                       const PlacementVector& placement,
                                       const AccessModel& model) {
    const double a = model.lambda_ttl();
    std::vector<double> grad(placement.n.size());
    for (std::size_t i = 0; i < grad.size(); ++i)
        grad[i] = a * catalog.popularity[i] * std::exp(-a * placement.n[i]);
    return grad;
}

/// Gradient of g_sch1: d/dN_m = lambda T sum_i p_i u_im exp(-lambda T s_i),
/// accumulated row-wise over the sparse support.
inline std::vector<double> grad_g_sch1(const ContentCatalog& catalog, const UtilityGraph& u,
                                       const PlacementVector& placement,
                                       const AccessModel& model) {
    const double a = model.lambda_ttl();
    const auto s = detail::support_sums(u, placement.n);
    std::vector<double> grad(placement.n.size(), 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double w = a * catalog.popularity[i] * std::exp(-a * s[i]);
        grad[i] += w;
        for (std::int32_t j : u.rows[i]) grad[static_cast<std::size_t>(j)] += w;
    }
    return grad;
}

/// Gradient of g_sch2:
/// d/dN_m = lambda T [ p_m (1-c) exp(-aN_m) + c sum_i p_i I_im exp(-a s_i) ]
/// with I the indicator support including the diagonal.
inline std::vector<double> grad_g_sch2(const ContentCatalog& catalog, const UtilityGraph& u,
                                       const PlacementVector& placement,
                                       const AccessModel& model) {
    const double a = model.lambda_ttl();
    const double c = u.utility_c();
    const auto s = detail::support_sums(u, placement.n);
    std::vector<double> grad(placement.n.size(), 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        grad[i] += a * catalog.popularity[i] * (1.0 - c) * std::exp(-a * placement.n[i]);
        const double w = a * c * catalog.popularity[i] * std::exp(-a * s[i]);
        grad[i] += w;
        for (std::int32_t j : u.rows[i]) grad[static_cast<std::size_t>(j)] += w;
    }
    return grad;
}

enum class IntegerizeMode {
    Round,     // largest-remainder rounding to whole copies
    Fractional // floor copies plus one partial copy of the leftover fraction
};

/// Full/partial copy decomposition of one replica count.
struct CopySplit {
    int full = 0;
    double fraction = 0.0; // size of the single partial copy, 0 if none
};

inline CopySplit copy_split(double n_i) {
    // treat float noise around whole copies as whole copies
    double full = std::floor(n_i + 1e-9);
    double frac = n_i - full;
    if (frac < 1e-9) frac = 0.0;
    return {static_cast<int>(full), frac};
}

/// Integerizes a continuous placement. Round mode applies largest-remainder
/// rounding toward the nearest-integer total, never exceeding M per content
/// or M*C overall. Fractional mode keeps the vector as-is; consumers split
/// each entry into floor(n_i) full copies plus one partial copy.
inline PlacementVector integerize(const PlacementVector& placement, IntegerizeMode mode) {
    placement.require_feasible();
    if (mode == IntegerizeMode::Fractional) return placement;

    PlacementVector out = placement;
    const std::size_t k = placement.n.size();
    double float_total = 0.0;
    std::vector<double> remainder(k);
    for (std::size_t i = 0; i < k; ++i) {
        const auto split = copy_split(placement.n[i]);
        out.n[i] = split.full;
        remainder[i] = split.fraction;
        float_total += placement.n[i];
    }
    const double cap = placement.total_capacity();
    const long long target =
        std::min(static_cast<long long>(cap + 1e-9), std::llround(float_total));
    long long floor_total = static_cast<long long>(out.total_copies() + 0.5);

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t idx : order) {
        if (floor_total >= target) break;
        if (remainder[idx] <= 0.0) break;
        out.n[idx] += 1.0;
        ++floor_total;
    }
    return out;
}

} // namespace softcache
