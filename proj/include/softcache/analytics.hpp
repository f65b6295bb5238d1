// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "softcache/catalog.hpp"
#include "softcache/errors.hpp"
#include "softcache/placement.hpp"

namespace softcache {

/// A closed-form identity or formula was asked outside its regime.
class NotApplicableError : public Error {
public:
    using Error::Error;
};

/// Baseline miss rate in the interior water-filling regime: K rho / (lambda T).
inline double base_miss_rate(int content_count, const AccessModel& model, double rho) {
    return static_cast<double>(content_count) * rho / model.lambda_ttl();
}

/// Expected miss-rate improvement from serving related content under the
/// recommendation-oblivious optimal placement:
///   K (lambda T / rho)^(L_row - 1) / sum_i p_i prod_j p_j^(-u_ij)
/// where L_row counts the nonzero row entries of U including the diagonal.
/// Requires equal L_row across rows and every content in the interior
/// water-filling branch; pass the cell count to verify the upper threshold.
inline double analytic_gain_case1(const ContentCatalog& catalog, const UtilityGraph& u,
                                  const AccessModel& model, double rho,
                                  std::optional<int> cells = std::nullopt) {
    if (!u.is_case1())
        throw WrongCaseError("analytic gain applies to Case-1 graphs");
    if (catalog.content_count() != u.content_count())
        throw InvalidParameterError("catalog and graph sizes differ");
    if (!(rho > 0.0))
        throw InvalidParameterError("rho must be > 0");

    const std::size_t l_row = u.rows.empty() ? 1 : u.rows[0].size() + 1;
    for (const auto& r : u.rows)
        if (r.size() + 1 != l_row)
            throw NotApplicableError("gain formula needs equal nonzero count per row");

    const double a = model.lambda_ttl();
    for (double p : catalog.popularity) {
        if (!(p >= rho / a))
            throw NotApplicableError("content below the interior lower threshold");
        if (cells && !(p <= rho / a * std::exp(a * static_cast<double>(*cells))))
            throw NotApplicableError("content above the interior upper threshold");
    }

    std::vector<long double> log_p(catalog.popularity.size());
    for (std::size_t i = 0; i < log_p.size(); ++i)
        log_p[i] = std::log(static_cast<long double>(catalog.popularity[i]));

    long double denom = 0.0L;
    for (std::size_t i = 0; i < log_p.size(); ++i) {
        long double expo = 0.0L; // ln p_i minus the diagonal's ln p_i
        for (std::int32_t j : u.rows[i]) expo -= log_p[static_cast<std::size_t>(j)];
        denom += std::exp(expo);
    }

    const long double factor = static_cast<long double>(catalog.content_count()) *
                               std::exp(static_cast<long double>(l_row - 1) *
                                        std::log(static_cast<long double>(a) / rho));
    return static_cast<double>(factor / denom);
}

/// Hessian of the Case-2 objective at a placement, from the closed forms:
///   H_mm = -(aT)^2 [ p_m (1-c) e^{-aN_m} + c sum_i p_i I_im e^{-a s_i} ]
///   H_mn = -(aT)^2   c sum_i p_i I_im I_in e^{-a s_i}        (m != n)
/// with I the indicator support of U including the diagonal.
inline std::vector<std::vector<double>> hessian_case2(const ContentCatalog& catalog,
                                                      const UtilityGraph& u,
                                                      const PlacementVector& placement,
                                                      const AccessModel& model) {
    if (u.is_case1())
        throw WrongCaseError("hessian_case2 requires a Case-2 graph");
    if (catalog.content_count() != u.content_count() ||
        catalog.content_count() != placement.content_count())
        throw InvalidParameterError("dimension mismatch");

    const double a = model.lambda_ttl();
    const double c = u.utility_c();
    const std::size_t k = placement.n.size();
    std::vector<std::vector<double>> h(k, std::vector<double>(k, 0.0));

    std::vector<std::int32_t> support;
    for (std::size_t i = 0; i < k; ++i) {
        double s_i = placement.n[i];
        support.assign(1, static_cast<std::int32_t>(i));
        for (std::int32_t j : u.rows[i]) {
            s_i += placement.n[static_cast<std::size_t>(j)];
            support.push_back(j);
        }
        const double w = a * a * c * catalog.popularity[i] * std::exp(-a * s_i);
        for (std::int32_t m : support)
            for (std::int32_t n : support)
                h[static_cast<std::size_t>(m)][static_cast<std::size_t>(n)] -= w;
    }
    for (std::size_t m = 0; m < k; ++m)
        h[m][m] -= a * a * catalog.popularity[m] * (1.0 - c) * std::exp(-a * placement.n[m]);
    return h;
}

/// Hit probability with related content in the no-delay small-cell setting:
/// 1 - prod_{j in reachable} prod_k (1 - x_kj)^(u_ik), u_ii = 1. The storage
/// matrix is indexed x[cell][content].
inline double femto_hit_probability(const std::vector<std::vector<std::uint8_t>>& storage,
                                    const UtilityGraph& u, std::span<const int> reachable_cells,
                                    int content) {
    if (!u.is_case1())
        throw WrongCaseError("femto extension is defined for Case-1 graphs");
    if (content < 0 || content >= u.content_count())
        throw InvalidParameterError("content index out of range");

    double miss = 1.0;
    for (int cell : reachable_cells) {
        if (cell < 0 || cell >= static_cast<int>(storage.size()))
            throw InvalidParameterError("cell index out of range");
        const auto& row = storage[static_cast<std::size_t>(cell)];
        miss *= 1.0 - std::min<std::uint8_t>(row[static_cast<std::size_t>(content)], 1);
        for (std::int32_t j : u.rows[static_cast<std::size_t>(content)])
            miss *= 1.0 - std::min<std::uint8_t>(row[static_cast<std::size_t>(j)], 1);
    }
    return 1.0 - miss;
}

} // namespace softcache
