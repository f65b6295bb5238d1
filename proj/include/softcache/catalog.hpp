// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "softcache/errors.hpp"
#include "softcache/rng.hpp"

namespace softcache {

/// Popularity distribution over a catalog of K equal-size contents.
struct ContentCatalog {
    std::vector<double> popularity; // p_i > 0, sums to 1

    int content_count() const { return static_cast<int>(popularity.size()); }

    void validate() const {
        if (popularity.empty())
            throw InvalidParameterError("catalog must hold at least one content");
        double sum = 0.0;
        for (double p : popularity) {
            if (!(p > 0.0))
                throw InvalidParameterError("every popularity must be > 0");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw InvalidParameterError("popularities must sum to 1 within 1e-12");
    }
};

enum class UtilityCase { Case1, Case2 };

/// Case tag for a relation graph: Case 1 (related content = full hit) or
/// Case 2 (related content gives constant utility c < 1).
struct GraphCase {
    UtilityCase kind = UtilityCase::Case1;
    double c = 1.0; // soft-hit utility, only meaningful for Case 2

    static GraphCase case1() { return {UtilityCase::Case1, 1.0}; }
    static GraphCase case2(double c) {
        if (!(c > 0.0 && c < 1.0))
            throw InvalidParameterError("Case 2 utility c must lie in (0,1)");
        return {UtilityCase::Case2, c};
    }
};

/// Sparse content relation graph U. Row i lists the related contents R_i;
/// the diagonal u_ii = 1 is implicit and never stored. Every stored entry
/// has utility 1 (Case 1) or c (Case 2).
struct UtilityGraph {
    std::vector<std::vector<std::int32_t>> rows; // sorted, unique, no self-index
    GraphCase graph_case;

    int content_count() const { return static_cast<int>(rows.size()); }
    bool is_case1() const { return graph_case.kind == UtilityCase::Case1; }
    double utility_c() const { return graph_case.c; }

    std::size_t edge_entry_count() const {
        std::size_t n = 0;
        for (const auto& r : rows) n += r.size();
        return n;
    }

    void validate() const {
        const auto k = static_cast<std::int32_t>(rows.size());
        for (std::int32_t i = 0; i < k; ++i) {
            const auto& r = rows[i];
            if (!std::is_sorted(r.begin(), r.end()))
                throw InvalidParameterError("graph rows must be sorted");
            if (std::adjacent_find(r.begin(), r.end()) != r.end())
                throw InvalidParameterError("graph rows must not contain duplicates");
            for (std::int32_t j : r)
                if (j == i || j < 0 || j >= k)
                    throw InvalidParameterError("graph row entry out of range or self-loop");
        }
        if (graph_case.kind == UtilityCase::Case2 &&
            !(graph_case.c > 0.0 && graph_case.c < 1.0))
            throw InvalidParameterError("Case 2 utility c must lie in (0,1)");
    }

    /// Union of stored edges with their transposes.
    std::vector<std::vector<std::int32_t>> symmetrized_rows() const {
        std::vector<std::vector<std::int32_t>> sym(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::int32_t j : rows[i]) {
                sym[i].push_back(j);
                sym[static_cast<std::size_t>(j)].push_back(static_cast<std::int32_t>(i));
            }
        for (auto& r : sym) {
            std::sort(r.begin(), r.end());
            r.erase(std::unique(r.begin(), r.end()), r.end());
        }
        return sym;
    }
};

/// Degree statistics and connected components of a relation graph.
struct GraphStats {
    double mean_row_degree = 0.0;
    int min_degree = 0;
    int max_degree = 0;
    std::vector<int> connected_component_sizes; // sorted descending
};

enum class ZipfRankOrder {
    Shuffled, // rank-to-content assignment is a seeded random permutation
    Identity  // content 0 is the most popular
};

/// Builds a Zipf(alpha) popularity catalog: p ∝ rank^(-alpha), ranks assigned
/// to content ids by a seeded permutation (or identity when requested).
inline ContentCatalog make_zipf_catalog(int k, double alpha, std::uint64_t seed,
                                        ZipfRankOrder order = ZipfRankOrder::Shuffled) {
    if (k < 1)
        throw InvalidParameterError("catalog size K must be >= 1");
    if (!(alpha > 0.0))
        throw InvalidParameterError("Zipf exponent alpha must be > 0");

    std::vector<double> weight(static_cast<std::size_t>(k));
    double sum = 0.0;
    for (int r = 1; r <= k; ++r) {
        double w = std::pow(static_cast<double>(r), -alpha);
        weight[static_cast<std::size_t>(r - 1)] = w;
        sum += w;
    }

    ContentCatalog cat;
    cat.popularity.assign(static_cast<std::size_t>(k), 0.0);
    if (order == ZipfRankOrder::Identity) {
        for (int i = 0; i < k; ++i)
            cat.popularity[static_cast<std::size_t>(i)] = weight[static_cast<std::size_t>(i)] / sum;
    } else {
        Rng rng(derive_seed(seed, 0xCA7A106));
        auto perm = random_permutation(static_cast<std::size_t>(k), rng);
        // content perm[r-1] receives rank r
        for (int r = 0; r < k; ++r)
            cat.popularity[perm[static_cast<std::size_t>(r)]] = weight[static_cast<std::size_t>(r)] / sum;
    }
    // renormalize once to absorb accumulated rounding
    double total = std::accumulate(cat.popularity.begin(), cat.popularity.end(), 0.0);
    for (double& p : cat.popularity) p /= total;
    return cat;
}

/// Random relation graph: each unordered pair {i,j} is linked independently
/// with probability L/(K-1), giving mean row degree exactly L. The result is
/// symmetric.
inline UtilityGraph make_random_u(const ContentCatalog& catalog, double target_degree,
                                  GraphCase graph_case, std::uint64_t seed) {
    const int k = catalog.content_count();
    if (!(target_degree >= 0.0) || target_degree > static_cast<double>(k - 1))
        throw InvalidParameterError("target mean degree must lie in [0, K-1]");

    UtilityGraph g;
    g.rows.assign(static_cast<std::size_t>(k), {});
    g.graph_case = graph_case;
    if (k == 1 || target_degree == 0.0) return g;

    const double p = std::min(1.0, target_degree / static_cast<double>(k - 1));
    Rng rng(derive_seed(seed, 0x6A0B));
    for (std::int32_t i = 0; i < k; ++i)
        for (std::int32_t j = i + 1; j < k; ++j)
            if (uniform01(rng) < p) {
                g.rows[static_cast<std::size_t>(i)].push_back(j);
                g.rows[static_cast<std::size_t>(j)].push_back(i);
            }
    return g;
}

/// Popularity-proportional relation graph: directed edge i -> j drawn with
/// probability min(1, L' * p_j). Symmetrization is opt-in.
inline UtilityGraph make_popularity_proportional_u(const ContentCatalog& catalog,
                                                   double l_prime, GraphCase graph_case,
                                                   std::uint64_t seed,
                                                   bool symmetrize = false) {
    if (!(l_prime >= 0.0))
        throw InvalidParameterError("normalization L' must be >= 0");
    const int k = catalog.content_count();

    UtilityGraph g;
    g.rows.assign(static_cast<std::size_t>(k), {});
    g.graph_case = graph_case;

    Rng rng(derive_seed(seed, 0x9099));
    for (std::int32_t i = 0; i < k; ++i)
        for (std::int32_t j = 0; j < k; ++j) {
            if (i == j) continue;
            const double pr = std::min(1.0, l_prime * catalog.popularity[static_cast<std::size_t>(j)]);
            if (uniform01(rng) < pr)
                g.rows[static_cast<std::size_t>(i)].push_back(j);
        }
    if (symmetrize) {
        g.rows = g.symmetrized_rows();
    }
    return g;
}

/// Exact degree statistics plus connected components of the symmetrized graph.
inline GraphStats graph_stats(const UtilityGraph& g) {
    const int k = g.content_count();
    GraphStats s;
    if (k == 0) return s;

    std::size_t total = 0;
    s.min_degree = static_cast<int>(g.rows[0].size());
    s.max_degree = s.min_degree;
    for (const auto& r : g.rows) {
        total += r.size();
        s.min_degree = std::min(s.min_degree, static_cast<int>(r.size()));
        s.max_degree = std::max(s.max_degree, static_cast<int>(r.size()));
    }
    s.mean_row_degree = static_cast<double>(total) / static_cast<double>(k);

    auto sym = g.symmetrized_rows();
    std::vector<int> comp(static_cast<std::size_t>(k), -1);
    std::vector<std::int32_t> stack;
    int n_comp = 0;
    for (std::int32_t v = 0; v < k; ++v) {
        if (comp[static_cast<std::size_t>(v)] >= 0) continue;
        int size = 0;
        stack.push_back(v);
        comp[static_cast<std::size_t>(v)] = n_comp;
        while (!stack.empty()) {
            std::int32_t u = stack.back();
            stack.pop_back();
            ++size;
            for (std::int32_t w : sym[static_cast<std::size_t>(u)])
                if (comp[static_cast<std::size_t>(w)] < 0) {
                    comp[static_cast<std::size_t>(w)] = n_comp;
                    stack.push_back(w);
                }
        }
        s.connected_component_sizes.push_back(size);
        ++n_comp;
    }
    std::sort(s.connected_component_sizes.rbegin(), s.connected_component_sizes.rend());
    return s;
}

} // namespace softcache
