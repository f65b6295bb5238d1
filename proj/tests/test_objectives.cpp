// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "softcache/placement.hpp"

using namespace softcache;

namespace {

PlacementVector make_placement(std::vector<double> n, int cells, int capacity) {
    PlacementVector p;
    p.n = std::move(n);
    p.cells = cells;
    p.capacity = capacity;
    return p;
}

// independent scalar-sum oracles, written against the formulas directly
double oracle_g_base(const std::vector<double>& p, const std::vector<double>& n, double a) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += p[i] * (1.0 - std::exp(-a * n[i]));
    return s;
}

double oracle_g_sch1(const std::vector<double>& p, const UtilityGraph& u,
                     const std::vector<double>& n, double a) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double expo = n[i];
        for (std::int32_t j : u.rows[i]) expo += n[static_cast<std::size_t>(j)];
        s += p[i] * (1.0 - std::exp(-a * expo));
    }
    return s;
}

double oracle_g_sch2(const std::vector<double>& p, const UtilityGraph& u,
                     const std::vector<double>& n, double a, double c) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double rel = 0.0;
        for (std::int32_t j : u.rows[i]) rel += n[static_cast<std::size_t>(j)];
        s += p[i] * ((1.0 - std::exp(-a * n[i])) +
                     c * std::exp(-a * n[i]) * (1.0 - std::exp(-a * rel)));
    }
    return s;
}

UtilityGraph diagonal_graph(int k, GraphCase gc) {
    UtilityGraph g;
    g.rows.assign(static_cast<std::size_t>(k), {});
    g.graph_case = gc;
    return g;
}

} // namespace

TEST_CASE("p_miss closed form") {
    REQUIRE(p_miss(0.0, {1.0, 1.0}) == Catch::Approx(1.0));
    REQUIRE(p_miss(1.0, {1.0, 1.0}) == Catch::Approx(0.36787944117144233).epsilon(1e-12));
    REQUIRE(p_miss(4.0, {0.5, 1.0}) == Catch::Approx(0.1353352832366127).epsilon(1e-12));
    REQUIRE_THROWS_AS(p_miss(-1.0, {1.0, 1.0}), InvalidParameterError);
}

TEST_CASE("baseline hit ratio") {
    AccessModel unit{1.0, 1.0};

    SECTION("empty placement scores zero") {
        ContentCatalog cat;
        cat.popularity = {0.4, 0.6};
        auto placement = make_placement({0.0, 0.0}, 3, 1);
        REQUIRE(g_base(cat, placement, unit) == 0.0);
    }
    SECTION("single content, one copy") {
        ContentCatalog cat;
        cat.popularity = {1.0};
        auto placement = make_placement({1.0}, 2, 1);
        REQUIRE(g_base(cat, placement, unit) ==
                Catch::Approx(0.6321205588285577).epsilon(1e-12));
    }
    SECTION("hand-evaluated two-content case") {
        ContentCatalog cat;
        cat.popularity = {0.75, 0.25};
        auto placement = make_placement({2.0, 0.0}, 2, 1);
        const double expected = 0.75 * (1.0 - std::exp(-2.0)); // 0.6484985375725405
        REQUIRE(g_base(cat, placement, unit) == Catch::Approx(expected).epsilon(1e-12));
        REQUIRE(g_base(cat, placement, unit) ==
                Catch::Approx(oracle_g_base(cat.popularity, placement.n, 1.0)).epsilon(1e-12));
    }
    SECTION("infeasible placement rejected") {
        ContentCatalog cat;
        cat.popularity = {0.5, 0.5};
        auto placement = make_placement({2.0, 1.5}, 2, 1); // sum 3.5 > M*C = 2
        REQUIRE_THROWS_AS(g_base(cat, placement, unit), ConstraintViolationError);
    }
}

TEST_CASE("Case-1 soft-hit ratio") {
    AccessModel unit{1.0, 1.0};

    SECTION("diagonal graph equals the baseline objective") {
        Rng rng(12);
        for (int trial = 0; trial < 20; ++trial) {
            const int k = 2 + static_cast<int>(uniform_index(rng, 6));
            ContentCatalog cat;
            double sum = 0.0;
            for (int i = 0; i < k; ++i) {
                cat.popularity.push_back(0.1 + uniform01(rng));
                sum += cat.popularity.back();
            }
            for (double& p : cat.popularity) p /= sum;
            std::vector<double> n;
            for (int i = 0; i < k; ++i) n.push_back(2.0 * uniform01(rng));
            auto placement = make_placement(n, 4, k);
            auto g = diagonal_graph(k, GraphCase::case1());
            REQUIRE(g_sch1(cat, g, placement, unit) ==
                    Catch::Approx(g_base(cat, placement, unit)).margin(1e-14));
        }
    }
    SECTION("complete two-content graph depends only on the copy total") {
        ContentCatalog cat;
        cat.popularity = {0.3, 0.7};
        UtilityGraph g;
        g.rows = {{1}, {0}};
        g.graph_case = GraphCase::case1();
        auto a = make_placement({2.0, 0.0}, 3, 1);
        auto b = make_placement({0.5, 1.5}, 3, 1);
        REQUIRE(g_sch1(cat, g, a, unit) == Catch::Approx(g_sch1(cat, g, b, unit)).epsilon(1e-12));
    }
    SECTION("hand-evaluated three-content case") {
        ContentCatalog cat;
        cat.popularity = {0.5, 0.3, 0.2};
        UtilityGraph g;
        g.rows = {{}, {2}, {}};
        g.graph_case = GraphCase::case1();
        auto placement = make_placement({1.0, 1.0, 0.0}, 2, 1);
        const double expected = 0.8 * (1.0 - std::exp(-1.0)); // 0.5056964470628462
        REQUIRE(g_sch1(cat, g, placement, unit) == Catch::Approx(expected).epsilon(1e-12));
        REQUIRE(g_sch1(cat, g, placement, unit) ==
                Catch::Approx(oracle_g_sch1(cat.popularity, g, placement.n, 1.0))
                    .epsilon(1e-12));
    }
    SECTION("Case-2 graph rejected") {
        ContentCatalog cat;
        cat.popularity = {0.5, 0.5};
        auto g = diagonal_graph(2, GraphCase::case2(0.5));
        auto placement = make_placement({1.0, 0.0}, 2, 1);
        REQUIRE_THROWS_AS(g_sch1(cat, g, placement, {1.0, 1.0}), WrongCaseError);
    }
    SECTION("adding an edge never decreases the objective") {
        Rng rng(77);
        ContentCatalog cat = make_zipf_catalog(8, 1.2, 4);
        auto placement = make_placement({1, 0.5, 2, 0, 1.5, 0.25, 0.75, 1}, 3, 3);
        for (int trial = 0; trial < 50; ++trial) {
            auto g = make_random_u(cat, 2.0, GraphCase::case1(), trial);
            const double before = g_sch1(cat, g, placement, {0.7, 1.0});
            // add one random absent edge
            const auto i = static_cast<std::int32_t>(uniform_index(rng, 8));
            for (std::int32_t j = 0; j < 8; ++j) {
                if (j == i) continue;
                auto& row = g.rows[static_cast<std::size_t>(i)];
                if (!std::binary_search(row.begin(), row.end(), j)) {
                    row.insert(std::lower_bound(row.begin(), row.end(), j), j);
                    break;
                }
            }
            REQUIRE(g_sch1(cat, g, placement, {0.7, 1.0}) >= before - 1e-14);
        }
    }
}

TEST_CASE("Case-2 expected utility") {
    AccessModel unit{1.0, 1.0};

    SECTION("c -> 1 approaches the Case-1 objective") {
        ContentCatalog cat;
        cat.popularity = {0.5, 0.3, 0.2};
        UtilityGraph g1;
        g1.rows = {{1}, {0, 2}, {1}};
        g1.graph_case = GraphCase::case1();
        auto g2 = g1;
        g2.graph_case = GraphCase::case2(1.0 - 1e-9);
        auto placement = make_placement({1.0, 0.5, 0.25}, 2, 1);
        REQUIRE(g_sch2(cat, g2, placement, unit) ==
                Catch::Approx(g_sch1(cat, g1, placement, unit)).margin(2e-9));
    }
    SECTION("no relations reduces to the baseline") {
        ContentCatalog cat;
        cat.popularity = {0.6, 0.4};
        auto g = diagonal_graph(2, GraphCase::case2(0.5));
        auto placement = make_placement({1.5, 0.5}, 2, 1);
        REQUIRE(g_sch2(cat, g, placement, unit) ==
                Catch::Approx(g_base(cat, placement, unit)).margin(1e-14));
    }
    SECTION("hand-evaluated mutual-relation case") {
        ContentCatalog cat;
        cat.popularity = {0.5, 0.5};
        UtilityGraph g;
        g.rows = {{1}, {0}};
        g.graph_case = GraphCase::case2(0.5);
        auto placement = make_placement({1.0, 0.0}, 2, 1);
        const double expected = 0.75 * (1.0 - std::exp(-1.0)); // 0.4740904191214183
        REQUIRE(g_sch2(cat, g, placement, unit) == Catch::Approx(expected).epsilon(1e-12));
        REQUIRE(g_sch2(cat, g, placement, unit) ==
                Catch::Approx(oracle_g_sch2(cat.popularity, g, placement.n, 1.0, 0.5))
                    .epsilon(1e-12));
    }
    SECTION("Case-1 graph rejected") {
        ContentCatalog cat;
        cat.popularity = {1.0};
        auto g = diagonal_graph(1, GraphCase::case1());
        auto placement = make_placement({1.0}, 1, 1);
        REQUIRE_THROWS_AS(g_sch2(cat, g, placement, unit), WrongCaseError);
    }
}

TEST_CASE("analytic gradients match central differences") {
    Rng rng(2024);
    for (int trial = 0; trial < 30; ++trial) {
        const int k = 3 + static_cast<int>(uniform_index(rng, 5));
        ContentCatalog cat;
        double sum = 0.0;
        for (int i = 0; i < k; ++i) {
            cat.popularity.push_back(0.05 + uniform01(rng));
            sum += cat.popularity.back();
        }
        for (double& p : cat.popularity) p /= sum;

        const int cells = 3;
        auto g1 = make_random_u(cat, std::min(2.0, k - 1.0), GraphCase::case1(), trial);
        auto g2 = g1;
        g2.graph_case = GraphCase::case2(0.3 + 0.4 * uniform01(rng));

        PlacementVector x;
        x.cells = cells;
        x.capacity = k; // roomy box so interior perturbations stay feasible
        for (int i = 0; i < k; ++i) x.n.push_back(0.2 + 2.0 * uniform01(rng));

        AccessModel model{0.5 + uniform01(rng), 1.0};
        const double h = 1e-6 * cells;

        auto check = [&](const std::vector<double>& analytic, auto&& f) {
            auto fd = test_helpers::central_difference_gradient(f, x, h);
            for (std::size_t i = 0; i < analytic.size(); ++i) {
                // relative 1e-5, with an absolute floor for the FD roundoff
                // noise (~1e-16 / h) on near-zero components
                const double tol =
                    std::max(1e-5 * std::max(std::abs(analytic[i]), std::abs(fd[i])), 5e-10);
                REQUIRE(std::abs(analytic[i] - fd[i]) <= tol);
            }
        };
        check(grad_g_base(cat, x, model),
              [&](const PlacementVector& p) { return g_base(cat, p, model); });
        check(grad_g_sch1(cat, g1, x, model),
              [&](const PlacementVector& p) { return g_sch1(cat, g1, p, model); });
        check(grad_g_sch2(cat, g2, x, model),
              [&](const PlacementVector& p) { return g_sch2(cat, g2, p, model); });
    }
}

TEST_CASE("integerize") {
    SECTION("already-integer input unchanged") {
        auto p = make_placement({2.0, 1.0, 0.0}, 3, 1);
        auto r = integerize(p, IntegerizeMode::Round);
        REQUIRE(r.n == std::vector<double>{2.0, 1.0, 0.0});
        auto f = integerize(p, IntegerizeMode::Fractional);
        REQUIRE(f.n == p.n);
    }
    SECTION("largest remainder picks the bigger fraction") {
        auto p = make_placement({1.6, 0.4}, 2, 1);
        auto r = integerize(p, IntegerizeMode::Round);
        REQUIRE(r.n == std::vector<double>{2.0, 0.0});
    }
    SECTION("fractional split of 7.6") {
        auto split = copy_split(7.6);
        REQUIRE(split.full == 7);
        REQUIRE(split.fraction == Catch::Approx(0.6).epsilon(1e-9));
    }
    SECTION("round never exceeds capacity or the per-content box") {
        Rng rng(5);
        for (int trial = 0; trial < 200; ++trial) {
            const int k = 2 + static_cast<int>(uniform_index(rng, 6));
            const int cells = 1 + static_cast<int>(uniform_index(rng, 4));
            const int cap = 1 + static_cast<int>(uniform_index(rng, 3));
            const double budget = static_cast<double>(cells) * cap;
            std::vector<double> n(static_cast<std::size_t>(k), 0.0);
            double left = budget;
            for (auto& v : n) {
                v = std::min(left, uniform01(rng) * cells);
                left -= v;
            }
            auto p = make_placement(n, cells, cap);
            auto r = integerize(p, IntegerizeMode::Round);
            double total = 0.0;
            for (double v : r.n) {
                REQUIRE(v == std::floor(v));
                REQUIRE(v >= 0.0);
                REQUIRE(v <= cells);
                total += v;
            }
            REQUIRE(total <= budget + 1e-9);
        }
    }
}
