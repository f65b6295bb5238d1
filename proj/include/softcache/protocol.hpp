// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "softcache/catalog.hpp"
#include "softcache/contact.hpp"
#include "softcache/errors.hpp"
#include "softcache/placement.hpp"
#include "softcache/rng.hpp"

namespace softcache {

struct Request {
    double time;
    std::int32_t user;
    std::int32_t content;
};

/// Per-user Poisson request arrivals with contents drawn from the catalog
/// popularity, merged and time-sorted.
struct RequestStream {
    std::vector<Request> requests;
    double rate = 0.0; // per user, requests/second
    std::uint64_t seed = 0;
};

inline RequestStream make_requests(const ContentCatalog& catalog, int users, double rate,
                                   double horizon, std::uint64_t seed) {
    if (users < 1 || !(rate > 0.0) || horizon < 0.0)
        throw InvalidParameterError("need users >= 1, rate > 0, horizon >= 0");

    std::vector<double> cdf(catalog.popularity.size());
    std::partial_sum(catalog.popularity.begin(), catalog.popularity.end(), cdf.begin());
    cdf.back() = 1.0;

    RequestStream stream;
    stream.rate = rate;
    stream.seed = seed;
    for (std::int32_t u = 0; u < users; ++u) {
        Rng rng(derive_seed(seed, 0x9E0000ULL + static_cast<std::uint64_t>(u)));
        double t = exponential_draw(rng, rate);
        while (t < horizon) {
            const double x = uniform01(rng);
            const auto it = std::lower_bound(cdf.begin(), cdf.end(), x);
            stream.requests.push_back(
                {t, u, static_cast<std::int32_t>(std::distance(cdf.begin(), it))});
            t += exponential_draw(rng, rate);
        }
    }
    std::stable_sort(stream.requests.begin(), stream.requests.end(),
                     [](const Request& a, const Request& b) {
                         if (a.time != b.time) return a.time < b.time;
                         return a.user < b.user;
                     });
    return stream;
}

/// One stored copy: fraction 1 = full copy, fraction in (0,1) = partial copy.
struct StoredCopy {
    std::int32_t content;
    double fraction;
};

/// Concrete cell -> contents map realizing an integerized placement.
struct CacheAssignment {
    int cells = 0;
    int capacity = 0;
    std::vector<std::vector<StoredCopy>> cell_contents; // per cell, sorted by content id

    /// Fraction of `content` stored in `cell` (0 when absent).
    double fraction_in(std::int32_t cell, std::int32_t content) const {
        const auto& stored = cell_contents[static_cast<std::size_t>(cell)];
        auto it = std::lower_bound(stored.begin(), stored.end(), content,
                                   [](const StoredCopy& s, std::int32_t c) { return s.content < c; });
        return (it != stored.end() && it->content == content) ? it->fraction : 0.0;
    }

    /// Lowest-index full copy among `candidates` (sorted) present in `cell`,
    /// or -1. Partial copies never qualify.
    std::int32_t first_full_match(std::int32_t cell,
                                  const std::vector<std::int32_t>& candidates) const {
        const auto& stored = cell_contents[static_cast<std::size_t>(cell)];
        auto s = stored.begin();
        for (std::int32_t want : candidates) {
            while (s != stored.end() && s->content < want) ++s;
            if (s == stored.end()) return -1;
            if (s->content == want && s->fraction >= 1.0) return want;
        }
        return -1;
    }
};

/// Places each content's copies into distinct cells with a randomized
/// max-residual greedy. Succeeds whenever a feasible assignment exists
/// (largest-demand-first into the emptiest cells).
inline CacheAssignment assign_caches(const PlacementVector& placement, int cells, int capacity,
                                     std::uint64_t seed) {
    if (cells < 1 || capacity < 1)
        throw InvalidParameterError("need cells >= 1 and capacity >= 1");
    const std::size_t k = placement.n.size();

    struct Demand {
        std::int32_t content;
        int slots;
        double partial; // fraction of the one partial copy, 0 if none
    };
    std::vector<Demand> demand;
    long long total_slots = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const auto split = copy_split(placement.n[i]);
        const int slots = split.full + (split.fraction > 0.0 ? 1 : 0);
        if (slots == 0) continue;
        if (slots > cells)
            throw AssignmentError("content needs more cells than exist");
        demand.push_back({static_cast<std::int32_t>(i), slots, split.fraction});
        total_slots += slots;
    }
    if (total_slots > static_cast<long long>(cells) * capacity)
        throw AssignmentError("placement needs more slots than total capacity");

    std::stable_sort(demand.begin(), demand.end(),
                     [](const Demand& a, const Demand& b) { return a.slots > b.slots; });

    Rng rng(derive_seed(seed, 0xA551));
    const auto shuffle_rank = random_permutation(static_cast<std::size_t>(cells), rng);

    CacheAssignment out;
    out.cells = cells;
    out.capacity = capacity;
    out.cell_contents.assign(static_cast<std::size_t>(cells), {});

    std::vector<int> residual(static_cast<std::size_t>(cells), capacity);
    std::vector<std::int32_t> order(static_cast<std::size_t>(cells));
    std::iota(order.begin(), order.end(), 0);
    for (const auto& d : demand) {
        std::stable_sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
            if (residual[static_cast<std::size_t>(a)] != residual[static_cast<std::size_t>(b)])
                return residual[static_cast<std::size_t>(a)] > residual[static_cast<std::size_t>(b)];
            return shuffle_rank[static_cast<std::size_t>(a)] < shuffle_rank[static_cast<std::size_t>(b)];
        });
        if (residual[static_cast<std::size_t>(order[static_cast<std::size_t>(d.slots - 1)])] <= 0)
            throw AssignmentError("no feasible assignment: ran out of cells with free slots");
        for (int s = 0; s < d.slots; ++s) {
            const std::int32_t cell = order[static_cast<std::size_t>(s)];
            const bool is_partial = d.partial > 0.0 && s == d.slots - 1;
            out.cell_contents[static_cast<std::size_t>(cell)].push_back(
                {d.content, is_partial ? d.partial : 1.0});
            --residual[static_cast<std::size_t>(cell)];
        }
    }
    for (auto& stored : out.cell_contents)
        std::sort(stored.begin(), stored.end(),
                  [](const StoredCopy& a, const StoredCopy& b) { return a.content < b.content; });
    return out;
}

/// Per-user contact intervals indexed for window queries.
struct ContactIndex {
    struct PerUser {
        std::vector<double> start, end, prefix_max_end;
        std::vector<std::int32_t> cell;
    };
    std::vector<PerUser> users;
    double horizon = 0.0;
    int cells = 0;

    static ContactIndex build(const ContactTrace& trace) {
        ContactIndex index;
        index.horizon = trace.horizon;
        index.cells = trace.cells;
        index.users.resize(static_cast<std::size_t>(trace.users));
        std::map<std::pair<std::int32_t, std::int32_t>, double> open;
        for (const auto& e : trace.events) {
            if (e.kind == EventKind::Enter) {
                open[{e.user, e.cell}] = e.time;
            } else {
                auto it = open.find({e.user, e.cell});
                if (it == open.end())
                    throw InvalidParameterError("trace exit without matching enter");
                auto& pu = index.users[static_cast<std::size_t>(e.user)];
                pu.start.push_back(it->second);
                pu.end.push_back(e.time);
                pu.cell.push_back(e.cell);
                open.erase(it);
            }
        }
        for (const auto& [key, since] : open) {
            auto& pu = index.users[static_cast<std::size_t>(key.first)];
            pu.start.push_back(since);
            pu.end.push_back(trace.horizon);
            pu.cell.push_back(key.second);
        }
        for (auto& pu : index.users) {
            std::vector<std::size_t> ord(pu.start.size());
            std::iota(ord.begin(), ord.end(), std::size_t{0});
            std::stable_sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
                if (pu.start[a] != pu.start[b]) return pu.start[a] < pu.start[b];
                return pu.cell[a] < pu.cell[b];
            });
            PerUser sorted;
            sorted.start.reserve(ord.size());
            for (std::size_t i : ord) {
                sorted.start.push_back(pu.start[i]);
                sorted.end.push_back(pu.end[i]);
                sorted.cell.push_back(pu.cell[i]);
            }
            sorted.prefix_max_end.resize(ord.size());
            double running = -1.0;
            for (std::size_t i = 0; i < ord.size(); ++i) {
                running = std::max(running, sorted.end[i]);
                sorted.prefix_max_end[i] = running;
            }
            pu = std::move(sorted);
        }
        return index;
    }

    /// Contacts of `user` intersecting [t, t + ttl], as (first reachable
    /// instant, cell), ordered by that instant. A contact already open at t
    /// is reported at t itself.
    std::vector<std::pair<double, std::int32_t>> window(std::int32_t user, double t,
                                                        double ttl) const {
        std::vector<std::pair<double, std::int32_t>> hits;
        const auto& pu = users[static_cast<std::size_t>(user)];
        const double t_end = t + ttl;
        auto first_after =
            std::lower_bound(pu.start.begin(), pu.start.end(), t) - pu.start.begin();
        // contacts that began before t and are still open at t
        for (std::ptrdiff_t i = first_after - 1; i >= 0; --i) {
            const auto idx = static_cast<std::size_t>(i);
            if (pu.prefix_max_end[idx] < t) break;
            if (pu.end[idx] >= t) hits.emplace_back(t, pu.cell[idx]);
        }
        for (auto i = static_cast<std::size_t>(first_after);
             i < pu.start.size() && pu.start[i] <= t_end; ++i)
            hits.emplace_back(pu.start[i], pu.cell[i]);
        std::sort(hits.begin(), hits.end());
        return hits;
    }
};

enum class SimMode { None, Sch1, Sch2 };

/// Mode of a simulation run: plain delayed access, Case-1 soft hits
/// (related content ends the wait), or Case-2 soft hits with utility c.
struct ModeSpec {
    SimMode mode = SimMode::None;
    double c = 1.0;

    static ModeSpec none() { return {SimMode::None, 1.0}; }
    static ModeSpec sch1() { return {SimMode::Sch1, 1.0}; }
    static ModeSpec sch2(double c) {
        if (!(c > 0.0 && c < 1.0))
            throw InvalidParameterError("Case-2 utility c must lie in (0,1)");
        return {SimMode::Sch2, c};
    }

    std::string name() const {
        switch (mode) {
            case SimMode::None: return "none";
            case SimMode::Sch1: return "sch1";
            default: return "sch2";
        }
    }
};

struct HitStats {
    std::int64_t requests = 0;
    std::int64_t full_hits = 0;
    std::int64_t soft_hits = 0;
    std::int64_t misses = 0;
    std::int64_t discarded = 0; // TTL window exceeded the trace horizon
    double utility_sum = 0.0;
    double expensive_accesses = 0.0; // misses plus fractional-copy remainders
    std::vector<std::int64_t> per_content_requests, per_content_full, per_content_soft,
        per_content_miss;
    // per-user tallies; requests of one user share its contact process, so
    // user totals are the right clusters for standard errors
    std::vector<std::int64_t> per_user_requests, per_user_hits;
    std::vector<double> per_user_utility;

    double hit_ratio() const {
        return requests > 0 ? static_cast<double>(full_hits + soft_hits) / requests : 0.0;
    }
    double mean_utility() const {
        return requests > 0 ? utility_sum / static_cast<double>(requests) : 0.0;
    }
};

/// Runs the delayed-access protocol over a contact index: each request scans
/// the user's contacts within [t, t+ttl] in time order and resolves per the
/// mode. Requests whose full window does not fit in the trace are discarded.
inline HitStats simulate(const ContactIndex& index, const CacheAssignment& assignment,
                         const RequestStream& requests, const UtilityGraph* u, ModeSpec mode,
                         double ttl) {
    if (mode.mode != SimMode::None && u == nullptr)
        throw InvalidParameterError("soft-hit modes need a relation graph");
    if (!(ttl > 0.0))
        throw InvalidParameterError("ttl must be > 0");
    if (assignment.cells < index.cells)
        throw InvalidParameterError("assignment covers fewer cells than the trace");

    int k = u != nullptr ? u->content_count() : 0;
    if (k == 0)
        for (const auto& r : requests.requests) k = std::max(k, r.content + 1);
    HitStats stats;
    if (k > 0) {
        stats.per_content_requests.assign(static_cast<std::size_t>(k), 0);
        stats.per_content_full.assign(static_cast<std::size_t>(k), 0);
        stats.per_content_soft.assign(static_cast<std::size_t>(k), 0);
        stats.per_content_miss.assign(static_cast<std::size_t>(k), 0);
    }
    stats.per_user_requests.assign(index.users.size(), 0);
    stats.per_user_hits.assign(index.users.size(), 0);
    stats.per_user_utility.assign(index.users.size(), 0.0);
    auto tally = [&](std::vector<std::int64_t>& v, std::int32_t content) {
        if (!v.empty()) ++v[static_cast<std::size_t>(content)];
    };

    static const std::vector<std::int32_t> no_relations;
    for (const auto& req : requests.requests) {
        if (req.time + ttl > index.horizon) {
            ++stats.discarded;
            continue;
        }
        if (req.content < 0 || (k > 0 && req.content >= k) || req.user < 0 ||
            req.user >= static_cast<std::int32_t>(index.users.size()))
            throw InvalidParameterError("request indices out of range");
        ++stats.requests;
        tally(stats.per_content_requests, req.content);
        const double utility_before = stats.utility_sum;
        const std::int64_t hits_before = stats.full_hits + stats.soft_hits;

        const auto& related =
            (u != nullptr && mode.mode != SimMode::None)
                ? u->rows[static_cast<std::size_t>(req.content)]
                : no_relations;

        const auto contacts = index.window(req.user, req.time, ttl);
        bool found_full = false;
        double partial_fraction = 0.0;
        bool related_seen = false;

        for (const auto& [when, cell] : contacts) {
            (void)when;
            const double own = assignment.fraction_in(cell, req.content);
            if (own >= 1.0) {
                found_full = true;
                break;
            }
            if (own > 0.0) {
                // partial copy of the requested content: counts as a hit, the
                // remainder is fetched over the expensive link
                found_full = true;
                partial_fraction = own;
                break;
            }
            if (mode.mode == SimMode::Sch1) {
                if (assignment.first_full_match(cell, related) >= 0) {
                    ++stats.soft_hits;
                    stats.utility_sum += 1.0;
                    tally(stats.per_content_soft, req.content);
                    related_seen = true;
                    break;
                }
            } else if (mode.mode == SimMode::Sch2 && !related_seen) {
                related_seen = assignment.first_full_match(cell, related) >= 0;
            }
        }

        if (found_full) {
            ++stats.full_hits;
            stats.utility_sum += 1.0;
            tally(stats.per_content_full, req.content);
            if (partial_fraction > 0.0)
                stats.expensive_accesses += 1.0 - partial_fraction;
        } else if (mode.mode == SimMode::Sch1 && related_seen) {
            // already tallied at the contact that served it
        } else if (mode.mode == SimMode::Sch2 && related_seen) {
            ++stats.soft_hits;
            stats.utility_sum += mode.c;
            tally(stats.per_content_soft, req.content);
        } else {
            ++stats.misses;
            stats.expensive_accesses += 1.0;
            tally(stats.per_content_miss, req.content);
        }

        const auto user = static_cast<std::size_t>(req.user);
        ++stats.per_user_requests[user];
        stats.per_user_hits[user] += stats.full_hits + stats.soft_hits - hits_before;
        stats.per_user_utility[user] += stats.utility_sum - utility_before;
    }
    return stats;
}

inline HitStats simulate(const ContactTrace& trace, const CacheAssignment& assignment,
                         const RequestStream& requests, const UtilityGraph* u, ModeSpec mode,
                         double ttl) {
    return simulate(ContactIndex::build(trace), assignment, requests, u, mode, ttl);
}

} // namespace softcache

#include "softcache/gradient_solver.hpp"

namespace softcache {

enum class Policy { Base, Sch1Aware, Sch2Aware };

inline std::string policy_name(Policy p) {
    switch (p) {
        case Policy::Base: return "base";
        case Policy::Sch1Aware: return "sch1";
        default: return "sch2";
    }
}

struct CompareOptions {
    std::vector<Policy> policies; // empty = derived from the graph case
    std::vector<ModeSpec> modes;  // empty = derived from the graph case
    double request_rate = 1e-3;   // per user, requests/second
    double case2_c = 0.5;         // c used when a Case-1 graph is run in sch2
    IntegerizeMode integerize_mode = IntegerizeMode::Round;
    SolveOptions solver{};
};

struct ModeComparisonRow {
    std::string policy;
    std::string mode;
    int seed_count = 0;
    double hit_mean = 0.0, hit_se = 0.0;
    double utility_mean = 0.0, utility_se = 0.0;
    double expensive_mean = 0.0;
};

namespace detail {

inline std::pair<double, double> mean_se(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    if (xs.empty()) return {0.0, 0.0};
    double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    if (xs.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

} // namespace detail

/// Runs every (placement policy, access mode) combination over the given
/// seeds and reports mean +- standard error of hit ratio and utility.
inline std::vector<ModeComparisonRow> compare_modes(const ContactTrace& trace,
                                                    const ContentCatalog& catalog,
                                                    const UtilityGraph& u,
                                                    AccessModel model, int cells, int capacity,
                                                    double ttl,
                                                    const std::vector<std::uint64_t>& seeds,
                                                    const CompareOptions& opts = {}) {
    model.ttl = ttl;
    model.validate();

    std::vector<Policy> policies = opts.policies;
    std::vector<ModeSpec> modes = opts.modes;
    if (policies.empty())
        policies = {Policy::Base, u.is_case1() ? Policy::Sch1Aware : Policy::Sch2Aware};
    if (modes.empty()) {
        modes = {ModeSpec::none()};
        if (u.is_case1())
            modes.push_back(ModeSpec::sch1());
        else
            modes.push_back(ModeSpec::sch2(u.utility_c()));
    }

    UtilityGraph case2_view = u;
    if (u.is_case1()) {
        double c = opts.case2_c;
        for (const auto& m : modes)
            if (m.mode == SimMode::Sch2) c = m.c;
        case2_view.graph_case = GraphCase::case2(c);
    }
    UtilityGraph case1_view = u;
    case1_view.graph_case = GraphCase::case1();

    std::map<std::string, PlacementVector> placements;
    for (Policy p : policies) {
        switch (p) {
            case Policy::Base:
                placements[policy_name(p)] =
                    solve_baseline(catalog, model, cells, capacity).first;
                break;
            case Policy::Sch1Aware:
                placements[policy_name(p)] =
                    solve_u_aware_case1(catalog, case1_view, model, cells, capacity, opts.solver)
                        .first;
                break;
            case Policy::Sch2Aware:
                placements[policy_name(p)] =
                    solve_u_aware_case2(catalog, case2_view, model, cells, capacity, opts.solver)
                        .first;
                break;
        }
    }

    const auto index = ContactIndex::build(trace);
    std::vector<ModeComparisonRow> rows;
    for (Policy p : policies) {
        const auto integer_placement =
            integerize(placements[policy_name(p)], opts.integerize_mode);
        for (const ModeSpec& mode : modes) {
            std::vector<double> hits, utils, exps;
            for (std::uint64_t seed : seeds) {
                const auto requests = make_requests(catalog, trace.users, opts.request_rate,
                                                    trace.horizon, derive_seed(seed, 0x4E9));
                const auto assignment =
                    assign_caches(integer_placement, cells, capacity, derive_seed(seed, 0xA5));
                const UtilityGraph* graph =
                    mode.mode == SimMode::Sch2 ? &case2_view : &case1_view;
                const auto stats = simulate(index, assignment, requests, graph, mode, ttl);
                hits.push_back(stats.hit_ratio());
                utils.push_back(stats.mean_utility());
                exps.push_back(stats.requests > 0
                                   ? stats.expensive_accesses / static_cast<double>(stats.requests)
                                   : 0.0);
            }
            ModeComparisonRow row;
            row.policy = policy_name(p);
            row.mode = mode.name();
            row.seed_count = static_cast<int>(seeds.size());
            std::tie(row.hit_mean, row.hit_se) = detail::mean_se(hits);
            std::tie(row.utility_mean, row.utility_se) = detail::mean_se(utils);
            row.expensive_mean = detail::mean_se(exps).first;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

} // namespace softcache
