// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "softcache/catalog.hpp"
#include "softcache/contact.hpp"
#include "softcache/dataset.hpp"
#include "softcache/gradient_solver.hpp"
#include "softcache/io.hpp"
#include "softcache/placement.hpp"
#include "softcache/protocol.hpp"
#include "softcache/waterfill.hpp"

namespace softcache {

inline constexpr const char* kVersion = "0.1.0";

/// Declarative experiment description; see README for the schema. Every field
/// has a default so small configs stay small.
struct ExperimentConfig {
    nlohmann::json raw; // resolved config as loaded (plus applied defaults)

    std::string name = "experiment";
    std::filesystem::path out_dir = "results";
    std::vector<std::uint64_t> seeds{1};

    // catalog
    std::string catalog_type = "zipf"; // zipf | dataset
    int catalog_k = 1000;
    double zipf_alpha = 2.0;
    std::filesystem::path dataset_edges, dataset_popularity;

    // graph
    std::string graph_type = "random"; // random | popularity_proportional | none
    double graph_degree = 5.0;         // L or L'
    bool graph_symmetrize = false;
    double case2_c = 0.5;

    // access model
    double lambda = 1.0 / 600.0;
    double ttl = 300.0;

    // trace
    std::string trace_type = "exponential"; // exponential | tvcm | file
    int trace_users = 200;
    double trace_horizon = 2e5;
    std::filesystem::path trace_file;
    MobilityConfig mobility;    // used when trace_type == tvcm
    bool estimate_rate = true;  // tvcm: replace lambda by the trace estimate

    // requests
    double request_rate = 1e-3;

    // capacity
    int cells = 25;
    int capacity = 20;

    std::vector<std::string> policies{"base", "sch1"};
    std::vector<std::string> modes{"none", "sch1"};
    IntegerizeMode integerize_mode = IntegerizeMode::Round;
    SolveOptions solver;

    // sweep
    std::string sweep_kind = "point"; // point | L | grid
    std::vector<double> sweep_values; // L values
    std::vector<double> grid_ttl;
    std::vector<int> grid_capacity;

    int jobs = 1;
};

/// One simulated run, keyed by its sweep cell.
struct RunRow {
    std::string cell;
    std::string mode;
    std::string policy;
    std::uint64_t seed = 0;
    HitStats stats;
};

struct SummaryRow {
    std::string cell;
    std::string policy;
    std::string mode;
    int seeds = 0;
    double hit_mean = 0.0, hit_se = 0.0;
    double utility_mean = 0.0, utility_se = 0.0;
    double analytic = 0.0; // closed-form objective at the simulated placement
};

struct GainRow {
    std::string cell;
    std::string policy;
    double hit_none = 0.0;
    double hit_sch1 = 0.0;
    double gain = 0.0;
    double gain_se = 0.0;
};

struct ExperimentResult {
    std::vector<RunRow> runs;
    std::vector<SummaryRow> summary;
    std::vector<GainRow> gains;
    std::filesystem::path manifest_path;
};

inline std::string config_hash(const nlohmann::json& j) {
    const std::string dump = j.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.raw = j;
    cfg.name = j.value("name", cfg.name);
    cfg.out_dir = j.value("out_dir", cfg.out_dir.string());
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();

    if (j.contains("catalog")) {
        const auto& c = j.at("catalog");
        cfg.catalog_type = c.value("type", cfg.catalog_type);
        cfg.catalog_k = c.value("K", cfg.catalog_k);
        cfg.zipf_alpha = c.value("alpha", cfg.zipf_alpha);
        if (c.contains("edges")) cfg.dataset_edges = c.at("edges").get<std::string>();
        if (c.contains("popularity"))
            cfg.dataset_popularity = c.at("popularity").get<std::string>();
    }
    if (j.contains("graph")) {
        const auto& g = j.at("graph");
        cfg.graph_type = g.value("type", cfg.graph_type);
        cfg.graph_degree = g.value("L", cfg.graph_degree);
        cfg.graph_symmetrize = g.value("symmetrize", cfg.graph_symmetrize);
        cfg.case2_c = g.value("c", cfg.case2_c);
    }
    if (j.contains("model")) {
        cfg.lambda = j.at("model").value("lambda", cfg.lambda);
        cfg.ttl = j.at("model").value("ttl", cfg.ttl);
    }
    if (j.contains("trace")) {
        const auto& t = j.at("trace");
        cfg.trace_type = t.value("type", cfg.trace_type);
        cfg.trace_users = t.value("users", cfg.trace_users);
        cfg.trace_horizon = t.value("horizon", cfg.trace_horizon);
        if (t.contains("path")) cfg.trace_file = t.at("path").get<std::string>();
        cfg.estimate_rate = t.value("estimate_lambda", cfg.estimate_rate);
        cfg.mobility.users = cfg.trace_users;
        cfg.mobility.horizon = cfg.trace_horizon;
        cfg.mobility.area_side = t.value("area", cfg.mobility.area_side);
        cfg.mobility.cell_range = t.value("cell_range", cfg.mobility.cell_range);
        cfg.mobility.home_fraction = t.value("home_fraction", cfg.mobility.home_fraction);
        cfg.mobility.speed_min = t.value("speed_min", cfg.mobility.speed_min);
        cfg.mobility.speed_max = t.value("speed_max", cfg.mobility.speed_max);
        cfg.mobility.pause_max = t.value("pause_max", cfg.mobility.pause_max);
    }
    if (j.contains("requests")) cfg.request_rate = j.at("requests").value("rate", cfg.request_rate);
    if (j.contains("capacity")) {
        cfg.cells = j.at("capacity").value("M", cfg.cells);
        cfg.capacity = j.at("capacity").value("C", cfg.capacity);
    }
    if (j.contains("policies")) cfg.policies = j.at("policies").get<std::vector<std::string>>();
    if (j.contains("modes")) cfg.modes = j.at("modes").get<std::vector<std::string>>();
    if (j.contains("integerize"))
        cfg.integerize_mode = j.at("integerize").get<std::string>() == "fractional"
                                  ? IntegerizeMode::Fractional
                                  : IntegerizeMode::Round;
    if (j.contains("solver")) {
        cfg.solver.tolerance = j.at("solver").value("tolerance", cfg.solver.tolerance);
        cfg.solver.max_iterations =
            j.at("solver").value("max_iterations", cfg.solver.max_iterations);
    }
    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        cfg.sweep_kind = s.value("kind", cfg.sweep_kind);
        if (s.contains("values")) cfg.sweep_values = s.at("values").get<std::vector<double>>();
        if (s.contains("ttl")) cfg.grid_ttl = s.at("ttl").get<std::vector<double>>();
        if (s.contains("C")) cfg.grid_capacity = s.at("C").get<std::vector<int>>();
    }
    cfg.jobs = j.value("jobs", cfg.jobs);

    if (cfg.seeds.empty()) throw ConfigurationError("seeds list must not be empty");
    if (cfg.policies.empty() || cfg.modes.empty())
        throw ConfigurationError("policies and modes must not be empty");
    if (cfg.sweep_kind == "L" && cfg.sweep_values.empty())
        throw ConfigurationError("L sweep needs values");
    if (cfg.sweep_kind == "grid" && (cfg.grid_ttl.empty() || cfg.grid_capacity.empty()))
        throw ConfigurationError("grid sweep needs ttl and C lists");
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open config: " + path.string());
    nlohmann::json j = nlohmann::json::parse(in);
    return parse_experiment_config(j);
}

namespace detail {

template <typename F>
auto stage(const std::string& name, F&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error("[" + name + "] " + e.what());
    }
}

/// Relative gain with a paired per-seed standard error.
inline GainRow paired_gain(const std::string& cell, const std::string& policy,
                           const std::vector<double>& none_hits,
                           const std::vector<double>& sch1_hits) {
    GainRow row;
    row.cell = cell;
    row.policy = policy;
    std::vector<double> gains;
    for (std::size_t i = 0; i < none_hits.size(); ++i) {
        if (!(none_hits[i] > 0.0))
            throw ReportError("cannot compute relative gain: zero hit ratio in cell " + cell);
        gains.push_back(sch1_hits[i] / none_hits[i] - 1.0);
    }
    std::tie(row.gain, row.gain_se) = mean_se(gains);
    row.hit_none = mean_se(none_hits).first;
    row.hit_sch1 = mean_se(sch1_hits).first;
    return row;
}

} // namespace detail

/// Relative gain of sch1 over none per (cell, policy), paired by seed.
inline std::vector<GainRow> report_gains(const std::vector<RunRow>& runs) {
    std::map<std::pair<std::string, std::string>,
             std::map<std::uint64_t, std::pair<std::optional<double>, std::optional<double>>>>
        cells;
    for (const auto& r : runs) {
        if (r.mode != "none" && r.mode != "sch1") continue;
        auto& slot = cells[{r.cell, r.policy}][r.seed];
        const double hit = r.stats.hit_ratio();
        if (r.mode == "none")
            slot.first = hit;
        else
            slot.second = hit;
    }
    if (cells.empty()) throw ReportError("no matched none/sch1 runs to compare");
    std::vector<GainRow> rows;
    for (const auto& [key, by_seed] : cells) {
        std::vector<double> none_hits, sch1_hits;
        for (const auto& [seed, pair] : by_seed) {
            if (!pair.first || !pair.second)
                throw ReportError("unmatched modes for cell " + key.first + " policy " +
                                  key.second + " seed " + std::to_string(seed));
            none_hits.push_back(*pair.first);
            sch1_hits.push_back(*pair.second);
        }
        rows.push_back(detail::paired_gain(key.first, key.second, none_hits, sch1_hits));
    }
    return rows;
}

namespace detail {

struct ResolvedInstance {
    ContentCatalog catalog;
    UtilityGraph graph;      // Case-1 rows; views derived per mode
    bool has_graph = true;
};

/// Catalogs depend on the replication seed only; graphs additionally on the
/// swept degree. Sweep cells that share a degree therefore see identical
/// instances, and a degree sweep varies nothing but the graph density.
inline ResolvedInstance resolve_instance(const ExperimentConfig& cfg, double degree,
                                         std::uint64_t seed) {
    ResolvedInstance inst;
    if (cfg.catalog_type == "dataset") {
        auto ingest = stage("ingest", [&] {
            return ingest_related_graph(cfg.dataset_edges, cfg.dataset_popularity);
        });
        inst.catalog = std::move(ingest.catalog);
        inst.graph = std::move(ingest.graph);
        return inst;
    }
    inst.catalog = make_zipf_catalog(cfg.catalog_k, cfg.zipf_alpha, derive_seed(seed, 0xCA7A));
    const std::uint64_t graph_seed =
        derive_seed(seed, 0x6E0000 + static_cast<std::uint64_t>(std::llround(degree * 1024.0)));
    if (cfg.graph_type == "none") {
        inst.graph.rows.assign(static_cast<std::size_t>(cfg.catalog_k), {});
        inst.graph.graph_case = GraphCase::case1();
        inst.has_graph = false;
    } else if (cfg.graph_type == "popularity_proportional") {
        inst.graph = make_popularity_proportional_u(inst.catalog, degree, GraphCase::case1(),
                                                    graph_seed, cfg.graph_symmetrize);
    } else {
        inst.graph = make_random_u(inst.catalog, degree, GraphCase::case1(), graph_seed);
    }
    return inst;
}

struct CellSpec {
    std::string label;
    double degree;
    double ttl;
    int capacity;
};

} // namespace detail

/// Runs the configured sweep and writes runs.csv, summary.csv, gains.csv
/// (grid sweeps), and manifest.json under out_dir.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);

    std::vector<detail::CellSpec> cell_specs;
    if (cfg.sweep_kind == "L") {
        for (double value : cfg.sweep_values)
            cell_specs.push_back({"L=" + format_double(value), value, cfg.ttl, cfg.capacity});
    } else if (cfg.sweep_kind == "grid") {
        for (double ttl : cfg.grid_ttl)
            for (int cap : cfg.grid_capacity)
                cell_specs.push_back({"ttl=" + format_double(ttl) + ";Q=" + std::to_string(cap),
                                      cfg.graph_degree, ttl, cap});
    } else {
        cell_specs.push_back({"point", cfg.graph_degree, cfg.ttl, cfg.capacity});
    }

    struct CellOutput {
        std::vector<RunRow> runs;
        std::vector<SummaryRow> summary;
    };
    std::vector<CellOutput> outputs(cell_specs.size());

    auto run_cell = [&](std::size_t cell_idx) {
        const auto& spec = cell_specs[cell_idx];
        auto& out = outputs[cell_idx];

        AccessModel model{cfg.lambda, spec.ttl};

        // per-(cell, seed) runs
        struct Acc {
            std::vector<double> hits, utils, analytic;
        };
        std::map<std::pair<std::string, std::string>, Acc> acc;

        for (std::uint64_t seed : cfg.seeds) {
            const auto inst = detail::resolve_instance(cfg, spec.degree, seed);

            ContactTrace trace = detail::stage("trace", [&]() -> ContactTrace {
                if (cfg.trace_type == "file") return load_trace_csv(cfg.trace_file);
                if (cfg.trace_type == "tvcm") {
                    MobilityConfig m = cfg.mobility;
                    m.cells = cfg.cells;
                    m.seed = derive_seed(seed, 0x7C0000);
                    return generate_tvcm_trace(m);
                }
                return exponential_trace(cfg.trace_users, cfg.cells, cfg.lambda,
                                         cfg.trace_horizon,
                                         derive_seed(seed, 0x7E0000));
            });
            if (cfg.trace_type == "tvcm" && cfg.estimate_rate)
                model.lambda = detail::stage("estimate", [&] { return estimate_lambda(trace); });

            const auto index = ContactIndex::build(trace);
            const auto requests =
                make_requests(inst.catalog, trace.users, cfg.request_rate, trace.horizon,
                              derive_seed(seed, 0x9E0000));

            UtilityGraph case1_view = inst.graph;
            case1_view.graph_case = GraphCase::case1();
            UtilityGraph case2_view = inst.graph;
            case2_view.graph_case = GraphCase::case2(cfg.case2_c);

            for (const auto& policy : cfg.policies) {
                const PlacementVector placement = detail::stage("solve", [&] {
                    if (policy == "sch1")
                        return solve_u_aware_case1(inst.catalog, case1_view, model, cfg.cells,
                                                   spec.capacity, cfg.solver)
                            .first;
                    if (policy == "sch2")
                        return solve_u_aware_case2(inst.catalog, case2_view, model, cfg.cells,
                                                   spec.capacity, cfg.solver)
                            .first;
                    if (policy != "base")
                        throw ConfigurationError("unknown policy: " + policy);
                    return solve_baseline(inst.catalog, model, cfg.cells, spec.capacity).first;
                });
                const auto integerized = integerize(placement, cfg.integerize_mode);
                const auto assignment = detail::stage("assign", [&] {
                    return assign_caches(integerized, cfg.cells, spec.capacity,
                                         derive_seed(seed, 0xA50000));
                });

                for (const auto& mode_name : cfg.modes) {
                    ModeSpec mode = ModeSpec::none();
                    const UtilityGraph* graph = &case1_view;
                    if (mode_name == "sch1") {
                        mode = ModeSpec::sch1();
                    } else if (mode_name == "sch2") {
                        mode = ModeSpec::sch2(cfg.case2_c);
                        graph = &case2_view;
                    } else if (mode_name != "none") {
                        throw ConfigurationError("unknown mode: " + mode_name);
                    }

                    const auto stats = detail::stage("simulate", [&] {
                        return simulate(index, assignment, requests, graph, mode, spec.ttl);
                    });

                    RunRow row;
                    row.cell = spec.label;
                    row.mode = mode_name;
                    row.policy = policy;
                    row.seed = seed;
                    row.stats = stats;
                    out.runs.push_back(std::move(row));

                    auto& a = acc[{policy, mode_name}];
                    a.hits.push_back(stats.hit_ratio());
                    a.utils.push_back(stats.mean_utility());
                    if (mode_name == "none")
                        a.analytic.push_back(g_base(inst.catalog, integerized, model));
                    else if (mode_name == "sch1")
                        a.analytic.push_back(g_sch1(inst.catalog, case1_view, integerized, model));
                    else
                        a.analytic.push_back(g_sch2(inst.catalog, case2_view, integerized, model));
                }
            }
        }

        for (const auto& [key, a] : acc) {
            SummaryRow s;
            s.cell = spec.label;
            s.policy = key.first;
            s.mode = key.second;
            s.seeds = static_cast<int>(a.hits.size());
            std::tie(s.hit_mean, s.hit_se) = detail::mean_se(a.hits);
            std::tie(s.utility_mean, s.utility_se) = detail::mean_se(a.utils);
            s.analytic = detail::mean_se(a.analytic).first;
            out.summary.push_back(std::move(s));
        }
    };

    const int jobs = std::max(1, cfg.jobs);
    if (jobs == 1 || cell_specs.size() <= 1) {
        for (std::size_t i = 0; i < cell_specs.size(); ++i) run_cell(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        for (int t = 0; t < jobs; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < cell_specs.size();
                     i = next.fetch_add(1))
                    run_cell(i);
            });
        for (auto& th : pool) th.join();
    }

    ExperimentResult result;
    for (auto& out : outputs) {
        result.runs.insert(result.runs.end(), out.runs.begin(), out.runs.end());
        result.summary.insert(result.summary.end(), out.summary.begin(), out.summary.end());
    }

    // runs.csv: sweep cell plus the standard stats columns
    {
        std::ofstream out(cfg.out_dir / "runs.csv");
        out << "cell," << kStatsCsvHeader << '\n';
        for (const auto& r : result.runs)
            out << r.cell << ',' << format_stats_row(r.mode, r.policy, r.seed, r.stats) << '\n';
    }
    {
        std::ofstream out(cfg.out_dir / "summary.csv");
        out << "cell,policy,mode,seeds,hit_mean,hit_se,utility_mean,utility_se,analytic\n";
        for (const auto& s : result.summary)
            out << s.cell << ',' << s.policy << ',' << s.mode << ',' << s.seeds << ','
                << format_double(s.hit_mean) << ',' << format_double(s.hit_se) << ','
                << format_double(s.utility_mean) << ',' << format_double(s.utility_se) << ','
                << format_double(s.analytic) << '\n';
    }
    const bool has_gain_modes =
        std::count(cfg.modes.begin(), cfg.modes.end(), "none") &&
        std::count(cfg.modes.begin(), cfg.modes.end(), "sch1");
    if (has_gain_modes) {
        result.gains = report_gains(result.runs);
        std::ofstream out(cfg.out_dir / "gains.csv");
        out << "cell,policy,hit_none,hit_sch1,gain,gain_se\n";
        for (const auto& g : result.gains)
            out << g.cell << ',' << g.policy << ',' << format_double(g.hit_none) << ','
                << format_double(g.hit_sch1) << ',' << format_double(g.gain) << ','
                << format_double(g.gain_se) << '\n';
    }

    nlohmann::json manifest;
    manifest["name"] = cfg.name;
    manifest["version"] = kVersion;
    manifest["config"] = cfg.raw;
    manifest["config_hash"] = config_hash(cfg.raw);
    manifest["seeds"] = cfg.seeds;
    manifest["outputs"] = {"runs.csv", "summary.csv"};
    if (has_gain_modes) manifest["outputs"].push_back("gains.csv");
    result.manifest_path = cfg.out_dir / "manifest.json";
    std::ofstream manifest_out(result.manifest_path);
    manifest_out << manifest.dump(2) << '\n';
    return result;
}

} // namespace softcache
