// SPDX-License-Identifier: Apache-2.0
//
// softcache command-line driver: generate catalogs, relation graphs, and
// contact traces, solve placements, run simulations, and drive full sweeps.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "softcache/analytics.hpp"
#include "softcache/harness.hpp"

namespace fs = std::filesystem;
using namespace softcache;

namespace {

GraphCase parse_case(int case_id, double c) {
    return case_id == 1 ? GraphCase::case1() : GraphCase::case2(c);
}

struct CommonFlags {
    std::uint64_t seed = 1;
    std::string out = ".";
    std::string config_path;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--seed", flags.seed, "random seed");
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_option("--config", flags.config_path, "JSON config file");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"recommendation-aware edge-caching toolkit"};
    app.require_subcommand(1);

    CommonFlags flags;

    // gen-catalog
    auto* gen_catalog = app.add_subcommand("gen-catalog", "generate a Zipf popularity catalog");
    int k = 1000;
    double alpha = 2.0;
    bool identity_ranks = false;
    gen_catalog->add_option("--K", k, "catalog size");
    gen_catalog->add_option("--alpha", alpha, "Zipf exponent");
    gen_catalog->add_flag("--identity-ranks", identity_ranks,
                          "assign rank r to content r-1 instead of a seeded permutation");
    add_common(gen_catalog, flags);

    // gen-graph
    auto* gen_graph = app.add_subcommand("gen-graph", "generate a content relation graph");
    std::string graph_type = "random";
    double degree = 5.0;
    int case_id = 1;
    double c_value = 0.5;
    bool symmetrize = false;
    std::string catalog_path;
    gen_graph->add_option("--type", graph_type, "random | popularity_proportional")
        ->check(CLI::IsMember({"random", "popularity_proportional"}));
    gen_graph->add_option("--L", degree, "target mean degree (L or L')");
    gen_graph->add_option("--case", case_id, "relation case: 1 or 2")->check(CLI::Range(1, 2));
    gen_graph->add_option("--c", c_value, "Case-2 soft-hit utility");
    gen_graph->add_flag("--symmetrize", symmetrize, "symmetrize a popularity-proportional graph");
    gen_graph->add_option("--catalog", catalog_path, "catalog JSON")->required();
    add_common(gen_graph, flags);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "ingest a related-content dataset");
    std::string edges_path, pops_path;
    ingest->add_option("--edges", edges_path, "edge file (`id id` per line)")->required();
    ingest->add_option("--popularity", pops_path, "popularity file (`id count` per line)")
        ->required();
    add_common(ingest, flags);

    // solve
    auto* solve = app.add_subcommand("solve", "compute an optimal placement");
    std::string policy = "base", graph_path;
    double lambda = 1.0 / 600.0, ttl = 300.0;
    int cells = 25, capacity = 20;
    solve->add_option("--policy", policy, "base | sch1 | sch2")
        ->check(CLI::IsMember({"base", "sch1", "sch2"}));
    solve->add_option("--catalog", catalog_path, "catalog JSON")->required();
    solve->add_option("--graph", graph_path, "relation graph JSON (sch1/sch2)");
    solve->add_option("--lambda", lambda, "meeting rate (1/s)");
    solve->add_option("--ttl", ttl, "deadline T (s)");
    solve->add_option("--M", cells, "number of small cells");
    solve->add_option("--C", capacity, "per-cell capacity (contents)");
    solve->add_option("--c", c_value, "Case-2 utility for sch2");
    add_common(solve, flags);

    // gen-trace
    auto* gen_trace = app.add_subcommand("gen-trace", "generate a contact trace");
    std::string trace_type = "exponential";
    int users = 60;
    double horizon = 4 * 3600.0;
    double cell_range = 100.0, area = 1000.0, home_fraction = 0.6;
    gen_trace->add_option("--type", trace_type, "exponential | tvcm")
        ->check(CLI::IsMember({"exponential", "tvcm"}));
    gen_trace->add_option("--users", users, "number of users");
    gen_trace->add_option("--cells", cells, "number of small cells");
    gen_trace->add_option("--lambda", lambda, "meeting rate for exponential traces");
    gen_trace->add_option("--horizon", horizon, "trace length (s)");
    gen_trace->add_option("--area", area, "square side for tvcm (m)");
    gen_trace->add_option("--cell-range", cell_range, "cell radius for tvcm (m)");
    gen_trace->add_option("--home-fraction", home_fraction, "tvcm home-time fraction");
    add_common(gen_trace, flags);

    // simulate
    auto* simulate_cmd = app.add_subcommand("simulate", "simulate delayed access over a trace");
    std::string trace_path, placement_path, mode_name = "none", policy_label = "base";
    double request_rate = 1e-3;
    simulate_cmd->add_option("--trace", trace_path, "trace CSV")->required();
    simulate_cmd->add_option("--placement", placement_path, "placement CSV")->required();
    simulate_cmd->add_option("--catalog", catalog_path, "catalog JSON")->required();
    simulate_cmd->add_option("--graph", graph_path, "relation graph JSON");
    simulate_cmd->add_option("--mode", mode_name, "none | sch1 | sch2")
        ->check(CLI::IsMember({"none", "sch1", "sch2"}));
    simulate_cmd->add_option("--policy", policy_label, "policy label for the output row");
    simulate_cmd->add_option("--ttl", ttl, "deadline T (s)");
    simulate_cmd->add_option("--M", cells, "number of small cells");
    simulate_cmd->add_option("--C", capacity, "per-cell capacity");
    simulate_cmd->add_option("--rate", request_rate, "per-user request rate (1/s)");
    simulate_cmd->add_option("--c", c_value, "Case-2 utility for sch2");
    add_common(simulate_cmd, flags);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "run a configured experiment sweep");
    add_common(sweep, flags);

    // report
    auto* report = app.add_subcommand("report", "compute relative gains from runs.csv");
    std::string runs_path;
    report->add_option("--runs", runs_path, "runs.csv from a sweep")->required();
    add_common(report, flags);

    CLI11_PARSE(app, argc, argv);

    const std::string stage_name = app.get_subcommands().front()->get_name();
    try {
        fs::create_directories(flags.out);
        const fs::path out_dir = flags.out;

        if (app.got_subcommand(gen_catalog)) {
            auto catalog = make_zipf_catalog(
                k, alpha, flags.seed,
                identity_ranks ? ZipfRankOrder::Identity : ZipfRankOrder::Shuffled);
            save_catalog_json(catalog, out_dir / "catalog.json");
            std::cout << "wrote " << (out_dir / "catalog.json").string() << " (K=" << k << ")\n";
        } else if (app.got_subcommand(gen_graph)) {
            auto catalog = load_catalog_json(catalog_path);
            auto graph = graph_type == "random"
                             ? make_random_u(catalog, degree, parse_case(case_id, c_value),
                                             flags.seed)
                             : make_popularity_proportional_u(catalog, degree,
                                                              parse_case(case_id, c_value),
                                                              flags.seed, symmetrize);
            save_graph_json(graph, out_dir / "graph.json");
            const auto stats = graph_stats(graph);
            std::cout << "wrote " << (out_dir / "graph.json").string()
                      << " (mean degree " << format_double(stats.mean_row_degree, 4) << ")\n";
        } else if (app.got_subcommand(ingest)) {
            auto result = ingest_related_graph(edges_path, pops_path);
            save_catalog_json(result.catalog, out_dir / "catalog.json");
            save_graph_json(result.graph, out_dir / "graph.json");
            save_id_mapping_csv(result.ids, out_dir / "id_map.csv");
            const auto stats = graph_stats(result.graph);
            std::cout << "ingested K=" << result.catalog.content_count()
                      << " mean degree " << format_double(stats.mean_row_degree, 4) << '\n';
        } else if (app.got_subcommand(solve)) {
            auto catalog = load_catalog_json(catalog_path);
            AccessModel model{lambda, ttl};
            PlacementVector placement;
            SolveReport solver_report;
            if (policy == "base") {
                std::tie(placement, solver_report) =
                    solve_baseline(catalog, model, cells, capacity);
            } else {
                if (graph_path.empty())
                    throw InvalidParameterError("--graph is required for policy " + policy);
                auto graph = load_graph_json(graph_path);
                if (policy == "sch1") {
                    graph.graph_case = GraphCase::case1();
                    std::tie(placement, solver_report) =
                        solve_u_aware_case1(catalog, graph, model, cells, capacity);
                } else {
                    graph.graph_case = GraphCase::case2(
                        graph.is_case1() ? c_value : graph.utility_c());
                    std::tie(placement, solver_report) =
                        solve_u_aware_case2(catalog, graph, model, cells, capacity);
                }
            }
            save_placement_csv(placement, out_dir / "placement.csv");
            save_report_json(solver_report, out_dir / "report.json");
            std::cout << "objective " << format_double(solver_report.objective_value, 9)
                      << " rho " << format_double(solver_report.rho, 6) << '\n';
        } else if (app.got_subcommand(gen_trace)) {
            ContactTrace trace;
            if (trace_type == "exponential") {
                trace = exponential_trace(users, cells, lambda, horizon, flags.seed);
            } else {
                MobilityConfig cfg;
                cfg.users = users;
                cfg.cells = cells;
                cfg.horizon = horizon;
                cfg.area_side = area;
                cfg.cell_range = cell_range;
                cfg.home_fraction = home_fraction;
                cfg.seed = flags.seed;
                trace = generate_tvcm_trace(cfg);
            }
            write_trace_csv(trace, out_dir / "trace.csv");
            std::cout << "wrote " << (out_dir / "trace.csv").string() << " ("
                      << trace.events.size() << " events)\n";
        } else if (app.got_subcommand(simulate_cmd)) {
            auto catalog = load_catalog_json(catalog_path);
            auto trace = load_trace_csv(trace_path);
            auto placement = load_placement_csv(placement_path, cells, capacity);
            UtilityGraph graph;
            if (!graph_path.empty()) {
                graph = load_graph_json(graph_path);
            } else {
                graph.rows.assign(catalog.popularity.size(), {});
                graph.graph_case = GraphCase::case1();
            }
            ModeSpec mode = ModeSpec::none();
            if (mode_name == "sch1") {
                graph.graph_case = GraphCase::case1();
                mode = ModeSpec::sch1();
            } else if (mode_name == "sch2") {
                mode = ModeSpec::sch2(graph.is_case1() ? c_value : graph.utility_c());
                graph.graph_case = GraphCase::case2(mode.c);
            }
            auto requests =
                make_requests(catalog, trace.users, request_rate, trace.horizon, flags.seed);
            auto assignment = assign_caches(integerize(placement, IntegerizeMode::Round), cells,
                                            capacity, flags.seed);
            auto stats = simulate(trace, assignment, requests, &graph, mode, ttl);
            std::ofstream out(out_dir / "stats.csv");
            out << kStatsCsvHeader << '\n'
                << format_stats_row(mode_name, policy_label, flags.seed, stats) << '\n';
            std::cout << "hit ratio " << format_double(stats.hit_ratio(), 6) << " over "
                      << stats.requests << " requests\n";
        } else if (app.got_subcommand(sweep)) {
            if (flags.config_path.empty())
                throw ConfigurationError("sweep requires --config");
            auto cfg = load_experiment_config(flags.config_path);
            if (sweep->count("--out")) cfg.out_dir = flags.out;
            if (sweep->count("--seed")) cfg.seeds = {flags.seed};
            auto result = run_experiment(cfg);
            std::cout << "wrote " << result.runs.size() << " runs under "
                      << cfg.out_dir.string() << '\n';
        } else if (app.got_subcommand(report)) {
            // parse runs.csv back into rows
            std::ifstream in(runs_path);
            if (!in) throw Error("cannot open runs file: " + runs_path);
            std::string line;
            std::size_t lineno = 0;
            if (!std::getline(in, line) ||
                line != std::string("cell,") + kStatsCsvHeader)
                throw ParseError(runs_path, 1, "unexpected runs.csv header");
            ++lineno;
            std::vector<RunRow> rows;
            while (std::getline(in, line)) {
                ++lineno;
                if (line.empty()) continue;
                RunRow row;
                std::istringstream ss(line);
                std::string field;
                auto next = [&](const char* what) {
                    if (!std::getline(ss, field, ','))
                        throw ParseError(runs_path, lineno, std::string("missing ") + what);
                    return field;
                };
                row.cell = next("cell");
                row.mode = next("mode");
                row.policy = next("policy");
                row.seed = std::stoull(next("seed"));
                row.stats.requests = std::stoll(next("requests"));
                row.stats.full_hits = std::stoll(next("full_hits"));
                row.stats.soft_hits = std::stoll(next("soft_hits"));
                row.stats.misses = std::stoll(next("misses"));
                row.stats.utility_sum = std::stod(next("utility"));
                row.stats.expensive_accesses = std::stod(next("expensive_accesses"));
                rows.push_back(std::move(row));
            }
            auto gains = report_gains(rows);
            std::ofstream out(out_dir / "gains.csv");
            out << "cell,policy,hit_none,hit_sch1,gain,gain_se\n";
            for (const auto& g : gains)
                out << g.cell << ',' << g.policy << ',' << format_double(g.hit_none) << ','
                    << format_double(g.hit_sch1) << ',' << format_double(g.gain) << ','
                    << format_double(g.gain_se) << '\n';
            std::cout << "wrote " << (out_dir / "gains.csv").string() << " (" << gains.size()
                      << " cells)\n";
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "softcache " << stage_name << ": error: " << e.what() << '\n';
        return 1;
    }
}
