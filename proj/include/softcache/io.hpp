// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "softcache/catalog.hpp"
#include "softcache/errors.hpp"
#include "softcache/placement.hpp"
#include "softcache/protocol.hpp"

namespace softcache {

/// Fixed-format double for byte-stable CSV output.
inline std::string format_double(double v, int precision = 12) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    return buf;
}

inline void save_catalog_json(const ContentCatalog& catalog, const std::filesystem::path& path) {
    nlohmann::json j;
    j["K"] = catalog.content_count();
    j["p"] = catalog.popularity;
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out << j.dump(2) << '\n';
}

inline ContentCatalog load_catalog_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open catalog file: " + path.string());
    nlohmann::json j = nlohmann::json::parse(in);
    ContentCatalog catalog;
    catalog.popularity = j.at("p").get<std::vector<double>>();
    catalog.validate();
    return catalog;
}

inline void save_graph_json(const UtilityGraph& graph, const std::filesystem::path& path) {
    nlohmann::json j;
    j["K"] = graph.content_count();
    j["case"] = graph.is_case1() ? 1 : 2;
    if (!graph.is_case1()) j["c"] = graph.utility_c();
    j["rows"] = graph.rows;
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out << j.dump() << '\n';
}

inline UtilityGraph load_graph_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open graph file: " + path.string());
    nlohmann::json j = nlohmann::json::parse(in);
    UtilityGraph graph;
    graph.rows = j.at("rows").get<std::vector<std::vector<std::int32_t>>>();
    graph.graph_case = j.at("case").get<int>() == 1
                           ? GraphCase::case1()
                           : GraphCase::case2(j.at("c").get<double>());
    graph.validate();
    return graph;
}

/// Placement CSV: `content_index,n_continuous,n_integer` (round-integerized).
inline void save_placement_csv(const PlacementVector& placement,
                               const std::filesystem::path& path) {
    const auto rounded = integerize(placement, IntegerizeMode::Round);
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out << "content_index,n_continuous,n_integer\n";
    for (int i = 0; i < placement.content_count(); ++i)
        out << i << ',' << format_double(placement.n[static_cast<std::size_t>(i)]) << ','
            << static_cast<long long>(rounded.n[static_cast<std::size_t>(i)] + 0.5) << '\n';
}

inline PlacementVector load_placement_csv(const std::filesystem::path& path, int cells,
                                          int capacity) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open placement file: " + path.string());
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line) || line != "content_index,n_continuous,n_integer")
        throw ParseError(path.string(), 1, "unexpected placement header");
    ++lineno;
    PlacementVector placement;
    placement.cells = cells;
    placement.capacity = capacity;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        int idx = 0;
        double n_cont = 0.0;
        long long n_int = 0;
        if (std::sscanf(line.c_str(), "%d,%lf,%lld", &idx, &n_cont, &n_int) != 3)
            throw ParseError(path.string(), lineno, "expected content_index,n_continuous,n_integer");
        if (idx != static_cast<int>(placement.n.size()))
            throw ParseError(path.string(), lineno, "content_index out of order");
        placement.n.push_back(n_cont);
    }
    return placement;
}

inline void save_report_json(const SolveReport& report, const std::filesystem::path& path) {
    nlohmann::json j;
    j["objective"] = report.objective_value;
    j["rho"] = report.rho;
    j["iterations"] = report.iterations;
    j["kkt_residual"] = report.kkt_residual;
    j["converged"] = report.converged;
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out << j.dump(2) << '\n';
}

inline const char* kStatsCsvHeader =
    "mode,policy,seed,requests,full_hits,soft_hits,misses,utility,expensive_accesses";

inline std::string format_stats_row(const std::string& mode, const std::string& policy,
                                    std::uint64_t seed, const HitStats& stats) {
    std::string row = mode + ',' + policy + ',' + std::to_string(seed) + ',' +
                      std::to_string(stats.requests) + ',' + std::to_string(stats.full_hits) +
                      ',' + std::to_string(stats.soft_hits) + ',' + std::to_string(stats.misses) +
                      ',' + format_double(stats.utility_sum) + ',' +
                      format_double(stats.expensive_accesses);
    return row;
}

/// Sidecar mapping for ingested datasets: `id,index` per line.
inline void save_id_mapping_csv(const std::vector<std::string>& ids,
                                const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out << "id,index\n";
    for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << ',' << i << '\n';
}

} // namespace softcache
