// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "softcache/catalog.hpp"
#include "softcache/errors.hpp"

namespace softcache {

/// Result of ingesting a related-content dataset: dense catalog + symmetric
/// Case-1 graph + the id of each dense index.
struct IngestResult {
    ContentCatalog catalog;
    UtilityGraph graph;
    std::vector<std::string> ids; // ids[index] = original content id
};

namespace detail {

inline bool is_comment_or_blank(const std::string& line) {
    for (char ch : line) {
        if (ch == '#') return true;
        if (!std::isspace(static_cast<unsigned char>(ch))) return false;
    }
    return true;
}

inline std::vector<std::string> split_tokens(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    return tokens;
}

} // namespace detail

/// Reads a popularity file of `id count` lines. Blank and '#' lines are
/// ignored. Throws ParseError on malformed lines or duplicate ids.
inline std::map<std::string, double> read_popularity_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidDatasetError("cannot open popularity file: " + path.string());

    std::map<std::string, double> counts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::is_comment_or_blank(line)) continue;
        auto tokens = detail::split_tokens(line);
        if (tokens.size() != 2)
            throw ParseError(path.string(), lineno, "expected `id count`");
        std::size_t pos = 0;
        double count = 0.0;
        try {
            count = std::stod(tokens[1], &pos);
        } catch (const std::exception&) {
            throw ParseError(path.string(), lineno, "count is not a number");
        }
        if (pos != tokens[1].size() || !(count >= 0.0) || !std::isfinite(count))
            throw ParseError(path.string(), lineno, "count must be a nonnegative number");
        if (!counts.emplace(tokens[0], count).second)
            throw ParseError(path.string(), lineno, "duplicate id: " + tokens[0]);
    }
    return counts;
}

/// Reads an edge file of whitespace-separated `id id` pairs, preserving file
/// order. Self-loops are dropped.
inline std::vector<std::pair<std::string, std::string>>
read_edge_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidDatasetError("cannot open edge file: " + path.string());

    std::vector<std::pair<std::string, std::string>> edges;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::is_comment_or_blank(line)) continue;
        auto tokens = detail::split_tokens(line);
        if (tokens.size() != 2)
            throw ParseError(path.string(), lineno, "expected `id id`");
        if (tokens[0] == tokens[1]) continue;
        edges.emplace_back(std::move(tokens[0]), std::move(tokens[1]));
    }
    return edges;
}

/// Ingests a related-content dataset: drops contents with zero or missing
/// popularity, symmetrizes the surviving edges, keeps the largest connected
/// component (ties broken toward the component holding the lexicographically
/// smallest id), renormalizes popularity, and maps ids to dense indices in
/// first-seen edge-file order.
inline IngestResult ingest_related_graph(const std::filesystem::path& edge_file,
                                         const std::filesystem::path& popularity_file) {
    const auto counts = read_popularity_file(popularity_file);
    const auto raw_edges = read_edge_file(edge_file);

    auto survives = [&](const std::string& id) {
        auto it = counts.find(id);
        return it != counts.end() && it->second > 0.0;
    };

    // Adjacency over surviving ids, symmetrized.
    std::map<std::string, std::vector<const std::string*>> adj;
    for (const auto& [a, b] : raw_edges) {
        if (!survives(a) || !survives(b)) continue;
        auto ia = adj.try_emplace(a).first;
        auto ib = adj.try_emplace(b).first;
        ia->second.push_back(&ib->first);
        ib->second.push_back(&ia->first);
    }

    // Connected components; adj is ordered so traversal is deterministic.
    std::map<std::string, int> comp;
    std::vector<std::pair<int, const std::string*>> comp_info; // size, smallest id
    for (const auto& [id, _] : adj) {
        if (comp.count(id)) continue;
        const int c = static_cast<int>(comp_info.size());
        int size = 0;
        const std::string* smallest = &id;
        std::vector<const std::string*> stack{&id};
        comp[id] = c;
        while (!stack.empty()) {
            const std::string* u = stack.back();
            stack.pop_back();
            ++size;
            if (*u < *smallest) smallest = u;
            for (const std::string* v : adj[*u])
                if (comp.emplace(*v, c).second) stack.push_back(v);
        }
        comp_info.emplace_back(size, smallest);
    }

    int best = -1;
    for (int c = 0; c < static_cast<int>(comp_info.size()); ++c) {
        if (best < 0 || comp_info[c].first > comp_info[best].first ||
            (comp_info[c].first == comp_info[best].first &&
             *comp_info[c].second < *comp_info[best].second))
            best = c;
    }
    if (best < 0 || comp_info[best].first < 2)
        throw InvalidDatasetError("largest connected component is empty after filtering");

    // Dense indices in first-seen edge-file order, restricted to the kept component.
    IngestResult out;
    std::map<std::string, std::int32_t> index;
    auto add_id = [&](const std::string& id) {
        if (comp.count(id) && comp[id] == best && !index.count(id)) {
            index[id] = static_cast<std::int32_t>(out.ids.size());
            out.ids.push_back(id);
        }
    };
    for (const auto& [a, b] : raw_edges) {
        add_id(a);
        add_id(b);
    }

    const int k = static_cast<int>(out.ids.size());
    out.graph.rows.assign(static_cast<std::size_t>(k), {});
    out.graph.graph_case = GraphCase::case1();
    for (const auto& [a, b] : raw_edges) {
        auto ia = index.find(a);
        auto ib = index.find(b);
        if (ia == index.end() || ib == index.end()) continue;
        out.graph.rows[static_cast<std::size_t>(ia->second)].push_back(ib->second);
        out.graph.rows[static_cast<std::size_t>(ib->second)].push_back(ia->second);
    }
    for (auto& r : out.graph.rows) {
        std::sort(r.begin(), r.end());
        r.erase(std::unique(r.begin(), r.end()), r.end());
    }

    out.catalog.popularity.resize(static_cast<std::size_t>(k));
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
        const double c = counts.at(out.ids[static_cast<std::size_t>(i)]);
        out.catalog.popularity[static_cast<std::size_t>(i)] = c;
        total += c;
    }
    for (double& p : out.catalog.popularity) p /= total;
    return out;
}

} // namespace softcache
