// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "softcache/errors.hpp"
#include "softcache/rng.hpp"

namespace softcache {

enum class EventKind : std::uint8_t { Enter = 0, Exit = 1 };

struct ContactEvent {
    double time;
    std::int32_t user;
    std::int32_t cell;
    EventKind kind;
};

/// Time-ordered user-cell contact process. Exponential traces use
/// zero-length contacts (enter and exit at the meeting instant); mobility
/// traces carry real dwell intervals.
struct ContactTrace {
    std::vector<ContactEvent> events;
    double horizon = 0.0;
    int users = 0;
    int cells = 0;

    void validate() const {
        std::map<std::pair<std::int32_t, std::int32_t>, bool> open;
        double prev = 0.0;
        for (const auto& e : events) {
            if (e.time < prev)
                throw InvalidParameterError("trace events are not time-ordered");
            prev = e.time;
            if (e.time < 0.0 || e.time > horizon + 1e-9)
                throw InvalidParameterError("trace event outside [0, horizon]");
            if (e.user < 0 || e.user >= users || e.cell < 0 || e.cell >= cells)
                throw InvalidParameterError("trace event index out of range");
            bool& is_open = open[{e.user, e.cell}];
            if (e.kind == EventKind::Enter) {
                if (is_open) throw InvalidParameterError("enter while already in contact");
                is_open = true;
            } else {
                if (!is_open) throw InvalidParameterError("exit without a matching enter");
                is_open = false;
            }
        }
        for (const auto& [key, is_open] : open)
            if (is_open) throw InvalidParameterError("trace ends with an open contact");
    }
};

namespace detail {

inline void sort_events(std::vector<ContactEvent>& events) {
    std::stable_sort(events.begin(), events.end(), [](const ContactEvent& a, const ContactEvent& b) {
        if (a.time != b.time) return a.time < b.time;
        if (a.user != b.user) return a.user < b.user;
        if (a.cell != b.cell) return a.cell < b.cell;
        return a.kind < b.kind; // enter sorts before exit at equal times
    });
}

} // namespace detail

/// IID exponential meeting process: for every (user, cell) pair, meeting
/// instants form a Poisson process of the given rate over [0, horizon).
/// Contacts are instantaneous; the download is atomic at contact start.
inline ContactTrace exponential_trace(int users, int cells, double lambda, double horizon,
                                      std::uint64_t seed) {
    if (!(lambda > 0.0))
        throw InvalidParameterError("lambda must be > 0");
    if (users < 1 || cells < 1 || horizon < 0.0)
        throw InvalidParameterError("need users >= 1, cells >= 1, horizon >= 0");

    ContactTrace trace;
    trace.users = users;
    trace.cells = cells;
    trace.horizon = horizon;
    for (std::int32_t u = 0; u < users; ++u)
        for (std::int32_t c = 0; c < cells; ++c) {
            Rng rng(derive_seed(seed, (static_cast<std::uint64_t>(u) << 20) | static_cast<std::uint64_t>(c)));
            double t = exponential_draw(rng, lambda);
            while (t < horizon) {
                trace.events.push_back({t, u, c, EventKind::Enter});
                trace.events.push_back({t, u, c, EventKind::Exit});
                t += exponential_draw(rng, lambda);
            }
        }
    detail::sort_events(trace.events);
    return trace;
}

/// Axis-aligned rectangle used for community areas.
struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

    bool contains(double px, double py) const {
        return px >= x0 && px <= x1 && py >= y0 && py <= y1;
    }
};

struct MobilityConfig {
    double area_side = 1000.0;
    std::vector<Rect> communities; // empty = default 3-community layout
    double home_fraction = 0.6;
    int cells = 25;
    double cell_range = 100.0;
    int users = 60;
    double speed_min = 1.0, speed_max = 2.0; // m/s
    double pause_max = 60.0;                 // s
    double horizon = 4.0 * 3600.0;           // s
    std::uint64_t seed = 1;

    std::vector<Rect> resolved_communities() const {
        if (!communities.empty()) return communities;
        const double s = area_side;
        return {
            {0.05 * s, 0.05 * s, 0.35 * s, 0.35 * s},
            {0.60 * s, 0.10 * s, 0.90 * s, 0.40 * s},
            {0.35 * s, 0.60 * s, 0.65 * s, 0.90 * s},
        };
    }

    void validate() const {
        if (!(home_fraction > 0.0 && home_fraction < 1.0))
            throw ConfigurationError("home_fraction must lie in (0,1)");
        if (users < 1 || cells < 1 || !(area_side > 0.0) || cell_range < 0.0)
            throw ConfigurationError("invalid mobility geometry");
        if (!(speed_min > 0.0) || speed_max < speed_min)
            throw ConfigurationError("invalid speed range");
        if (horizon < 0.0 || pause_max < 0.0)
            throw ConfigurationError("invalid timing parameters");
        for (const auto& r : resolved_communities())
            if (!(r.x1 > r.x0) || !(r.y1 > r.y0) || r.x0 < 0 || r.y0 < 0 ||
                r.x1 > area_side || r.y1 > area_side)
                throw ConfigurationError("community rectangle outside the area");
    }
};

namespace detail {

struct Point {
    double x = 0.0, y = 0.0;
};

inline Point random_point_in(Rng& rng, const Rect& r) {
    return {uniform_in(rng, r.x0, r.x1), uniform_in(rng, r.y0, r.y1)};
}

/// Non-overlapping cell layout: a jittered grid. The grid guarantees pairwise
/// center distance > 2*range whenever the grid pitch allows it at all.
inline std::vector<Point> place_cells(const MobilityConfig& cfg) {
    const int m = cfg.cells;
    if (m == 1) return {{cfg.area_side / 2, cfg.area_side / 2}};

    const int g = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(m))));
    const double margin = std::min(0.05 * cfg.area_side, cfg.cell_range);
    const double pitch = (cfg.area_side - 2.0 * margin) / (g - 1);
    if (pitch <= 2.0 * cfg.cell_range)
        throw ConfigurationError("cannot place non-overlapping cells: grid pitch <= 2*range");
    const double jitter = 0.45 * (pitch - 2.0 * cfg.cell_range);

    Rng rng(derive_seed(cfg.seed, 0xCE11));
    std::vector<Point> centers;
    centers.reserve(static_cast<std::size_t>(m));
    for (int row = 0; row < g && static_cast<int>(centers.size()) < m; ++row)
        for (int col = 0; col < g && static_cast<int>(centers.size()) < m; ++col) {
            const double jx = uniform_in(rng, -jitter, jitter);
            const double jy = uniform_in(rng, -jitter, jitter);
            centers.push_back({std::clamp(margin + col * pitch + jx, 0.0, cfg.area_side),
                               std::clamp(margin + row * pitch + jy, 0.0, cfg.area_side)});
        }
    for (std::size_t i = 0; i < centers.size(); ++i)
        for (std::size_t j = i + 1; j < centers.size(); ++j) {
            const double dx = centers[i].x - centers[j].x;
            const double dy = centers[i].y - centers[j].y;
            if (std::sqrt(dx * dx + dy * dy) <= 2.0 * cfg.cell_range)
                throw ConfigurationError("cell placement produced overlapping coverage");
        }
    return centers;
}

/// One straight-line (or stationary) stretch of a user path.
struct PathSegment {
    double t0, t1;
    Point p0, p1;

    Point at(double t) const {
        if (t1 <= t0) return p0;
        const double w = (t - t0) / (t1 - t0);
        return {p0.x + w * (p1.x - p0.x), p0.y + w * (p1.y - p0.y)};
    }
};

/// Times within (t0, t1) at which the segment crosses the circle around c
/// with radius r, ascending.
inline std::vector<double> circle_crossings(const PathSegment& seg, Point c, double r) {
    std::vector<double> out;
    const double dur = seg.t1 - seg.t0;
    if (dur <= 0.0) return out;
    const double vx = (seg.p1.x - seg.p0.x) / dur;
    const double vy = (seg.p1.y - seg.p0.y) / dur;
    const double dx = seg.p0.x - c.x;
    const double dy = seg.p0.y - c.y;
    const double a = vx * vx + vy * vy;
    if (a == 0.0) return out;
    const double b = 2.0 * (dx * vx + dy * vy);
    const double cc = dx * dx + dy * dy - r * r;
    const double disc = b * b - 4.0 * a * cc;
    if (disc <= 0.0) return out;
    const double sq = std::sqrt(disc);
    // numerically stable pair of roots
    const double q = -0.5 * (b + (b >= 0 ? sq : -sq));
    double r1 = q / a;
    double r2 = (q != 0.0) ? cc / q : r1;
    if (r1 > r2) std::swap(r1, r2);
    if (r1 > 0.0 && r1 < dur) out.push_back(seg.t0 + r1);
    if (r2 > 0.0 && r2 < dur && r2 != r1) out.push_back(seg.t0 + r2);
    return out;
}

} // namespace detail

namespace detail {

/// Mean excursion duration (out-travel, pause, back-travel), probed from the
/// config geometry with a dedicated stream. Balances the home dwell so the
/// realized home-time fraction lands on home_fraction.
inline double mean_excursion_estimate(const MobilityConfig& cfg,
                                      const std::vector<Rect>& communities) {
    Rng probe(derive_seed(cfg.seed, 0x7AB1E));
    const double v = 0.5 * (cfg.speed_min + cfg.speed_max);
    double acc = 0.0;
    const int samples = 512;
    for (int s = 0; s < samples; ++s) {
        const auto& home = communities[static_cast<std::size_t>(s) % communities.size()];
        const auto& away = communities[(s + 1 + static_cast<std::size_t>(uniform_index(
                                            probe, std::max<std::size_t>(communities.size() - 1, 1)))) %
                                       communities.size()];
        auto a = random_point_in(probe, home);
        auto b = random_point_in(probe, away);
        acc += 2.0 * std::hypot(b.x - a.x, b.y - a.y) / v;
    }
    return acc / samples + 0.5 * cfg.pause_max;
}

/// Piecewise-linear movement of one user over [0, horizon+].
inline std::vector<PathSegment> build_user_path(const MobilityConfig& cfg,
                                                const std::vector<Rect>& communities,
                                                std::int32_t user, double mean_home_dwell) {
    Rng rng(derive_seed(cfg.seed, 0x500000ULL + static_cast<std::uint64_t>(user)));
    const auto& home = communities[static_cast<std::size_t>(user) % communities.size()];

    std::vector<PathSegment> path;
    Point pos = random_point_in(rng, home);
    double t = 0.0;
    auto add_leg = [&](Point dest) {
        const double v = uniform_in(rng, cfg.speed_min, cfg.speed_max);
        const double dur = std::hypot(dest.x - pos.x, dest.y - pos.y) / v;
        if (dur > 0.0) {
            path.push_back({t, t + dur, pos, dest});
            t += dur;
            pos = dest;
        }
    };
    auto add_pause = [&](double dur) {
        if (dur > 0.0) {
            path.push_back({t, t + dur, pos, pos});
            t += dur;
        }
    };

    while (t < cfg.horizon) {
        // home phase: waypoints inside the home community
        const double dwell = uniform_in(rng, 0.5, 1.5) * mean_home_dwell;
        const double phase_end = t + dwell;
        while (t < phase_end && t < cfg.horizon) {
            add_leg(random_point_in(rng, home));
            add_pause(uniform_in(rng, 0.0, cfg.pause_max));
        }
        if (t >= cfg.horizon) break;
        // excursion to another community (or across the home one if alone)
        const auto& away = communities.size() > 1
                               ? communities[(static_cast<std::size_t>(user) + 1 +
                                              uniform_index(rng, communities.size() - 1)) %
                                             communities.size()]
                               : home;
        add_leg(random_point_in(rng, away));
        add_pause(uniform_in(rng, 0.0, cfg.pause_max));
        add_leg(random_point_in(rng, home));
    }
    if (path.empty()) path.push_back({0.0, 0.0, pos, pos});
    return path;
}

/// Realized home-time fraction for a given dwell, integrated over the
/// piecewise-linear paths (16-point midpoint rule per segment).
inline double measure_home_fraction(const MobilityConfig& cfg,
                                    const std::vector<Rect>& communities, double dwell) {
    double inside_time = 0.0;
    double total_time = 0.0;
    for (std::int32_t user = 0; user < cfg.users; ++user) {
        const auto& home = communities[static_cast<std::size_t>(user) % communities.size()];
        const auto path = build_user_path(cfg, communities, user, dwell);
        for (const auto& seg : path) {
            const double t1 = std::min(seg.t1, cfg.horizon);
            if (t1 <= seg.t0) continue;
            const int steps = 16;
            double in = 0.0;
            for (int s = 0; s < steps; ++s) {
                const double t = seg.t0 + (t1 - seg.t0) * (s + 0.5) / steps;
                const auto p = seg.at(t);
                if (home.contains(p.x, p.y)) in += 1.0;
            }
            inside_time += (t1 - seg.t0) * in / steps;
            total_time += t1 - seg.t0;
        }
    }
    return total_time > 0.0 ? inside_time / total_time : 0.0;
}

/// Home dwell calibrated so the realized home-time fraction lands on the
/// configured target: the geometric estimate seeds an odds-ratio fixed-point
/// that absorbs home time leaked by excursion legs and phase overshoot.
inline double calibrated_home_dwell(const MobilityConfig& cfg,
                                    const std::vector<Rect>& communities) {
    const double f = cfg.home_fraction;
    const double odds_target = f / (1.0 - f);
    double dwell = odds_target * mean_excursion_estimate(cfg, communities);
    for (int round = 0; round < 4; ++round) {
        const double m = std::clamp(measure_home_fraction(cfg, communities, dwell), 0.02, 0.98);
        if (std::abs(m - f) <= 0.005) break;
        dwell *= odds_target / (m / (1.0 - m));
        dwell = std::clamp(dwell, 1.0, cfg.horizon);
    }
    return dwell;
}

} // namespace detail

/// Fraction of time users of this config spend inside their home community,
/// measured on the same calibrated paths the trace generator uses.
inline double tvcm_home_fraction(const MobilityConfig& cfg) {
    cfg.validate();
    const auto communities = cfg.resolved_communities();
    return detail::measure_home_fraction(cfg, communities,
                                         detail::calibrated_home_dwell(cfg, communities));
}

/// Community-based mobility trace: each user mostly performs waypoint
/// movement inside its home community and periodically makes a short
/// excursion to another community. Contact events are exact circle-crossing
/// times against the cell disks.
inline ContactTrace generate_tvcm_trace(const MobilityConfig& cfg) {
    cfg.validate();
    const auto communities = cfg.resolved_communities();
    const auto centers = detail::place_cells(cfg);

    ContactTrace trace;
    trace.users = cfg.users;
    trace.cells = cfg.cells;
    trace.horizon = cfg.horizon;

    const double mean_home_dwell = detail::calibrated_home_dwell(cfg, communities);

    for (std::int32_t user = 0; user < cfg.users; ++user) {
        const auto path = detail::build_user_path(cfg, communities, user, mean_home_dwell);

        // convert the path to enter/exit events per cell
        if (cfg.cell_range <= 0.0) continue;
        for (std::int32_t cell = 0; cell < cfg.cells; ++cell) {
            const auto& center = centers[static_cast<std::size_t>(cell)];
            auto inside = [&](detail::Point p) {
                return std::hypot(p.x - center.x, p.y - center.y) < cfg.cell_range;
            };
            bool open = inside(path.front().p0);
            if (open) trace.events.push_back({0.0, user, cell, EventKind::Enter});
            for (const auto& seg : path) {
                if (seg.t0 >= cfg.horizon) break;
                auto crossings = detail::circle_crossings(seg, center, cfg.cell_range);
                crossings.push_back(std::min(seg.t1, cfg.horizon));
                double lo = seg.t0;
                for (double hi : crossings) {
                    if (hi <= lo) continue;
                    if (hi > cfg.horizon) hi = cfg.horizon;
                    const bool now = inside(seg.at(0.5 * (lo + hi)));
                    if (now != open) {
                        trace.events.push_back(
                            {lo, user, cell, now ? EventKind::Enter : EventKind::Exit});
                        open = now;
                    }
                    lo = hi;
                    if (lo >= cfg.horizon) break;
                }
            }
            if (open) trace.events.push_back({cfg.horizon, user, cell, EventKind::Exit});
        }
    }
    detail::sort_events(trace.events);
    return trace;
}

/// Pooled maximum-likelihood exponential rate over all inter-contact gaps
/// (end of one contact to start of the next, per user-cell pair).
inline double estimate_lambda(const ContactTrace& trace) {
    if (trace.events.empty())
        throw EstimationError("trace holds no contacts");

    std::map<std::pair<std::int32_t, std::int32_t>, double> last_exit;
    double gap_sum = 0.0;
    std::int64_t gap_count = 0;
    for (const auto& e : trace.events) {
        const auto key = std::make_pair(e.user, e.cell);
        if (e.kind == EventKind::Enter) {
            auto it = last_exit.find(key);
            if (it != last_exit.end()) {
                gap_sum += e.time - it->second;
                ++gap_count;
            }
        } else {
            last_exit[key] = e.time;
        }
    }
    if (gap_count == 0)
        throw EstimationError("no user-cell pair has two contacts");
    if (!(gap_sum > 0.0))
        throw EstimationError("inter-contact gaps sum to zero");
    return static_cast<double>(gap_count) / gap_sum;
}

/// Writes the spec trace format: header `time,user,cell,kind`, microsecond
/// time precision.
inline void write_trace_csv(const ContactTrace& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out << "time,user,cell,kind\n";
    char buf[64];
    for (const auto& e : trace.events) {
        std::snprintf(buf, sizeof buf, "%.6f", e.time);
        out << buf << ',' << e.user << ',' << e.cell << ','
            << (e.kind == EventKind::Enter ? "enter" : "exit") << '\n';
    }
}

inline ContactTrace load_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open trace file: " + path.string());
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line))
        throw ParseError(path.string(), 1, "missing header");
    ++lineno;
    if (line != "time,user,cell,kind")
        throw ParseError(path.string(), 1, "unexpected header: " + line);

    ContactTrace trace;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        ContactEvent e{};
        char kind[16] = {0};
        if (std::sscanf(line.c_str(), "%lf,%d,%d,%15s", &e.time, &e.user, &e.cell, kind) != 4)
            throw ParseError(path.string(), lineno, "expected time,user,cell,kind");
        if (std::string_view(kind) == "enter")
            e.kind = EventKind::Enter;
        else if (std::string_view(kind) == "exit")
            e.kind = EventKind::Exit;
        else
            throw ParseError(path.string(), lineno, "kind must be enter or exit");
        trace.events.push_back(e);
        trace.users = std::max(trace.users, e.user + 1);
        trace.cells = std::max(trace.cells, e.cell + 1);
        trace.horizon = std::max(trace.horizon, e.time);
    }
    trace.validate();
    return trace;
}

} // namespace softcache
