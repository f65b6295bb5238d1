// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "softcache/placement.hpp"

namespace test_helpers {

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("softcache_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

    std::filesystem::path write(const std::string& name, const std::string& content) const {
        auto p = path_ / name;
        std::ofstream out(p);
        out << content;
        return p;
    }

private:
    std::filesystem::path path_;
};

/// Central-difference gradient of a scalar function of a placement.
inline std::vector<double> central_difference_gradient(
    const std::function<double(const softcache::PlacementVector&)>& f,
    softcache::PlacementVector x, double h) {
    std::vector<double> grad(x.n.size());
    for (std::size_t i = 0; i < x.n.size(); ++i) {
        const double saved = x.n[i];
        x.n[i] = saved + h;
        const double up = f(x);
        x.n[i] = saved - h;
        const double down = f(x);
        x.n[i] = saved;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

/// Central-difference Hessian (for small K only).
inline std::vector<std::vector<double>> central_difference_hessian(
    const std::function<double(const softcache::PlacementVector&)>& f,
    const softcache::PlacementVector& x, double h) {
    const std::size_t k = x.n.size();
    auto shifted = [&](std::size_t i, double di, std::size_t j, double dj) {
        auto y = x;
        y.n[i] += di;
        y.n[j] += dj;
        return f(y);
    };
    std::vector<std::vector<double>> hess(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            hess[i][j] = (shifted(i, h, j, h) - shifted(i, h, j, -h) - shifted(i, -h, j, h) +
                          shifted(i, -h, j, -h)) /
                         (4.0 * h * h);
    return hess;
}

/// Best integer placement objective by exhaustive enumeration, for desk-scale
/// oracles (K <= 6, M <= 4).
inline double best_integer_objective(
    int k, int cells, int total_capacity,
    const std::function<double(const std::vector<double>&)>& objective) {
    std::vector<double> n(static_cast<std::size_t>(k), 0.0);
    double best = -1.0;
    std::function<void(int, int)> rec = [&](int idx, int remaining) {
        if (idx == k) {
            best = std::max(best, objective(n));
            return;
        }
        for (int v = 0; v <= std::min(cells, remaining); ++v) {
            n[static_cast<std::size_t>(idx)] = v;
            rec(idx + 1, remaining - v);
        }
        n[static_cast<std::size_t>(idx)] = 0;
    };
    rec(0, total_capacity);
    return best;
}

inline double mean(const std::vector<double>& xs) {
    return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
}

/// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> order(v.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
        std::vector<double> r(v.size());
        std::size_t i = 0;
        while (i < order.size()) {
            std::size_t j = i;
            while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
            const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
            for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const double ma = mean(ra), mb = mean(rb);
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - mb) * (rb[i] - mb);
    }
    return num / std::sqrt(da * db);
}

/// Kolmogorov-Smirnov statistic of samples against a reference CDF.
inline double ks_statistic(std::vector<double> samples,
                           const std::function<double(double)>& cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

/// Asymptotic Kolmogorov distribution tail: Q(x) = 2 sum (-1)^{k-1} e^{-2k^2x^2}.
inline double ks_p_value(double d, double n_effective) {
    const double x = (std::sqrt(n_effective) + 0.12 + 0.11 / std::sqrt(n_effective)) * d;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * x * x);
        sum += term;
        if (std::abs(term) < 1e-12) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

/// Two-sample KS test p-value.
inline double ks_two_sample_p(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return ks_p_value(d, na * nb / (na + nb));
}

} // namespace test_helpers
