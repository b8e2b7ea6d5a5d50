#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "tp2dp2/backbone.hpp"
#include "tp2dp2/core.hpp"
#include "tp2dp2/random.hpp"

namespace oracle {

// Adaptive Gauss-Kronrod integral of f over [a, b], split at the given breakpoints.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        std::vector<double> breaks = {}) {
    breaks.push_back(a);
    breaks.push_back(b);
    std::sort(breaks.begin(), breaks.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double lo = std::max(a, breaks[i]);
        const double hi = std::min(b, breaks[i + 1]);
        if (hi > lo) {
            total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 8, 1e-11);
        }
    }
    return total;
}

// Integral of the total Hawkes intensity over [0, T], breaking at every event
// and at every point where a triggering bump enters or leaves its support.
inline double compensator_by_quadrature(const tp2dp2::HawkesParams& p, const tp2dp2::EventSequence& seq) {
    std::vector<double> breaks;
    for (const auto& e : seq.events) {
        breaks.push_back(e.time);
        breaks.push_back(e.time + p.basis.support);
        for (double c : p.basis.centers) {
            breaks.push_back(e.time + c);
        }
    }
    const auto f = [&](double t) { return tp2dp2::hawkes_total_intensity(p, seq.events, t); };
    return integrate(f, 0.0, seq.horizon, breaks);
}

// Asymptotic Kolmogorov survival function Q(x) = 2 sum (-1)^{k-1} exp(-2 k^2 x^2).
inline double kolmogorov_q(double x) {
    if (x < 0.2) {
        return 1.0;
    }
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        sum += (k % 2 == 1 ? 1.0 : -1.0) * term;
        if (term < 1e-16) {
            break;
        }
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

// One-sample KS p-value against a continuous cdf.
inline double ks_pvalue(std::vector<double> x, const std::function<double(double)>& cdf) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    const double sn = std::sqrt(n);
    return kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
}

// Two-sample KS p-value.
inline double ks_pvalue(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double t = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= t) {
            ++i;
        }
        while (j < b.size() && b[j] <= t) {
            ++j;
        }
        d = std::max(d, std::abs(static_cast<double>(i) / static_cast<double>(a.size()) -
                                 static_cast<double>(j) / static_cast<double>(b.size())));
    }
    const double ne = static_cast<double>(a.size()) * static_cast<double>(b.size()) /
                      static_cast<double>(a.size() + b.size());
    const double sn = std::sqrt(ne);
    return kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
}

// Adjusted Rand index by enumerating all N(N-1)/2 pairs.
inline double ari_by_pairs(std::span<const int> pred, std::span<const int> truth) {
    double both = 0.0;
    double same_pred = 0.0;
    double same_truth = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        for (std::size_t j = i + 1; j < pred.size(); ++j) {
            const bool p = pred[i] == pred[j];
            const bool t = truth[i] == truth[j];
            both += (p && t) ? 1.0 : 0.0;
            same_pred += p ? 1.0 : 0.0;
            same_truth += t ? 1.0 : 0.0;
            pairs += 1.0;
        }
    }
    const double expected = same_pred * same_truth / pairs;
    const double max_index = 0.5 * (same_pred + same_truth);
    if (max_index == expected) {
        return 1.0;
    }
    return (both - expected) / (max_index - expected);
}

// Random-walk Metropolis on (0, inf) for an unnormalized log density.
inline std::vector<double> metropolis(const std::function<double(double)>& log_density, double start, double scale,
                                      std::size_t draws, std::size_t thin, tp2dp2::Rng& rng) {
    std::normal_distribution<double> step(0.0, scale);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double x = start;
    double lx = log_density(x);
    std::vector<double> out;
    out.reserve(draws);
    for (std::size_t it = 0; out.size() < draws; ++it) {
        const double y = x + step(rng);
        if (y > 0.0) {
            const double ly = log_density(y);
            if (std::log(unif(rng)) < ly - lx) {
                x = y;
                lx = ly;
            }
        }
        if (it >= 1000 && it % thin == 0) {
            out.push_back(x);
        }
    }
    return out;
}

}  // namespace oracle
