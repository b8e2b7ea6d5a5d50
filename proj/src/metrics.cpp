#include "tp2dp2/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tp2dp2 {

namespace {

struct Contingency {
    std::map<std::pair<int, int>, std::size_t> cells;
    std::map<int, std::size_t> rows;
    std::map<int, std::size_t> cols;
};

Contingency tabulate(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() != truth.size()) {
        throw std::invalid_argument("label vectors differ in length");
    }
    Contingency t;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        ++t.cells[{pred[i], truth[i]}];
        ++t.rows[pred[i]];
        ++t.cols[truth[i]];
    }
    return t;
}

double pairs(std::size_t n) { return 0.5 * static_cast<double>(n) * (static_cast<double>(n) - 1.0); }

}  // namespace

double purity(std::span<const int> pred, std::span<const int> truth) {
    if (pred.empty()) {
        throw std::invalid_argument("purity needs at least one label");
    }
    const auto t = tabulate(pred, truth);
    std::map<int, std::size_t> best;
    for (const auto& [key, n] : t.cells) {
        best[key.first] = std::max(best[key.first], n);
    }
    std::size_t total = 0;
    for (const auto& [cluster, n] : best) {
        total += n;
    }
    return static_cast<double>(total) / static_cast<double>(pred.size());
}

double ari(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() < 2) {
        throw std::invalid_argument("ari needs at least two labels");
    }
    const auto t = tabulate(pred, truth);
    double index = 0.0;
    for (const auto& [key, n] : t.cells) {
        index += pairs(n);
    }
    double a = 0.0;
    for (const auto& [key, n] : t.rows) {
        a += pairs(n);
    }
    double b = 0.0;
    for (const auto& [key, n] : t.cols) {
        b += pairs(n);
    }
    const double expected = a * b / pairs(pred.size());
    const double max_index = 0.5 * (a + b);
    if (max_index == expected) {
        return 1.0;
    }
    return (index - expected) / (max_index - expected);
}

double ell(const MixtureState& state, std::span<const SequenceFeatures> eval) {
    std::size_t events = 0;
    for (const auto& f : eval) {
        events += f.num_events();
    }
    if (events == 0) {
        throw std::invalid_argument("ELL needs an evaluation set with at least one event");
    }
    const double t = state.total_weight();
    std::vector<double> terms(state.total_components());
    double total = 0.0;
    for (const auto& f : eval) {
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < terms.size(); ++m) {
            const auto& c = state.component(m);
            terms[m] = std::log(c.r / t) + feature_loglik(f, c.mu, c.w);
            top = std::max(top, terms[m]);
        }
        if (!std::isfinite(top)) {
            return -std::numeric_limits<double>::infinity();
        }
        double sum = 0.0;
        for (double v : terms) {
            sum += std::exp(v - top);
        }
        total += top + std::log(sum);
    }
    return total / static_cast<double>(events);
}

CountSummary m_summary(std::span<const std::size_t> k_trace) {
    if (k_trace.empty()) {
        throw std::invalid_argument("cluster-count summary needs a non-empty trace");
    }
    CountSummary s;
    double sum = 0.0;
    for (std::size_t k : k_trace) {
        sum += static_cast<double>(k);
        ++s.histogram[k];
    }
    s.mean = sum / static_cast<double>(k_trace.size());
    std::size_t best = 0;
    for (const auto& [k, n] : s.histogram) {
        if (n > best) {
            best = n;
            s.mode = k;
        }
    }
    return s;
}

namespace {

nlohmann::ordered_json histogram_json(const std::map<std::size_t, std::size_t>& h) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, n] : h) {
        j[std::to_string(k)] = n;
    }
    return j;
}

}  // namespace

nlohmann::ordered_json CountSummary::to_json() const {
    return {{"mean", mean}, {"mode", mode}, {"histogram", histogram_json(histogram)}};
}

nlohmann::ordered_json EvalResult::to_json() const {
    nlohmann::ordered_json j;
    const auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(); };
    j["purity"] = opt(purity);
    j["ari"] = opt(ari);
    j["ell"] = opt(ell);
    j["m_posterior_mean"] = opt(m_posterior_mean);
    j["m_histogram"] = histogram_json(m_histogram);
    return j;
}

}  // namespace tp2dp2
