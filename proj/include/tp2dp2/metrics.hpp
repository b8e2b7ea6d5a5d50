#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "tp2dp2/core.hpp"
#include "tp2dp2/posterior.hpp"

namespace tp2dp2 {

// (1/N) sum over predicted clusters of the largest overlap with a true class.
[[nodiscard]] double purity(std::span<const int> pred, std::span<const int> truth);

// Adjusted Rand index from the contingency table.
[[nodiscard]] double ari(std::span<const int> pred, std::span<const int> truth);

// Mean per-event log-likelihood of the mixture with weights r_m / t over all
// components of the state (allocated and non-allocated).
[[nodiscard]] double ell(const MixtureState& state, std::span<const SequenceFeatures> eval);

struct CountSummary {
    double mean{0.0};
    std::map<std::size_t, std::size_t> histogram;
    std::size_t mode{0};

    [[nodiscard]] nlohmann::ordered_json to_json() const;
};

[[nodiscard]] CountSummary m_summary(std::span<const std::size_t> k_trace);

struct EvalResult {
    std::optional<double> purity;
    std::optional<double> ari;
    std::optional<double> ell;
    std::optional<double> m_posterior_mean;
    std::map<std::size_t, std::size_t> m_histogram;

    [[nodiscard]] nlohmann::ordered_json to_json() const;
};

}  // namespace tp2dp2
