#pragma once

#include <atomic>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tp2dp2/config.hpp"
#include "tp2dp2/core.hpp"
#include "tp2dp2/metrics.hpp"
#include "tp2dp2/sampler.hpp"

namespace tp2dp2 {

// Seeded split into (train, held-out); the held-out part has
// round(fraction * N) sequences, at most N - 1.
[[nodiscard]] std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double holdout_fraction,
                                                        std::uint64_t seed);

[[nodiscard]] Dataset load_config_dataset(const RunConfig& config);

struct FitOutput {
    SamplerResult sampler;
    nlohmann::ordered_json report;
    nlohmann::ordered_json timing;
};

// Pretrain, sample and summarize. The report is deterministic given the data and
// config; wall-clock figures go to `timing` only.
[[nodiscard]] FitOutput fit_dataset(const Dataset& data, const RunConfig& config,
                                    const std::atomic<bool>* stop = nullptr);

// Purity/ARI against dataset labels for the sequences the report labels (when
// the dataset is labeled), ELL of the MAP mixture on the dataset's sequences
// listed as held out (or on all of them when none are), and the k summary.
[[nodiscard]] EvalResult evaluate_report(const nlohmann::json& report, const Dataset& data);

[[nodiscard]] MixtureState state_from_report(const nlohmann::json& report);

}  // namespace tp2dp2
