#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tp2dp2/backbone.hpp"
#include "tp2dp2/core.hpp"

namespace tp2dp2 {

struct PretrainConfig {
    int m_init{4};
    int rounds{5};
    int gd_steps{25};
    double learning_rate{1.0};
    std::uint64_t seed{0};

    void validate() const;
};

// Preconditioned projected gradient ascent on the summed log-likelihood of the
// given sequences. The step theta += lr * theta * grad / (total horizon or
// compensator feature) is the EM update at lr = 1 and never decreases the
// objective for lr <= 1. Returns the final log-likelihood.
double fit_hawkes_cluster(std::span<const SequenceFeatures> features, std::span<const std::size_t> members,
                          std::vector<double>& mu, std::vector<double>& a, int steps, double learning_rate);

// Hard EM: random assignment, then `rounds` of per-cluster fitting followed by
// argmax reassignment. Empty clusters are dropped. When `objective` is given it
// receives sum_n max_m log L after the initialization and after each round.
[[nodiscard]] MixtureState pretrain_mixture(const Dataset& data, std::span<const SequenceFeatures> features,
                                            const BasisConfig& basis, const PretrainConfig& config,
                                            std::vector<double>* objective = nullptr);

}  // namespace tp2dp2
