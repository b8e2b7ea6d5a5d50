#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <vector>

#include "tp2dp2/backbone.hpp"
#include "tp2dp2/core.hpp"
#include "tp2dp2/dpp.hpp"

namespace tp2dp2 {

// Everything the posterior needs besides the state: precomputed sequence
// features, priors and the DPP model. Immutable once built.
struct PosteriorContext {
    std::vector<SequenceFeatures> features;
    BasisConfig basis;
    PriorBundle prior;
    DppSpectralModel dpp;
    int num_types{1};
    double total_time{0.0};
    std::vector<std::size_t> type_totals;  // events per type over the dataset

    [[nodiscard]] std::size_t num_sequences() const noexcept { return features.size(); }
    [[nodiscard]] double seq_loglik(std::size_t n, const Component& c) const;
};

// rho is taken from the prior when set, otherwise sized so the DPP expects
// `expected_points` points.
[[nodiscard]] PosteriorContext make_posterior_context(const Dataset& data, const BasisConfig& basis,
                                                      const PriorBundle& prior, double expected_points);

// Exponential prior on every triggering coefficient.
[[nodiscard]] double log_weight_prior(std::span<const double> w, double rate);
// Gamma(1, 1) prior on the unnormalized weights.
[[nodiscard]] double log_r_prior(double r);

// Centers of all components, allocated first.
[[nodiscard]] std::vector<Point> all_centers(const MixtureState& state);

// Per-component log-likelihood of every sequence, memoized by exact parameter
// values.
class LoglikCache {
public:
    explicit LoglikCache(const PosteriorContext& ctx) : ctx_(&ctx) {}

    [[nodiscard]] double get(std::size_t n, const Component& c);
    // Log-likelihood of all sequences under c; valid until the next retain().
    [[nodiscard]] const std::vector<double>& all(const Component& c);
    // Drops entries no longer used by any component of the state.
    void retain(const MixtureState& state);
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }

private:
    struct Entry {
        std::vector<double> mu;
        std::vector<double> w;
        std::vector<double> ll;
        std::vector<char> ready;
        std::size_t ready_count{0};
    };
    Entry& entry(const Component& c);
    double fill(Entry& e, std::size_t n);

    const PosteriorContext* ctx_;
    std::deque<Entry> entries_;  // stable references across insertions
};

// Log of the unnormalized joint posterior of a mixture state.
[[nodiscard]] double state_log_joint(const MixtureState& state, const PosteriorContext& ctx);
[[nodiscard]] double state_log_joint(const MixtureState& state, const PosteriorContext& ctx, LoglikCache& cache);

}  // namespace tp2dp2
