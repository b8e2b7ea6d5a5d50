#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tp2dp2/backbone.hpp"
#include "tp2dp2/core.hpp"
#include "tp2dp2/random.hpp"

namespace tp2dp2 {

enum class BoundMode {
    Windowed,  // model.upper_bound with its lookahead window
    Global,    // model.global_bound, valid up to the horizon
};

// Ogata thinning on [0, horizon]. Throws NumericalError when the model's bound
// is exceeded.
[[nodiscard]] EventSequence thinning_sample(const IntensityModel& model, double horizon, Rng& rng,
                                            BoundMode mode = BoundMode::Windowed);
[[nodiscard]] EventSequence thinning_sample(const IntensityModel& model, double horizon, std::uint64_t seed,
                                            BoundMode mode = BoundMode::Windowed);

struct MixtureComponentSpec {
    std::shared_ptr<const IntensityModel> model;
    double weight{1.0};
    std::string name;
};

struct MixtureSpec {
    std::vector<MixtureComponentSpec> components;
    // Exactly one of the two: a fixed count per component, or a total drawn
    // from the mixture weights.
    std::optional<std::size_t> n_per_component;
    std::optional<std::size_t> num_sequences;
    double horizon{1.0};
    std::uint64_t seed{0};

    void validate() const;
};

// Sequence n uses the stream derived from (seed, n); labels are 1-based.
[[nodiscard]] Dataset simulate_mixture(const MixtureSpec& spec);

// Rebuilds a model from the JSON produced by IntensityModel::describe().
[[nodiscard]] std::shared_ptr<const IntensityModel> model_from_json(const nlohmann::json& j);

inline constexpr double kDeltaHorizon = 20.0;
inline constexpr double kHybridHorizon = 20.0;

// K Hawkes clusters on D=3 with mu_m = (0.5 + delta (m-1)) 1 and a shared
// triggering kernel.
[[nodiscard]] Dataset build_hawkes_delta_dataset(int k, double delta, std::size_t n_per_cluster,
                                                 std::uint64_t seed, double horizon = kDeltaHorizon);

// K=3: Homo + Inhomo + Hawkes; K=4 adds a self-correcting component; K=5 adds a
// second Hawkes with randomized parameters.
[[nodiscard]] Dataset build_hybrid_dataset(int k, std::size_t n_per_cluster, double horizon, std::uint64_t seed);

// Homogeneous Poisson clusters, one per rate, on num_types types.
[[nodiscard]] Dataset build_poisson_dataset(const std::vector<double>& rates, int num_types,
                                            std::size_t n_per_cluster, double horizon, std::uint64_t seed);

// Dispatches on "recipe": "hawkes-delta", "hybrid", "poisson" or "mixture".
[[nodiscard]] Dataset simulate_recipe(const nlohmann::json& recipe);

}  // namespace tp2dp2
