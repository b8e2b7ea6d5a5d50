#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "json.hpp"
#include "tp2dp2/core.hpp"

namespace tp2dp2 {

// ---------------------------------------------------------------------------
// Gaussian triggering basis
// ---------------------------------------------------------------------------

// g_j(tau): normalized Gaussian bump, zero outside [0, support].
[[nodiscard]] double basis_value(const BasisConfig& basis, int j, double tau) noexcept;

// Integral of g_j over [0, x], with x clamped to the support.
[[nodiscard]] double basis_integral(const BasisConfig& basis, int j, double x) noexcept;

// Largest value g_j takes on [from, support].
[[nodiscard]] double basis_peak(const BasisConfig& basis, int j, double from) noexcept;

// Equally spaced centers on [0, support]; support defaults to three times the
// mean inter-event gap of the dataset.
[[nodiscard]] BasisConfig default_basis(const Dataset& data, int n_basis,
                                        std::optional<double> support = std::nullopt,
                                        std::optional<double> bandwidth = std::nullopt);

// ---------------------------------------------------------------------------
// Hawkes backbone, direct evaluation
// ---------------------------------------------------------------------------

[[nodiscard]] double hawkes_intensity(const HawkesParams& params, std::span<const Event> history,
                                      double t, int d);

[[nodiscard]] double hawkes_total_intensity(const HawkesParams& params, std::span<const Event> history,
                                            double t);

// Per-type integrated intensity over [0, horizon].
[[nodiscard]] std::vector<double> hawkes_compensator(const HawkesParams& params, const EventSequence& seq);

struct LoglikDiagnostic {
    std::optional<std::size_t> zero_intensity_event;
};

// log L = sum_i log lambda_{d_i}(t_i) - int_0^T lambda. Returns -inf (and fills
// the diagnostic) when an observed event sits at zero intensity.
[[nodiscard]] double hawkes_loglik(const HawkesParams& params, const EventSequence& seq,
                                   LoglikDiagnostic* diag = nullptr);

struct HawkesGradient {
    std::vector<double> mu;
    std::vector<double> a;
};

[[nodiscard]] HawkesGradient hawkes_loglik_grad(const HawkesParams& params, const EventSequence& seq);

// ---------------------------------------------------------------------------
// Precomputed sufficient statistics
// ---------------------------------------------------------------------------

// The intensity is linear in (mu, a), so for a fixed basis each sequence reduces
// to per-event excitation features and one compensator feature vector.
struct SequenceFeatures {
    int num_types{1};
    int n_basis{1};
    double horizon{0.0};
    std::vector<int> types;          // per event
    std::vector<double> excitation;  // events x (D * n_basis), layout d_src * n_basis + j
    std::vector<double> compensator; // D * n_basis
    std::vector<std::size_t> counts; // per type

    [[nodiscard]] std::size_t num_events() const noexcept { return types.size(); }
    [[nodiscard]] std::size_t width() const noexcept {
        return static_cast<std::size_t>(num_types) * static_cast<std::size_t>(n_basis);
    }
};

[[nodiscard]] SequenceFeatures compute_features(const EventSequence& seq, int num_types, const BasisConfig& basis);

[[nodiscard]] std::vector<SequenceFeatures> compute_features(const Dataset& data, const BasisConfig& basis);

[[nodiscard]] double feature_loglik(const SequenceFeatures& f, std::span<const double> mu, std::span<const double> a);

// Adds the gradient of feature_loglik into grad_mu / grad_a. Returns the
// log-likelihood, or -inf (gradients untouched) when an intensity hits zero.
double feature_loglik_grad(const SequenceFeatures& f, std::span<const double> mu, std::span<const double> a,
                           std::span<double> grad_mu, std::span<double> grad_a);

// ---------------------------------------------------------------------------
// Intensity models for simulation
// ---------------------------------------------------------------------------

struct DominatingRate {
    double rate{0.0};
    double valid_until{std::numeric_limits<double>::infinity()};
};

// History holds the events generated so far. Intensities use the events
// strictly before t; bounds also account for an event sitting exactly at t.
class IntensityModel {
public:
    virtual ~IntensityModel() = default;

    [[nodiscard]] virtual int num_types() const = 0;
    [[nodiscard]] virtual double intensity(double t, std::span<const Event> history, int d) const = 0;
    // Dominates the total intensity on [t, valid_until) provided no event occurs.
    [[nodiscard]] virtual DominatingRate upper_bound(double t, std::span<const Event> history) const = 0;
    // Coarse bound valid on [t, horizon] with no lookahead window.
    [[nodiscard]] virtual DominatingRate global_bound(double t, double horizon,
                                                      std::span<const Event> history) const;
    [[nodiscard]] virtual nlohmann::ordered_json describe() const = 0;

    [[nodiscard]] double total_intensity(double t, std::span<const Event> history) const;
};

class HawkesModel final : public IntensityModel {
public:
    explicit HawkesModel(HawkesParams params);

    [[nodiscard]] int num_types() const override { return params_.num_types(); }
    [[nodiscard]] double intensity(double t, std::span<const Event> history, int d) const override;
    [[nodiscard]] DominatingRate upper_bound(double t, std::span<const Event> history) const override;
    [[nodiscard]] nlohmann::ordered_json describe() const override;
    [[nodiscard]] const HawkesParams& params() const noexcept { return params_; }

private:
    HawkesParams params_;
};

struct HomogeneousPoisson {
    std::vector<double> rates;
};

// lambda_d(t) = base_d + amplitude_d * sin(2 pi t / period + phase)
struct SinusoidalRate {
    std::vector<double> base;
    std::vector<double> amplitude;
    double period{1.0};
    double phase{0.0};
};

// Linear interpolation between knots, constant outside them.
struct PiecewiseLinearRate {
    std::vector<double> knots;
    std::vector<std::vector<double>> values;  // [type][knot]
};

struct InhomogeneousPoisson {
    std::variant<SinusoidalRate, PiecewiseLinearRate> rate;
};

// lambda_d(t) = exp(drift * t - inhibition * N(t)), N counting all prior events.
struct SelfCorrecting {
    int num_types{1};
    double drift{1.0};
    double inhibition{0.5};
};

using SimOnlyVariant = std::variant<HomogeneousPoisson, InhomogeneousPoisson, SelfCorrecting>;

class SimOnlyModel final : public IntensityModel {
public:
    explicit SimOnlyModel(SimOnlyVariant variant);

    [[nodiscard]] int num_types() const override;
    [[nodiscard]] double intensity(double t, std::span<const Event> history, int d) const override;
    [[nodiscard]] DominatingRate upper_bound(double t, std::span<const Event> history) const override;
    [[nodiscard]] DominatingRate global_bound(double t, double horizon,
                                              std::span<const Event> history) const override;
    [[nodiscard]] nlohmann::ordered_json describe() const override;
    [[nodiscard]] const SimOnlyVariant& variant() const noexcept { return variant_; }

private:
    SimOnlyVariant variant_;
};

[[nodiscard]] double sim_intensity(const SimOnlyModel& model, double t, std::span<const Event> history, int d = 0);

}  // namespace tp2dp2
