#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "tp2dp2/core.hpp"

namespace tp2dp2 {

using Point = std::vector<double>;

// Axis-aligned box the central parameters live in.
struct DomainBox {
    std::vector<double> lo;
    std::vector<double> hi;

    [[nodiscard]] std::size_t dim() const noexcept { return lo.size(); }
    [[nodiscard]] bool contains(std::span<const double> x) const noexcept;
    [[nodiscard]] Point to_unit(std::span<const double> x) const;
    [[nodiscard]] Point from_unit(std::span<const double> z) const;
    void validate() const;
};

// SequenceRange: per type, [0.5 * smallest per-sequence rate, 2 * largest].
// GlobalMean: [lambda/2, 2 lambda] with lambda = total events / total time.
[[nodiscard]] DomainBox domain_box(const Dataset& data, DomainRule rule);

struct DppSpectralModel {
    int dim{1};
    int half_width{2};
    double rho{1.0};
    double alpha{0.1};
    DomainBox domain;
    std::vector<int> lattice;         // lattice points, dim entries each
    std::vector<double> phi;          // per lattice point, clipped below 1
    std::vector<double> phi_tilde;    // phi / (1 - phi)
    double d_app{0.0};
    double diagonal{0.0};             // sum of phi_tilde = kernel at zero lag
    std::size_t clipped{0};

    [[nodiscard]] std::size_t lattice_size() const noexcept { return phi.size(); }
    // Kernel between two points already in unit-cube coordinates.
    [[nodiscard]] double kernel_unit(std::span<const double> x, std::span<const double> y) const;
    // Imaginary part of the same sum; zero up to rounding by lattice symmetry.
    [[nodiscard]] double kernel_unit_imag(std::span<const double> x, std::span<const double> y) const;
    [[nodiscard]] nlohmann::ordered_json summary() const;
};

inline constexpr double kPhiCeiling = 1.0 - 1e-6;

[[nodiscard]] DppSpectralModel build_spectral_model(int q, int half_width, double rho, double alpha,
                                                    DomainBox domain);

// rho giving an expected point count of `expected_points` on the truncated lattice.
[[nodiscard]] double default_rho(int q, int half_width, double alpha, double expected_points);

// 1 - D_app + log det K over the rescaled points; -inf outside the box or for a
// numerically singular Gram matrix.
[[nodiscard]] double dpp_log_density(const DppSpectralModel& model, std::span<const Point> points);

// log density(base - remove + add) - log density(base) via Schur complements.
[[nodiscard]] double dpp_log_ratio(const DppSpectralModel& model, std::span<const Point> base,
                                   const Point* add, std::optional<std::size_t> remove);

}  // namespace tp2dp2
