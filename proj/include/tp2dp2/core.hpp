#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace tp2dp2 {

// Error kinds surfaced across module boundaries. The C API maps these onto
// status codes; the CLI maps them onto exit codes.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Event {
    double time{0.0};
    int type{0};  // 0-based internally, 1-based on disk

    bool operator==(const Event&) const = default;
};

struct EventSequence {
    std::string id;
    double horizon{0.0};
    std::vector<Event> events;
    std::optional<int> label;

    [[nodiscard]] std::size_t size() const noexcept { return events.size(); }
    [[nodiscard]] std::vector<std::size_t> type_counts(int num_types) const;
    bool operator==(const EventSequence&) const = default;
};

struct Dataset {
    std::vector<EventSequence> sequences;
    int num_types{1};
    nlohmann::ordered_json metadata = nlohmann::ordered_json::object();

    [[nodiscard]] std::size_t size() const noexcept { return sequences.size(); }
    [[nodiscard]] std::size_t total_events() const noexcept;
    [[nodiscard]] double total_time() const noexcept;
    [[nodiscard]] bool has_labels() const noexcept;
    [[nodiscard]] std::vector<int> labels() const;
};

struct Violation {
    std::string sequence_id;
    std::string rule;
    std::string detail;
};

// Reports every broken EventSequence/Dataset invariant; empty when valid.
[[nodiscard]] std::vector<Violation> validate_dataset(const Dataset& data);

// Gaussian triggering basis shared by every component (the fixed, non-inferred
// part of the backbone).
struct BasisConfig {
    std::vector<double> centers;
    double bandwidth{1.0};
    double support{1.0};

    [[nodiscard]] int size() const noexcept { return static_cast<int>(centers.size()); }
    void validate() const;
    bool operator==(const BasisConfig&) const = default;
};

// Triggering coefficients are stored flat: a[(d * D + d_src) * n_basis + j].
struct HawkesParams {
    std::vector<double> mu;
    std::vector<double> a;
    BasisConfig basis;

    HawkesParams() = default;
    HawkesParams(std::vector<double> mu_, std::vector<double> a_, BasisConfig basis_);

    [[nodiscard]] int num_types() const noexcept { return static_cast<int>(mu.size()); }
    [[nodiscard]] std::size_t coef_index(int d, int d_src, int j) const noexcept {
        return (static_cast<std::size_t>(d) * mu.size() + static_cast<std::size_t>(d_src)) *
                   static_cast<std::size_t>(basis.size()) +
               static_cast<std::size_t>(j);
    }
    [[nodiscard]] double coef(int d, int d_src, int j) const { return a[coef_index(d, d_src, j)]; }
    void validate() const;
};

// One mixture component's Bayesian subnetwork: central mu, non-central w
// (the flattened triggering tensor) and its unnormalized weight r.
struct Component {
    std::vector<double> mu;
    std::vector<double> w;
    double r{1.0};

    bool operator==(const Component&) const = default;
};

struct MixtureState {
    std::vector<Component> allocated;
    std::vector<Component> non_allocated;
    std::vector<int> labels;  // 0-based indices into allocated
    double u{1.0};
    BasisConfig basis;

    [[nodiscard]] std::size_t k() const noexcept { return allocated.size(); }
    [[nodiscard]] std::size_t l() const noexcept { return non_allocated.size(); }
    [[nodiscard]] std::size_t total_components() const noexcept { return k() + l(); }
    [[nodiscard]] double total_weight() const noexcept;
    [[nodiscard]] std::vector<int> cluster_sizes() const;
    [[nodiscard]] const Component& component(std::size_t m) const;
    [[nodiscard]] HawkesParams params(std::size_t m) const;

    // Throws std::logic_error naming the broken invariant.
    void check_invariants(std::size_t num_sequences) const;
};

enum class DomainRule { SequenceRange, GlobalMean };

struct DppPrior {
    std::optional<double> rho;  // resolved from the initial cluster count when absent
    double alpha{0.1};
    int lattice_half_width{2};
    DomainRule domain_rule{DomainRule::SequenceRange};
};

struct SgldSchedule {
    double eps0{1e-4};
    double decay{0.51};
    double offset{100.0};

    [[nodiscard]] double step_size(std::size_t iteration) const;
    void validate() const;
};

struct PriorBundle {
    double weight_rate{5.0};  // exponential prior rate on triggering coefficients
    DppPrior dpp;
    SgldSchedule sgld;

    void validate() const;
};

}  // namespace tp2dp2
