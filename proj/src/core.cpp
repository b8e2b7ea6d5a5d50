#include "tp2dp2/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace tp2dp2 {

std::vector<std::size_t> EventSequence::type_counts(int num_types) const {
    std::vector<std::size_t> counts(static_cast<std::size_t>(std::max(num_types, 0)), 0);
    for (const auto& e : events) {
        if (e.type >= 0 && e.type < num_types) {
            ++counts[static_cast<std::size_t>(e.type)];
        }
    }
    return counts;
}

std::size_t Dataset::total_events() const noexcept {
    std::size_t total = 0;
    for (const auto& s : sequences) {
        total += s.size();
    }
    return total;
}

double Dataset::total_time() const noexcept {
    double total = 0.0;
    for (const auto& s : sequences) {
        total += s.horizon;
    }
    return total;
}

bool Dataset::has_labels() const noexcept {
    return !sequences.empty() &&
           std::all_of(sequences.begin(), sequences.end(), [](const auto& s) { return s.label.has_value(); });
}

std::vector<int> Dataset::labels() const {
    std::vector<int> out;
    out.reserve(sequences.size());
    for (const auto& s : sequences) {
        if (!s.label) {
            throw DatasetError("sequence '" + s.id + "' carries no label");
        }
        out.push_back(*s.label);
    }
    return out;
}

std::vector<Violation> validate_dataset(const Dataset& data) {
    std::vector<Violation> out;
    if (data.sequences.empty()) {
        out.push_back({"", "non-empty", "dataset holds no sequences"});
    }
    if (data.num_types < 1) {
        out.push_back({"", "type-count", "dataset declares D < 1"});
    }
    std::set<std::string> seen;
    for (const auto& s : data.sequences) {
        if (!seen.insert(s.id).second) {
            out.push_back({s.id, "unique-id", "sequence id appears more than once"});
        }
        if (!std::isfinite(s.horizon) || s.horizon < 0.0) {
            out.push_back({s.id, "horizon", "horizon T must be finite and non-negative"});
        }
        double prev = 0.0;
        for (std::size_t i = 0; i < s.events.size(); ++i) {
            const auto& e = s.events[i];
            if (!std::isfinite(e.time) || e.time <= prev) {
                std::ostringstream msg;
                msg << "event " << i << " at t=" << e.time << " does not follow t=" << prev;
                out.push_back({s.id, "monotonicity", msg.str()});
            }
            if (e.time > s.horizon) {
                std::ostringstream msg;
                msg << "event " << i << " at t=" << e.time << " exceeds T=" << s.horizon;
                out.push_back({s.id, "horizon", msg.str()});
            }
            if (e.type < 0 || e.type >= data.num_types) {
                std::ostringstream msg;
                msg << "event " << i << " has type " << e.type + 1 << " outside 1.." << data.num_types;
                out.push_back({s.id, "type-range", msg.str()});
            }
            if (std::isfinite(e.time)) {
                prev = std::max(prev, e.time);
            }
        }
    }
    return out;
}

void BasisConfig::validate() const {
    if (centers.empty()) {
        throw ConfigError("basis needs at least one center");
    }
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
        throw ConfigError("basis bandwidth must be positive");
    }
    if (!(support > 0.0) || !std::isfinite(support)) {
        throw ConfigError("basis support must be positive");
    }
    for (std::size_t j = 0; j < centers.size(); ++j) {
        if (centers[j] < 0.0 || centers[j] > support) {
            throw ConfigError("basis centers must lie in [0, support]");
        }
        if (j > 0 && centers[j] <= centers[j - 1]) {
            throw ConfigError("basis centers must be strictly increasing");
        }
    }
}

HawkesParams::HawkesParams(std::vector<double> mu_, std::vector<double> a_, BasisConfig basis_)
    : mu(std::move(mu_)), a(std::move(a_)), basis(std::move(basis_)) {
    validate();
}

void HawkesParams::validate() const {
    basis.validate();
    const std::size_t d = mu.size();
    if (d == 0) {
        throw ConfigError("HawkesParams needs at least one event type");
    }
    if (a.size() != d * d * static_cast<std::size_t>(basis.size())) {
        throw ConfigError("triggering tensor must have D*D*n_basis entries");
    }
    for (double m : mu) {
        if (!(m > 0.0) || !std::isfinite(m)) {
            throw ConfigError("base intensities must be strictly positive");
        }
    }
    for (double v : a) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw ConfigError("triggering coefficients must be non-negative");
        }
    }
}

double MixtureState::total_weight() const noexcept {
    double t = 0.0;
    for (const auto& c : allocated) {
        t += c.r;
    }
    for (const auto& c : non_allocated) {
        t += c.r;
    }
    return t;
}

std::vector<int> MixtureState::cluster_sizes() const {
    std::vector<int> n(allocated.size(), 0);
    for (int c : labels) {
        if (c >= 0 && static_cast<std::size_t>(c) < n.size()) {
            ++n[static_cast<std::size_t>(c)];
        }
    }
    return n;
}

const Component& MixtureState::component(std::size_t m) const {
    return m < allocated.size() ? allocated.at(m) : non_allocated.at(m - allocated.size());
}

HawkesParams MixtureState::params(std::size_t m) const {
    const auto& c = component(m);
    HawkesParams p;
    p.mu = c.mu;
    p.a = c.w;
    p.basis = basis;
    return p;
}

void MixtureState::check_invariants(std::size_t num_sequences) const {
    if (labels.size() != num_sequences) {
        throw std::logic_error("allocation vector length differs from N");
    }
    for (int c : labels) {
        if (c < 0 || static_cast<std::size_t>(c) >= allocated.size()) {
            throw std::logic_error("allocation references a non-allocated component");
        }
    }
    const auto n = cluster_sizes();
    if (std::any_of(n.begin(), n.end(), [](int v) { return v < 1; })) {
        throw std::logic_error("allocated component without sequences");
    }
    if (static_cast<std::size_t>(std::accumulate(n.begin(), n.end(), 0)) != num_sequences) {
        throw std::logic_error("cluster sizes do not sum to N");
    }
    const auto check = [](const Component& c) {
        if (!(c.r > 0.0) || !std::isfinite(c.r)) {
            throw std::logic_error("component weight r must be positive");
        }
    };
    std::for_each(allocated.begin(), allocated.end(), check);
    std::for_each(non_allocated.begin(), non_allocated.end(), check);
    if (!(u > 0.0) || !std::isfinite(u)) {
        throw std::logic_error("ancillary variable u must be positive");
    }
}

double SgldSchedule::step_size(std::size_t iteration) const {
    return eps0 * std::pow(offset + static_cast<double>(iteration), -decay);
}

void SgldSchedule::validate() const {
    if (!(eps0 > 0.0)) {
        throw ConfigError("sgld eps0 must be positive");
    }
    if (!(decay > 0.5 && decay <= 1.0)) {
        throw ConfigError("sgld decay exponent must lie in (0.5, 1]");
    }
    if (!(offset >= 0.0)) {
        throw ConfigError("sgld offset must be non-negative");
    }
}

void PriorBundle::validate() const {
    if (!(weight_rate > 0.0)) {
        throw ConfigError("prior weight_rate must be positive");
    }
    if (dpp.rho && !(*dpp.rho > 0.0)) {
        throw ConfigError("dpp rho must be positive");
    }
    if (!(dpp.alpha > 0.0)) {
        throw ConfigError("dpp alpha must be positive");
    }
    if (dpp.lattice_half_width < 0) {
        throw ConfigError("dpp lattice half-width must be non-negative");
    }
    sgld.validate();
}

}  // namespace tp2dp2
