#include "tp2dp2/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace tp2dp2 {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// First index whose event lies within the support window ending at t.
std::size_t window_begin(std::span<const Event> history, double t, double support) {
    const auto it = std::lower_bound(history.begin(), history.end(), t - support,
                                     [](const Event& e, double v) { return e.time < v; });
    return static_cast<std::size_t>(it - history.begin());
}

// One past the last event strictly before t.
std::size_t window_end(std::span<const Event> history, double t) {
    const auto it = std::lower_bound(history.begin(), history.end(), t,
                                     [](const Event& e, double v) { return e.time < v; });
    return static_cast<std::size_t>(it - history.begin());
}

// One past the last event at or before t.
std::size_t window_end_inclusive(std::span<const Event> history, double t) {
    const auto it = std::upper_bound(history.begin(), history.end(), t,
                                     [](double v, const Event& e) { return v < e.time; });
    return static_cast<std::size_t>(it - history.begin());
}

double normal_peak(double sigma) { return 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi)); }

}  // namespace

double basis_value(const BasisConfig& basis, int j, double tau) noexcept {
    if (tau < 0.0 || tau > basis.support) {
        return 0.0;
    }
    const double z = (tau - basis.centers[static_cast<std::size_t>(j)]) / basis.bandwidth;
    return normal_peak(basis.bandwidth) * std::exp(-0.5 * z * z);
}

double basis_integral(const BasisConfig& basis, int j, double x) noexcept {
    if (x <= 0.0) {
        return 0.0;
    }
    x = std::min(x, basis.support);
    const double c = basis.centers[static_cast<std::size_t>(j)];
    const double s = basis.bandwidth * std::numbers::sqrt2;
    return 0.5 * (std::erf((x - c) / s) - std::erf(-c / s));
}

double basis_peak(const BasisConfig& basis, int j, double from) noexcept {
    from = std::max(from, 0.0);
    if (from > basis.support) {
        return 0.0;
    }
    const double c = basis.centers[static_cast<std::size_t>(j)];
    return basis_value(basis, j, std::max(c, from));
}

BasisConfig default_basis(const Dataset& data, int n_basis, std::optional<double> support,
                          std::optional<double> bandwidth) {
    if (n_basis < 1) {
        throw ConfigError("n_basis must be at least 1");
    }
    double tau_max = 0.0;
    if (support) {
        tau_max = *support;
    } else {
        double gap_sum = 0.0;
        std::size_t gaps = 0;
        for (const auto& s : data.sequences) {
            for (std::size_t i = 1; i < s.events.size(); ++i) {
                gap_sum += s.events[i].time - s.events[i - 1].time;
                ++gaps;
            }
        }
        if (gaps > 0) {
            tau_max = 3.0 * gap_sum / static_cast<double>(gaps);
        } else {
            const auto events = data.total_events();
            tau_max = events > 0 ? 3.0 * data.total_time() / static_cast<double>(events) : 1.0;
        }
    }
    if (!(tau_max > 0.0) || !std::isfinite(tau_max)) {
        throw ConfigError("could not derive a positive basis support from the dataset");
    }
    BasisConfig basis;
    basis.support = tau_max;
    if (n_basis == 1) {
        basis.centers = {0.0};
        basis.bandwidth = tau_max / 3.0;
    } else {
        const double spacing = tau_max / static_cast<double>(n_basis - 1);
        for (int j = 0; j < n_basis; ++j) {
            basis.centers.push_back(j == n_basis - 1 ? tau_max : spacing * j);
        }
        basis.bandwidth = spacing;
    }
    if (bandwidth) {
        basis.bandwidth = *bandwidth;
    }
    basis.validate();
    return basis;
}

double hawkes_intensity(const HawkesParams& params, std::span<const Event> history, double t, int d) {
    const auto& basis = params.basis;
    double lambda = params.mu[static_cast<std::size_t>(d)];
    const std::size_t end = window_end(history, t);
    for (std::size_t i = window_begin(history, t, basis.support); i < end; ++i) {
        const double tau = t - history[i].time;
        for (int j = 0; j < basis.size(); ++j) {
            lambda += params.coef(d, history[i].type, j) * basis_value(basis, j, tau);
        }
    }
    return lambda;
}

double hawkes_total_intensity(const HawkesParams& params, std::span<const Event> history, double t) {
    double total = 0.0;
    for (int d = 0; d < params.num_types(); ++d) {
        total += hawkes_intensity(params, history, t, d);
    }
    return total;
}

std::vector<double> hawkes_compensator(const HawkesParams& params, const EventSequence& seq) {
    const int D = params.num_types();
    const auto& basis = params.basis;
    std::vector<double> out(static_cast<std::size_t>(D));
    for (int d = 0; d < D; ++d) {
        out[static_cast<std::size_t>(d)] = params.mu[static_cast<std::size_t>(d)] * seq.horizon;
    }
    for (const auto& e : seq.events) {
        const double remaining = seq.horizon - e.time;
        for (int j = 0; j < basis.size(); ++j) {
            const double mass = basis_integral(basis, j, remaining);
            for (int d = 0; d < D; ++d) {
                out[static_cast<std::size_t>(d)] += params.coef(d, e.type, j) * mass;
            }
        }
    }
    return out;
}

double hawkes_loglik(const HawkesParams& params, const EventSequence& seq, LoglikDiagnostic* diag) {
    const std::span<const Event> events(seq.events);
    double ll = 0.0;
    for (std::size_t k = 0; k < events.size(); ++k) {
        const double lambda = hawkes_intensity(params, events.first(k), events[k].time, events[k].type);
        if (!(lambda > 0.0)) {
            if (diag) {
                diag->zero_intensity_event = k;
            }
            return -kInf;
        }
        ll += std::log(lambda);
    }
    const auto comp = hawkes_compensator(params, seq);
    return ll - std::accumulate(comp.begin(), comp.end(), 0.0);
}

HawkesGradient hawkes_loglik_grad(const HawkesParams& params, const EventSequence& seq) {
    const int D = params.num_types();
    const auto& basis = params.basis;
    HawkesGradient g{std::vector<double>(params.mu.size(), 0.0), std::vector<double>(params.a.size(), 0.0)};
    const std::span<const Event> events(seq.events);

    for (std::size_t k = 0; k < events.size(); ++k) {
        const int d = events[k].type;
        const double t = events[k].time;
        const double lambda = hawkes_intensity(params, events.first(k), t, d);
        if (!(lambda > 0.0)) {
            std::fill(g.mu.begin(), g.mu.end(), std::numeric_limits<double>::quiet_NaN());
            std::fill(g.a.begin(), g.a.end(), std::numeric_limits<double>::quiet_NaN());
            return g;
        }
        const double inv = 1.0 / lambda;
        g.mu[static_cast<std::size_t>(d)] += inv;
        for (std::size_t i = window_begin(events, t, basis.support); i < k; ++i) {
            const double tau = t - events[i].time;
            for (int j = 0; j < basis.size(); ++j) {
                g.a[params.coef_index(d, events[i].type, j)] += basis_value(basis, j, tau) * inv;
            }
        }
    }
    for (auto& v : g.mu) {
        v -= seq.horizon;
    }
    for (const auto& e : events) {
        const double remaining = seq.horizon - e.time;
        for (int j = 0; j < basis.size(); ++j) {
            const double mass = basis_integral(basis, j, remaining);
            for (int d = 0; d < D; ++d) {
                g.a[params.coef_index(d, e.type, j)] -= mass;
            }
        }
    }
    return g;
}

SequenceFeatures compute_features(const EventSequence& seq, int num_types, const BasisConfig& basis) {
    SequenceFeatures f;
    f.num_types = num_types;
    f.n_basis = basis.size();
    f.horizon = seq.horizon;
    const std::size_t width = f.width();
    const std::span<const Event> events(seq.events);
    f.types.reserve(events.size());
    f.excitation.assign(events.size() * width, 0.0);
    f.compensator.assign(width, 0.0);
    f.counts = seq.type_counts(num_types);

    for (std::size_t k = 0; k < events.size(); ++k) {
        f.types.push_back(events[k].type);
        double* row = f.excitation.data() + k * width;
        const double t = events[k].time;
        for (std::size_t i = window_begin(events, t, basis.support); i < k; ++i) {
            const double tau = t - events[i].time;
            for (int j = 0; j < f.n_basis; ++j) {
                row[static_cast<std::size_t>(events[i].type * f.n_basis + j)] += basis_value(basis, j, tau);
            }
        }
    }
    for (const auto& e : events) {
        for (int j = 0; j < f.n_basis; ++j) {
            f.compensator[static_cast<std::size_t>(e.type * f.n_basis + j)] +=
                basis_integral(basis, j, seq.horizon - e.time);
        }
    }
    return f;
}

std::vector<SequenceFeatures> compute_features(const Dataset& data, const BasisConfig& basis) {
    std::vector<SequenceFeatures> out;
    out.reserve(data.size());
    for (const auto& s : data.sequences) {
        out.push_back(compute_features(s, data.num_types, basis));
    }
    return out;
}

double feature_loglik(const SequenceFeatures& f, std::span<const double> mu, std::span<const double> a) {
    const std::size_t width = f.width();
    double ll = 0.0;
    for (std::size_t k = 0; k < f.types.size(); ++k) {
        const auto d = static_cast<std::size_t>(f.types[k]);
        const double* row = f.excitation.data() + k * width;
        const double* coef = a.data() + d * width;
        double lambda = mu[d];
        for (std::size_t s = 0; s < width; ++s) {
            lambda += coef[s] * row[s];
        }
        if (!(lambda > 0.0)) {
            return -kInf;
        }
        ll += std::log(lambda);
    }
    double comp = 0.0;
    for (std::size_t d = 0; d < static_cast<std::size_t>(f.num_types); ++d) {
        comp += mu[d] * f.horizon;
        const double* coef = a.data() + d * width;
        for (std::size_t s = 0; s < width; ++s) {
            comp += coef[s] * f.compensator[s];
        }
    }
    return ll - comp;
}

double feature_loglik_grad(const SequenceFeatures& f, std::span<const double> mu, std::span<const double> a,
                           std::span<double> grad_mu, std::span<double> grad_a) {
    const std::size_t width = f.width();
    const std::size_t D = static_cast<std::size_t>(f.num_types);
    std::vector<double> inv(f.types.size());
    double ll = 0.0;
    for (std::size_t k = 0; k < f.types.size(); ++k) {
        const auto d = static_cast<std::size_t>(f.types[k]);
        const double* row = f.excitation.data() + k * width;
        const double* coef = a.data() + d * width;
        double lambda = mu[d];
        for (std::size_t s = 0; s < width; ++s) {
            lambda += coef[s] * row[s];
        }
        if (!(lambda > 0.0)) {
            return -kInf;
        }
        ll += std::log(lambda);
        inv[k] = 1.0 / lambda;
    }
    for (std::size_t k = 0; k < f.types.size(); ++k) {
        const auto d = static_cast<std::size_t>(f.types[k]);
        const double* row = f.excitation.data() + k * width;
        grad_mu[d] += inv[k];
        double* g = grad_a.data() + d * width;
        for (std::size_t s = 0; s < width; ++s) {
            g[s] += row[s] * inv[k];
        }
    }
    for (std::size_t d = 0; d < D; ++d) {
        grad_mu[d] -= f.horizon;
        ll -= mu[d] * f.horizon;
        const double* coef = a.data() + d * width;
        double* g = grad_a.data() + d * width;
        for (std::size_t s = 0; s < width; ++s) {
            g[s] -= f.compensator[s];
            ll -= coef[s] * f.compensator[s];
        }
    }
    return ll;
}

// ---------------------------------------------------------------------------

DominatingRate IntensityModel::global_bound(double t, double /*horizon*/, std::span<const Event> history) const {
    return upper_bound(t, history);
}

double IntensityModel::total_intensity(double t, std::span<const Event> history) const {
    double total = 0.0;
    for (int d = 0; d < num_types(); ++d) {
        total += intensity(t, history, d);
    }
    return total;
}

HawkesModel::HawkesModel(HawkesParams params) : params_(std::move(params)) { params_.validate(); }

double HawkesModel::intensity(double t, std::span<const Event> history, int d) const {
    return hawkes_intensity(params_, history, t, d);
}

DominatingRate HawkesModel::upper_bound(double t, std::span<const Event> history) const {
    // Every still-active event contributes at most its basis peak over the rest
    // of its support; with no new events this holds for all later times.
    const auto& basis = params_.basis;
    const int D = params_.num_types();
    double rate = std::accumulate(params_.mu.begin(), params_.mu.end(), 0.0);
    const std::size_t end = window_end_inclusive(history, t);
    for (std::size_t i = window_begin(history, t, basis.support); i < end; ++i) {
        const double elapsed = t - history[i].time;
        for (int j = 0; j < basis.size(); ++j) {
            const double peak = basis_peak(basis, j, elapsed);
            for (int d = 0; d < D; ++d) {
                rate += params_.coef(d, history[i].type, j) * peak;
            }
        }
    }
    return {rate, kInf};
}

nlohmann::ordered_json HawkesModel::describe() const {
    nlohmann::ordered_json j;
    j["family"] = "hawkes";
    j["mu"] = params_.mu;
    j["a"] = params_.a;
    j["basis"] = {{"centers", params_.basis.centers},
                  {"bandwidth", params_.basis.bandwidth},
                  {"support", params_.basis.support}};
    return j;
}

SimOnlyModel::SimOnlyModel(SimOnlyVariant variant) : variant_(std::move(variant)) {
    std::visit(
        [](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, HomogeneousPoisson>) {
                if (m.rates.empty()) {
                    throw ConfigError("homogeneous Poisson needs at least one rate");
                }
                for (double r : m.rates) {
                    if (!(r >= 0.0)) {
                        throw ConfigError("Poisson rates must be non-negative");
                    }
                }
            } else if constexpr (std::is_same_v<T, InhomogeneousPoisson>) {
                std::visit(
                    [](const auto& rate) {
                        using R = std::decay_t<decltype(rate)>;
                        if constexpr (std::is_same_v<R, SinusoidalRate>) {
                            if (rate.base.empty() || rate.base.size() != rate.amplitude.size()) {
                                throw ConfigError("sinusoidal rate needs matching base/amplitude vectors");
                            }
                            for (std::size_t d = 0; d < rate.base.size(); ++d) {
                                if (!(rate.base[d] >= std::abs(rate.amplitude[d]))) {
                                    throw ConfigError("sinusoidal rate needs base >= |amplitude|");
                                }
                            }
                            if (!(rate.period > 0.0)) {
                                throw ConfigError("sinusoidal period must be positive");
                            }
                        } else {
                            if (rate.knots.empty() || rate.values.empty()) {
                                throw ConfigError("piecewise-linear rate needs knots and values");
                            }
                            for (std::size_t i = 1; i < rate.knots.size(); ++i) {
                                if (!(rate.knots[i] > rate.knots[i - 1])) {
                                    throw ConfigError("piecewise-linear knots must increase");
                                }
                            }
                            for (const auto& row : rate.values) {
                                if (row.size() != rate.knots.size()) {
                                    throw ConfigError("piecewise-linear values must match knots");
                                }
                                for (double v : row) {
                                    if (!(v >= 0.0)) {
                                        throw ConfigError("piecewise-linear values must be non-negative");
                                    }
                                }
                            }
                        }
                    },
                    m.rate);
            } else {
                if (m.num_types < 1) {
                    throw ConfigError("self-correcting process needs D >= 1");
                }
                if (!(m.drift > 0.0) || !(m.inhibition >= 0.0)) {
                    throw ConfigError("self-correcting needs drift > 0 and inhibition >= 0");
                }
            }
        },
        variant_);
}

int SimOnlyModel::num_types() const {
    return std::visit(
        [](const auto& m) -> int {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, HomogeneousPoisson>) {
                return static_cast<int>(m.rates.size());
            } else if constexpr (std::is_same_v<T, InhomogeneousPoisson>) {
                return std::visit(
                    [](const auto& rate) -> int {
                        using R = std::decay_t<decltype(rate)>;
                        if constexpr (std::is_same_v<R, SinusoidalRate>) {
                            return static_cast<int>(rate.base.size());
                        } else {
                            return static_cast<int>(rate.values.size());
                        }
                    },
                    m.rate);
            } else {
                return m.num_types;
            }
        },
        variant_);
}

namespace {

double piecewise_linear(const PiecewiseLinearRate& rate, int d, double t) {
    const auto& knots = rate.knots;
    const auto& v = rate.values[static_cast<std::size_t>(d)];
    if (t <= knots.front()) {
        return v.front();
    }
    if (t >= knots.back()) {
        return v.back();
    }
    const auto it = std::upper_bound(knots.begin(), knots.end(), t);
    const auto hi = static_cast<std::size_t>(it - knots.begin());
    const double w = (t - knots[hi - 1]) / (knots[hi] - knots[hi - 1]);
    return v[hi - 1] + w * (v[hi] - v[hi - 1]);
}

// Lookahead window for the self-correcting bound: the rate may grow by at most
// a factor e^{1/2} inside it.
double self_correcting_window(const SelfCorrecting& m) { return 0.5 / m.drift; }

}  // namespace

double SimOnlyModel::intensity(double t, std::span<const Event> history, int d) const {
    return std::visit(
        [&](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, HomogeneousPoisson>) {
                return m.rates[static_cast<std::size_t>(d)];
            } else if constexpr (std::is_same_v<T, InhomogeneousPoisson>) {
                return std::visit(
                    [&](const auto& rate) -> double {
                        using R = std::decay_t<decltype(rate)>;
                        if constexpr (std::is_same_v<R, SinusoidalRate>) {
                            const auto i = static_cast<std::size_t>(d);
                            const double v = rate.base[i] + rate.amplitude[i] * std::sin(
                                2.0 * std::numbers::pi * t / rate.period + rate.phase);
                            return std::max(v, 0.0);
                        } else {
                            return piecewise_linear(rate, d, t);
                        }
                    },
                    m.rate);
            } else {
                const double n = static_cast<double>(window_end(history, t));
                return std::exp(m.drift * t - m.inhibition * n);
            }
        },
        variant_);
}

DominatingRate SimOnlyModel::upper_bound(double t, std::span<const Event> history) const {
    return std::visit(
        [&](const auto& m) -> DominatingRate {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, HomogeneousPoisson>) {
                return {std::accumulate(m.rates.begin(), m.rates.end(), 0.0), kInf};
            } else if constexpr (std::is_same_v<T, InhomogeneousPoisson>) {
                return std::visit(
                    [](const auto& rate) -> DominatingRate {
                        using R = std::decay_t<decltype(rate)>;
                        double total = 0.0;
                        if constexpr (std::is_same_v<R, SinusoidalRate>) {
                            for (std::size_t d = 0; d < rate.base.size(); ++d) {
                                total += rate.base[d] + std::abs(rate.amplitude[d]);
                            }
                        } else {
                            for (const auto& row : rate.values) {
                                total += *std::max_element(row.begin(), row.end());
                            }
                        }
                        return {total, kInf};
                    },
                    m.rate);
            } else {
                const double n = static_cast<double>(window_end_inclusive(history, t));
                const double until = t + self_correcting_window(m);
                return {m.num_types * std::exp(m.drift * until - m.inhibition * n), until};
            }
        },
        variant_);
}

DominatingRate SimOnlyModel::global_bound(double t, double horizon, std::span<const Event> history) const {
    if (const auto* sc = std::get_if<SelfCorrecting>(&variant_)) {
        const double n = static_cast<double>(window_end_inclusive(history, t));
        return {sc->num_types * std::exp(sc->drift * horizon - sc->inhibition * n), kInf};
    }
    return upper_bound(t, history);
}

nlohmann::ordered_json SimOnlyModel::describe() const {
    return std::visit(
        [](const auto& m) -> nlohmann::ordered_json {
            using T = std::decay_t<decltype(m)>;
            nlohmann::ordered_json j;
            if constexpr (std::is_same_v<T, HomogeneousPoisson>) {
                j["family"] = "homogeneous_poisson";
                j["rates"] = m.rates;
            } else if constexpr (std::is_same_v<T, InhomogeneousPoisson>) {
                j["family"] = "inhomogeneous_poisson";
                std::visit(
                    [&j](const auto& rate) {
                        using R = std::decay_t<decltype(rate)>;
                        if constexpr (std::is_same_v<R, SinusoidalRate>) {
                            j["shape"] = "sinusoidal";
                            j["base"] = rate.base;
                            j["amplitude"] = rate.amplitude;
                            j["period"] = rate.period;
                            j["phase"] = rate.phase;
                        } else {
                            j["shape"] = "piecewise_linear";
                            j["knots"] = rate.knots;
                            j["values"] = rate.values;
                        }
                    },
                    m.rate);
            } else {
                j["family"] = "self_correcting";
                j["num_types"] = m.num_types;
                j["drift"] = m.drift;
                j["inhibition"] = m.inhibition;
            }
            return j;
        },
        variant_);
}

double sim_intensity(const SimOnlyModel& model, double t, std::span<const Event> history, int d) {
    return model.intensity(t, history, d);
}

}  // namespace tp2dp2
