#include "tp2dp2/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tp2dp2 {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class LoglikFn>
double log_joint_impl(const MixtureState& state, const PosteriorContext& ctx, LoglikFn&& loglik) {
    const std::size_t N = ctx.num_sequences();
    if (state.labels.size() != N) {
        throw std::invalid_argument("state allocations do not match the dataset size");
    }
    const auto centers = all_centers(state);
    double lj = dpp_log_density(ctx.dpp, centers);
    if (lj == -kInf) {
        return -kInf;
    }
    const double u = state.u;
    const auto prior_terms = [&](const Component& c) {
        return log_weight_prior(c.w, ctx.prior.weight_rate) + log_r_prior(c.r) - u * c.r;
    };
    for (const auto& c : state.allocated) {
        lj += prior_terms(c);
    }
    for (const auto& c : state.non_allocated) {
        lj += prior_terms(c);
    }
    const auto sizes = state.cluster_sizes();
    for (std::size_t m = 0; m < state.k(); ++m) {
        lj += sizes[m] * std::log(state.allocated[m].r);
    }
    for (std::size_t n = 0; n < N; ++n) {
        lj += loglik(n, state.allocated[static_cast<std::size_t>(state.labels[n])]);
    }
    lj += (static_cast<double>(N) - 1.0) * std::log(u) - std::lgamma(static_cast<double>(N));
    if (std::isnan(lj)) {
        throw NumericalError("log-joint evaluated to NaN");
    }
    return lj;
}

}  // namespace

double PosteriorContext::seq_loglik(std::size_t n, const Component& c) const {
    return feature_loglik(features[n], c.mu, c.w);
}

PosteriorContext make_posterior_context(const Dataset& data, const BasisConfig& basis, const PriorBundle& prior,
                                        double expected_points) {
    prior.validate();
    basis.validate();
    PosteriorContext ctx;
    ctx.basis = basis;
    ctx.prior = prior;
    ctx.num_types = data.num_types;
    ctx.features = compute_features(data, basis);
    ctx.total_time = data.total_time();
    ctx.type_totals.assign(static_cast<std::size_t>(data.num_types), 0);
    for (const auto& s : data.sequences) {
        const auto counts = s.type_counts(data.num_types);
        for (std::size_t d = 0; d < counts.size(); ++d) {
            ctx.type_totals[d] += counts[d];
        }
    }
    const auto& dp = prior.dpp;
    const double rho = dp.rho ? *dp.rho : default_rho(data.num_types, dp.lattice_half_width, dp.alpha, expected_points);
    ctx.prior.dpp.rho = rho;
    ctx.dpp = build_spectral_model(data.num_types, dp.lattice_half_width, rho, dp.alpha,
                                   domain_box(data, dp.domain_rule));
    return ctx;
}

double log_weight_prior(std::span<const double> w, double rate) {
    double lp = 0.0;
    const double log_rate = std::log(rate);
    for (double v : w) {
        if (v < 0.0) {
            return -kInf;
        }
        lp += log_rate - rate * v;
    }
    return lp;
}

double log_r_prior(double r) { return r > 0.0 ? -r : -kInf; }

std::vector<Point> all_centers(const MixtureState& state) {
    std::vector<Point> out;
    out.reserve(state.total_components());
    for (const auto& c : state.allocated) {
        out.push_back(c.mu);
    }
    for (const auto& c : state.non_allocated) {
        out.push_back(c.mu);
    }
    return out;
}

LoglikCache::Entry& LoglikCache::entry(const Component& c) {
    for (auto& e : entries_) {
        if (e.mu == c.mu && e.w == c.w) {
            return e;
        }
    }
    const std::size_t N = ctx_->num_sequences();
    entries_.push_back({c.mu, c.w, std::vector<double>(N, 0.0), std::vector<char>(N, 0), 0});
    return entries_.back();
}

double LoglikCache::fill(Entry& e, std::size_t n) {
    if (!e.ready[n]) {
        e.ll[n] = feature_loglik(ctx_->features[n], e.mu, e.w);
        e.ready[n] = 1;
        ++e.ready_count;
    }
    return e.ll[n];
}

double LoglikCache::get(std::size_t n, const Component& c) { return fill(entry(c), n); }

const std::vector<double>& LoglikCache::all(const Component& c) {
    Entry& e = entry(c);
    if (e.ready_count < e.ll.size()) {
        for (std::size_t n = 0; n < e.ll.size(); ++n) {
            fill(e, n);
        }
    }
    return e.ll;
}

void LoglikCache::retain(const MixtureState& state) {
    const auto used = [&](const Entry& e) {
        const auto match = [&](const Component& c) { return c.mu == e.mu && c.w == e.w; };
        return std::any_of(state.allocated.begin(), state.allocated.end(), match) ||
               std::any_of(state.non_allocated.begin(), state.non_allocated.end(), match);
    };
    std::erase_if(entries_, [&](const Entry& e) { return !used(e); });
}

double state_log_joint(const MixtureState& state, const PosteriorContext& ctx) {
    return log_joint_impl(state, ctx, [&](std::size_t n, const Component& c) { return ctx.seq_loglik(n, c); });
}

double state_log_joint(const MixtureState& state, const PosteriorContext& ctx, LoglikCache& cache) {
    return log_joint_impl(state, ctx, [&](std::size_t n, const Component& c) { return cache.get(n, c); });
}

}  // namespace tp2dp2
