#include "tp2dp2/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

namespace tp2dp2 {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool component_less(const Component& a, const Component& b) {
    if (a.mu != b.mu) {
        return a.mu < b.mu;
    }
    if (a.w != b.w) {
        return a.w < b.w;
    }
    return a.r < b.r;
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

bool accept(double log_ratio, Rng& rng) {
    if (std::isnan(log_ratio)) {
        return false;
    }
    return log_ratio >= 0.0 || std::log(uniform01(rng)) < log_ratio;
}

std::vector<double> draw_weights(std::size_t size, double rate, Rng& rng) {
    std::exponential_distribution<double> dist(rate);
    std::vector<double> w(size);
    for (auto& v : w) {
        v = dist(rng);
    }
    return w;
}

std::size_t weight_size(const PosteriorContext& ctx) {
    return static_cast<std::size_t>(ctx.num_types) * static_cast<std::size_t>(ctx.num_types) *
           static_cast<std::size_t>(ctx.basis.size());
}

std::vector<std::vector<std::size_t>> members_of(const MixtureState& state) {
    std::vector<std::vector<std::size_t>> members(state.k());
    for (std::size_t n = 0; n < state.labels.size(); ++n) {
        members[static_cast<std::size_t>(state.labels[n])].push_back(n);
    }
    return members;
}

}  // namespace

void SamplerConfig::validate() const {
    if (iterations == 0) {
        throw ConfigError("sampler iterations must be positive");
    }
    if (iterations < burn_in) {
        throw ConfigError("sampler iterations must be at least burn_in");
    }
    if (thin < 1) {
        throw ConfigError("sampler thin must be at least 1");
    }
    if (!(birth_prob > 0.0 && birth_prob < 1.0)) {
        throw ConfigError("sampler birth_prob must lie in (0, 1)");
    }
    if (birth_death_attempts < 0) {
        throw ConfigError("sampler birth_death_attempts must be non-negative");
    }
    if (!(mu_step > 0.0)) {
        throw ConfigError("sampler mu_step must be positive");
    }
    if (minibatch < 1) {
        throw ConfigError("sampler minibatch must be at least 1");
    }
}

nlohmann::ordered_json SamplerDiagnostics::to_json() const {
    const auto move = [](const MoveStats& s) {
        return nlohmann::ordered_json{{"proposed", s.proposed}, {"accepted", s.accepted}, {"rate", s.rate()}};
    };
    nlohmann::ordered_json j;
    j["birth"] = move(birth);
    j["death"] = move(death);
    j["death_noop"] = death_noop;
    j["allocated_mu"] = move(mu);
    j["sgld"] = {{"steps", sgld_steps}, {"skipped", sgld_skipped}};
    return j;
}

void canonicalize(MixtureState& state) {
    std::vector<std::size_t> order(state.k());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return component_less(state.allocated[a], state.allocated[b]); });
    std::vector<int> remap(state.k());
    std::vector<Component> sorted;
    sorted.reserve(state.k());
    for (std::size_t i = 0; i < order.size(); ++i) {
        remap[order[i]] = static_cast<int>(i);
        sorted.push_back(std::move(state.allocated[order[i]]));
    }
    state.allocated = std::move(sorted);
    for (auto& c : state.labels) {
        c = remap[static_cast<std::size_t>(c)];
    }
    std::stable_sort(state.non_allocated.begin(), state.non_allocated.end(), component_less);
}

void project_into_domain(MixtureState& state, const DomainBox& box) {
    for (auto& c : state.allocated) {
        for (std::size_t d = 0; d < c.mu.size() && d < box.dim(); ++d) {
            c.mu[d] = std::clamp(c.mu[d], box.lo[d], box.hi[d]);
        }
    }
}

BirthDeathProposal propose_birth_death(const MixtureState& state, const PosteriorContext& ctx,
                                       const SamplerConfig& config, Rng& rng) {
    BirthDeathProposal p;
    const double pb = config.birth_prob;
    const double u = state.u;
    const auto centers = all_centers(state);
    const std::size_t l = state.l();
    p.birth = uniform01(rng) < pb;
    if (p.birth) {
        Point z(static_cast<std::size_t>(ctx.dpp.dim));
        for (auto& v : z) {
            v = uniform01(rng);
        }
        p.newborn.mu = ctx.dpp.domain.from_unit(z);
        p.newborn.w = draw_weights(weight_size(ctx), ctx.prior.weight_rate, rng);
        p.newborn.r = std::exponential_distribution<double>(1.0 + u)(rng);
        p.log_accept = dpp_log_ratio(ctx.dpp, centers, &p.newborn.mu, std::nullopt) + std::log(psi(u)) +
                       std::log((1.0 - pb) / (pb * static_cast<double>(l + 1)));
        return p;
    }
    if (l == 0) {
        p.noop = true;
        return p;
    }
    p.removed = std::uniform_int_distribution<std::size_t>(0, l - 1)(rng);
    p.log_accept = dpp_log_ratio(ctx.dpp, centers, nullptr, state.k() + p.removed) - std::log(psi(u)) +
                   std::log(pb * static_cast<double>(l) / (1.0 - pb));
    return p;
}

void apply_birth_death(MixtureState& state, const BirthDeathProposal& proposal) {
    if (proposal.noop) {
        return;
    }
    if (proposal.birth) {
        state.non_allocated.push_back(proposal.newborn);
    } else {
        state.non_allocated.erase(state.non_allocated.begin() + static_cast<std::ptrdiff_t>(proposal.removed));
    }
}

void step_non_allocated_U(MixtureState& state, const PosteriorContext& ctx, const SamplerConfig& config, Rng& rng,
                          SamplerDiagnostics& diag) {
    const auto proposal = propose_birth_death(state, ctx, config, rng);
    if (proposal.noop) {
        ++diag.death_noop;
        return;
    }
    auto& stats = proposal.birth ? diag.birth : diag.death;
    ++stats.proposed;
    if (accept(proposal.log_accept, rng)) {
        ++stats.accepted;
        apply_birth_death(state, proposal);
    }
}

void step_non_allocated_rW(MixtureState& state, const PriorBundle& prior, Rng& rng) {
    std::exponential_distribution<double> r_dist(1.0 + state.u);
    for (auto& c : state.non_allocated) {
        c.r = r_dist(rng);
        c.w = draw_weights(c.w.size(), prior.weight_rate, rng);
    }
}

double center_step_scale(const MixtureState& state, const PosteriorContext& ctx, const SamplerConfig& config,
                         std::size_t m, std::size_t d) {
    double count = 0.0;
    double horizon = 0.0;
    for (std::size_t n = 0; n < state.labels.size(); ++n) {
        if (static_cast<std::size_t>(state.labels[n]) == m) {
            count += static_cast<double>(ctx.features[n].counts[d]);
            horizon += ctx.features[n].horizon;
        }
    }
    if (!(horizon > 0.0)) {
        return config.mu_step * (ctx.dpp.domain.hi[d] - ctx.dpp.domain.lo[d]) * 0.05;
    }
    return config.mu_step * std::sqrt(std::max(count, 1.0)) / horizon;
}

double center_log_accept(const MixtureState& state, const PosteriorContext& ctx, LoglikCache& cache, std::size_t m,
                         const std::vector<double>& mu) {
    if (!ctx.dpp.domain.contains(mu) ||
        std::any_of(mu.begin(), mu.end(), [](double v) { return !(v > 0.0); })) {
        return -kInf;
    }
    const auto& current = state.allocated[m];
    const Component moved{mu, current.w, current.r};
    double log_ratio = dpp_log_ratio(ctx.dpp, all_centers(state), &moved.mu, m);
    if (log_ratio == -kInf) {
        return -kInf;
    }
    for (std::size_t n = 0; n < state.labels.size(); ++n) {
        if (static_cast<std::size_t>(state.labels[n]) == m) {
            log_ratio += cache.get(n, moved) - cache.get(n, current);
        }
    }
    return log_ratio;
}

CenterProposal propose_allocated_center(const MixtureState& state, const PosteriorContext& ctx, LoglikCache& cache,
                                        const SamplerConfig& config, std::size_t m, Rng& rng) {
    CenterProposal p;
    p.m = m;
    p.mu = state.allocated[m].mu;
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t d = 0; d < p.mu.size(); ++d) {
        p.mu[d] += center_step_scale(state, ctx, config, m, d) * noise(rng);
    }
    p.log_accept = center_log_accept(state, ctx, cache, m, p.mu);
    return p;
}

void step_allocated_U(MixtureState& state, const PosteriorContext& ctx, LoglikCache& cache,
                      const SamplerConfig& config, Rng& rng, SamplerDiagnostics& diag) {
    for (std::size_t m = 0; m < state.k(); ++m) {
        auto proposal = propose_allocated_center(state, ctx, cache, config, m, rng);
        ++diag.mu.proposed;
        if (accept(proposal.log_accept, rng)) {
            ++diag.mu.accepted;
            state.allocated[m].mu = std::move(proposal.mu);
        }
    }
}

void step_allocated_r(MixtureState& state, Rng& rng) {
    const auto sizes = state.cluster_sizes();
    for (std::size_t m = 0; m < state.k(); ++m) {
        state.allocated[m].r =
            std::gamma_distribution<double>(static_cast<double>(sizes[m]) + 1.0, 1.0 / (1.0 + state.u))(rng);
    }
}

void step_allocated_W_sgld(MixtureState& state, const PosteriorContext& ctx, const SamplerConfig& config,
                           std::size_t iteration, Rng& rng, SamplerDiagnostics& diag) {
    const double eps = ctx.prior.sgld.step_size(iteration);
    const double beta = ctx.prior.weight_rate;
    const auto members = members_of(state);
    std::normal_distribution<double> noise(0.0, std::sqrt(eps));
    std::vector<double> grad_mu(static_cast<std::size_t>(ctx.num_types));
    for (std::size_t m = 0; m < state.k(); ++m) {
        auto pool = members[m];
        const std::size_t batch = std::min(pool.size(), config.minibatch);
        for (std::size_t i = 0; i < batch; ++i) {
            const auto j = std::uniform_int_distribution<std::size_t>(i, pool.size() - 1)(rng);
            std::swap(pool[i], pool[j]);
        }
        auto& comp = state.allocated[m];
        std::vector<double> grad(comp.w.size(), 0.0);
        bool finite = true;
        for (std::size_t i = 0; i < batch && finite; ++i) {
            finite = std::isfinite(feature_loglik_grad(ctx.features[pool[i]], comp.mu, comp.w, grad_mu, grad));
        }
        const double scale = static_cast<double>(pool.size()) / static_cast<double>(batch);
        for (auto& g : grad) {
            g = -beta + scale * g;
            finite = finite && std::isfinite(g);
        }
        if (!finite) {
            ++diag.sgld_skipped;
            continue;
        }
        for (std::size_t s = 0; s < comp.w.size(); ++s) {
            comp.w[s] = std::abs(comp.w[s] + 0.5 * eps * grad[s] + noise(rng));
        }
        ++diag.sgld_steps;
    }
}

void relabel(MixtureState& state) {
    const std::size_t total = state.total_components();
    std::vector<std::size_t> sizes(total, 0);
    for (int c : state.labels) {
        ++sizes[static_cast<std::size_t>(c)];
    }
    std::vector<Component> allocated;
    std::vector<Component> non_allocated;
    std::vector<int> remap(total, -1);
    for (std::size_t m = 0; m < total; ++m) {
        Component c = m < state.k() ? std::move(state.allocated[m]) : std::move(state.non_allocated[m - state.k()]);
        if (sizes[m] > 0) {
            remap[m] = static_cast<int>(allocated.size());
            allocated.push_back(std::move(c));
        } else {
            non_allocated.push_back(std::move(c));
        }
    }
    for (auto& c : state.labels) {
        c = remap[static_cast<std::size_t>(c)];
    }
    state.allocated = std::move(allocated);
    state.non_allocated = std::move(non_allocated);
    canonicalize(state);
}

void step_allocations(MixtureState& state, const PosteriorContext& /*ctx*/, LoglikCache& cache, Rng& rng) {
    const std::size_t total = state.total_components();
    const std::size_t N = state.labels.size();
    std::vector<const std::vector<double>*> ll(total);
    std::vector<double> log_r(total);
    for (std::size_t m = 0; m < total; ++m) {
        const auto& c = state.component(m);
        ll[m] = &cache.all(c);
        log_r[m] = std::log(c.r);
    }
    std::vector<double> logits(total);
    for (std::size_t n = 0; n < N; ++n) {
        double top = -kInf;
        for (std::size_t m = 0; m < total; ++m) {
            logits[m] = log_r[m] + (*ll[m])[n];
            top = std::max(top, logits[m]);
        }
        if (!std::isfinite(top)) {
            throw NumericalError("every component assigns zero likelihood to sequence " + std::to_string(n));
        }
        double norm = 0.0;
        for (auto& v : logits) {
            v = std::exp(v - top);
            norm += v;
        }
        double pick = uniform01(rng) * norm;
        std::size_t m = 0;
        while (m + 1 < total && pick >= logits[m]) {
            pick -= logits[m];
            ++m;
        }
        while (logits[m] == 0.0 && m > 0) {
            --m;
        }
        state.labels[n] = static_cast<int>(m);
    }
    relabel(state);
}

void step_u(MixtureState& state, Rng& rng) {
    const double n = static_cast<double>(state.labels.size());
    state.u = std::gamma_distribution<double>(n, 1.0 / state.total_weight())(rng);
}

void sweep(MixtureState& state, const PosteriorContext& ctx, LoglikCache& cache, const SamplerConfig& config,
           std::size_t iteration, Rng& rng, SamplerDiagnostics& diag) {
    for (int a = 0; a < config.birth_death_attempts; ++a) {
        step_non_allocated_U(state, ctx, config, rng, diag);
    }
    step_non_allocated_rW(state, ctx.prior, rng);
    step_allocated_U(state, ctx, cache, config, rng, diag);
    step_allocated_r(state, rng);
    step_allocated_W_sgld(state, ctx, config, iteration, rng, diag);
    step_allocations(state, ctx, cache, rng);
    step_u(state, rng);
}

SamplerResult run_sampler(const PosteriorContext& ctx, MixtureState init, const SamplerConfig& config,
                          const std::atomic<bool>* stop) {
    config.validate();
    const std::size_t N = ctx.num_sequences();
    init.check_invariants(N);
    project_into_domain(init, ctx.dpp.domain);
    canonicalize(init);

    SamplerResult result;
    MixtureState state = std::move(init);
    LoglikCache cache(ctx);
    if (state_log_joint(state, ctx, cache) == -kInf) {
        throw NumericalError("initial state has zero posterior density");
    }
    Rng rng = make_rng(config.seed, 0);
    for (std::size_t it = 0; it < config.iterations; ++it) {
        if (stop && stop->load(std::memory_order_relaxed)) {
            result.interrupted = true;
            break;
        }
        sweep(state, ctx, cache, config, it, rng, result.trace.diagnostics);
#ifndef NDEBUG
        state.check_invariants(N);
#endif
        cache.retain(state);
        result.iterations_run = it + 1;
        if (it < config.burn_in) {
            continue;
        }
        const double lj = state_log_joint(state, ctx, cache);
        if (!result.has_samples || lj > result.map_log_joint) {
            result.map_log_joint = lj;
            result.map_state = state;
            result.map_iteration = it;
            result.has_samples = true;
        }
        if ((it - config.burn_in) % config.thin == 0) {
            TraceRecord rec;
            rec.iteration = it;
            rec.k = state.k();
            rec.l = state.l();
            rec.log_joint = lj;
            rec.labels = state.labels;
            for (const auto& c : state.allocated) {
                rec.mu.push_back(c.mu);
                rec.r.push_back(c.r);
                rec.w_mean.push_back(c.w.empty() ? 0.0
                                                 : std::accumulate(c.w.begin(), c.w.end(), 0.0) /
                                                       static_cast<double>(c.w.size()));
            }
            result.trace.records.push_back(std::move(rec));
        }
    }
    result.final_state = std::move(state);
    return result;
}

nlohmann::ordered_json trace_record_to_json(const TraceRecord& record) {
    nlohmann::ordered_json runs = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < record.labels.size();) {
        std::size_t j = i;
        while (j < record.labels.size() && record.labels[j] == record.labels[i]) {
            ++j;
        }
        runs.push_back({record.labels[i] + 1, j - i});
        i = j;
    }
    nlohmann::ordered_json j;
    j["iteration"] = record.iteration;
    j["k"] = record.k;
    j["l"] = record.l;
    j["log_joint"] = record.log_joint;
    j["c"] = std::move(runs);
    j["mu"] = record.mu;
    j["r"] = record.r;
    j["w_mean"] = record.w_mean;
    return j;
}

void write_trace(std::ostream& out, const PosteriorTrace& trace) {
    for (const auto& rec : trace.records) {
        out << trace_record_to_json(rec).dump() << '\n';
    }
}

}  // namespace tp2dp2
