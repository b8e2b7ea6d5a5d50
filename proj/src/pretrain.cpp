#include "tp2dp2/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "tp2dp2/random.hpp"

namespace tp2dp2 {

namespace {

constexpr double kMuFloor = 1e-6;

struct Cluster {
    std::vector<double> mu;
    std::vector<double> a;
    std::vector<std::size_t> members;
};

double hard_objective(std::span<const SequenceFeatures> features, const std::vector<Cluster>& clusters) {
    double total = 0.0;
    for (const auto& f : features) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& c : clusters) {
            best = std::max(best, feature_loglik(f, c.mu, c.a));
        }
        total += best;
    }
    return total;
}

}  // namespace

void PretrainConfig::validate() const {
    if (m_init < 1) {
        throw ConfigError("pretrain m_init must be at least 1");
    }
    if (rounds < 0 || gd_steps < 0) {
        throw ConfigError("pretrain rounds and gd_steps must be non-negative");
    }
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
        throw ConfigError("pretrain learning_rate must lie in (0, 1]");
    }
}

double fit_hawkes_cluster(std::span<const SequenceFeatures> features, std::span<const std::size_t> members,
                          std::vector<double>& mu, std::vector<double>& a, int steps, double learning_rate) {
    const std::size_t D = mu.size();
    const std::size_t width = a.size() / std::max<std::size_t>(D, 1);
    double horizon = 0.0;
    std::vector<double> compensator(width, 0.0);
    for (std::size_t n : members) {
        horizon += features[n].horizon;
        for (std::size_t s = 0; s < width; ++s) {
            compensator[s] += features[n].compensator[s];
        }
    }
    std::vector<double> grad_mu(D);
    std::vector<double> grad_a(a.size());
    const auto evaluate = [&] {
        std::fill(grad_mu.begin(), grad_mu.end(), 0.0);
        std::fill(grad_a.begin(), grad_a.end(), 0.0);
        double ll = 0.0;
        for (std::size_t n : members) {
            ll += feature_loglik_grad(features[n], mu, a, grad_mu, grad_a);
        }
        return ll;
    };
    double ll = evaluate();
    for (int step = 0; step < steps && std::isfinite(ll); ++step) {
        if (horizon > 0.0) {
            for (std::size_t d = 0; d < D; ++d) {
                mu[d] = std::max(kMuFloor, mu[d] + learning_rate * mu[d] * grad_mu[d] / horizon);
            }
        }
        for (std::size_t d = 0; d < D; ++d) {
            for (std::size_t s = 0; s < width; ++s) {
                const std::size_t i = d * width + s;
                if (compensator[s] > 0.0) {
                    a[i] = std::max(0.0, a[i] + learning_rate * a[i] * grad_a[i] / compensator[s]);
                }
            }
        }
        ll = evaluate();
    }
    return ll;
}

MixtureState pretrain_mixture(const Dataset& data, std::span<const SequenceFeatures> features,
                              const BasisConfig& basis, const PretrainConfig& config, std::vector<double>* objective) {
    config.validate();
    const std::size_t N = data.size();
    if (N == 0 || features.size() != N) {
        throw DatasetError("pretraining needs a non-empty dataset with matching features");
    }
    const auto D = static_cast<std::size_t>(data.num_types);
    const std::size_t width = D * static_cast<std::size_t>(basis.size());
    const double total_time = data.total_time();

    std::vector<double> rate(D, 1.0);
    if (total_time > 0.0) {
        std::vector<std::size_t> counts(D, 0);
        for (const auto& f : features) {
            for (std::size_t d = 0; d < D; ++d) {
                counts[d] += f.counts[d];
            }
        }
        for (std::size_t d = 0; d < D; ++d) {
            rate[d] = std::max(kMuFloor, static_cast<double>(counts[d]) / total_time);
        }
    }

    Rng assign_rng = make_rng(config.seed, 0);
    Rng init_rng = make_rng(config.seed, 1);
    std::uniform_int_distribution<int> pick(0, config.m_init - 1);
    std::uniform_real_distribution<double> jitter(-0.1, 0.1);

    std::vector<Cluster> clusters(static_cast<std::size_t>(config.m_init));
    for (auto& c : clusters) {
        for (std::size_t d = 0; d < D; ++d) {
            c.mu.push_back(rate[d] * (1.0 + jitter(init_rng)));
        }
        c.a.assign(D * width, 0.01);
    }
    for (std::size_t n = 0; n < N; ++n) {
        clusters[static_cast<std::size_t>(pick(assign_rng))].members.push_back(n);
    }
    std::erase_if(clusters, [](const Cluster& c) { return c.members.empty(); });
    if (objective) {
        objective->push_back(hard_objective(features, clusters));
    }

    for (int round = 0; round < config.rounds; ++round) {
        for (auto& c : clusters) {
            fit_hawkes_cluster(features, c.members, c.mu, c.a, config.gd_steps, config.learning_rate);
            c.members.clear();
        }
        for (std::size_t n = 0; n < N; ++n) {
            std::size_t best = 0;
            double best_ll = -std::numeric_limits<double>::infinity();
            for (std::size_t m = 0; m < clusters.size(); ++m) {
                const double ll = feature_loglik(features[n], clusters[m].mu, clusters[m].a);
                if (ll > best_ll) {
                    best_ll = ll;
                    best = m;
                }
            }
            clusters[best].members.push_back(n);
        }
        std::erase_if(clusters, [](const Cluster& c) { return c.members.empty(); });
        if (objective) {
            objective->push_back(hard_objective(features, clusters));
        }
    }

    MixtureState state;
    state.basis = basis;
    state.labels.assign(N, 0);
    for (std::size_t m = 0; m < clusters.size(); ++m) {
        auto& c = clusters[m];
        for (std::size_t n : c.members) {
            state.labels[n] = static_cast<int>(m);
        }
        state.allocated.push_back({std::move(c.mu), std::move(c.a), static_cast<double>(c.members.size())});
    }
    Rng u_rng = make_rng(config.seed, 2);
    state.u = std::gamma_distribution<double>(static_cast<double>(N), 1.0 / state.total_weight())(u_rng);
    state.check_invariants(N);
    return state;
}

}  // namespace tp2dp2
