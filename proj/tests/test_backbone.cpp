#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "tp2dp2/backbone.hpp"
#include "tp2dp2/random.hpp"
#include "tp2dp2/simulate.hpp"

using namespace tp2dp2;

namespace {

BasisConfig one_bump(double center, double sigma, double support) { return BasisConfig{{center}, sigma, support}; }

// Total branching ratio stays below 0.6 so simulated sequences stay short.
HawkesParams random_params(int d, int nb, Rng& rng) {
    std::uniform_real_distribution<double> mu(0.2, 1.5);
    std::uniform_real_distribution<double> a(0.0, 1.2 / (d * nb));
    BasisConfig basis;
    basis.support = 1.5;
    basis.bandwidth = nb == 1 ? 0.4 : basis.support / (nb - 1);
    for (int j = 0; j < nb; ++j) {
        basis.centers.push_back(nb == 1 ? 0.0 : basis.support * j / (nb - 1));
    }
    HawkesParams p;
    p.basis = basis;
    for (int i = 0; i < d; ++i) {
        p.mu.push_back(mu(rng));
    }
    for (int i = 0; i < d * d * nb; ++i) {
        p.a.push_back(a(rng));
    }
    p.validate();
    return p;
}

EventSequence sample(const HawkesParams& p, double horizon, std::uint64_t seed) {
    HawkesModel model(p);
    return thinning_sample(model, horizon, seed);
}

}  // namespace

TEST_CASE("intensity with zero triggering is the base rate") {
    HawkesParams p({0.7, 1.3}, std::vector<double>(4, 0.0), one_bump(0.0, 0.3, 1.0));
    const std::vector<Event> history{{0.1, 0}, {0.4, 1}, {0.9, 0}};
    CHECK(hawkes_intensity(p, history, 1.0, 0) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(hawkes_intensity(p, history, 1.0, 1) == doctest::Approx(1.3).epsilon(1e-15));
}

TEST_CASE("a single prior event at the bump center adds the Gaussian peak") {
    const double sigma = 0.25;
    const double center = 0.5;
    HawkesParams p({0.3}, {0.8}, one_bump(center, sigma, 2.0));
    const std::vector<Event> history{{1.0, 0}};
    const double expected = 0.3 + 0.8 / (sigma * std::sqrt(2.0 * std::numbers::pi));
    CHECK(hawkes_intensity(p, history, 1.0 + center, 0) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("events older than the support do not excite") {
    HawkesParams p({0.4}, {2.0}, one_bump(0.2, 0.1, 0.5));
    const std::vector<Event> history{{0.1, 0}, {0.3, 0}};
    CHECK(hawkes_intensity(p, history, 0.81, 0) == 0.4);
}

TEST_CASE("homogeneous Poisson log-likelihood closed form") {
    const double lambda = 1.7;
    const double horizon = 3.0;
    HawkesParams p({lambda, lambda, lambda}, std::vector<double>(9, 0.0), one_bump(0.0, 0.3, 1.0));
    EventSequence seq{"x", horizon, {{0.2, 0}, {0.5, 2}, {1.1, 1}, {2.9, 2}}, std::nullopt};
    const double expected = 4.0 * std::log(lambda) - 3.0 * lambda * horizon;
    CHECK(hawkes_loglik(p, seq) == doctest::Approx(expected).epsilon(1e-14));

    const auto grad = hawkes_loglik_grad(p, seq);
    CHECK(grad.mu[0] == doctest::Approx(1.0 / lambda - horizon).epsilon(1e-14));
    CHECK(grad.mu[1] == doctest::Approx(1.0 / lambda - horizon).epsilon(1e-14));
    CHECK(grad.mu[2] == doctest::Approx(2.0 / lambda - horizon).epsilon(1e-14));
}

TEST_CASE("a type with no events has mu-gradient -T under zero triggering") {
    HawkesParams p({0.5, 0.9}, std::vector<double>(4, 0.0), one_bump(0.0, 0.3, 1.0));
    EventSequence seq{"x", 4.0, {{0.3, 0}, {1.2, 0}}, std::nullopt};
    CHECK(hawkes_loglik_grad(p, seq).mu[1] == doctest::Approx(-4.0).epsilon(1e-15));
}

TEST_CASE("zero intensity at an observed event gives -inf with a diagnostic") {
    HawkesParams p({1.0}, {0.0}, one_bump(0.0, 0.3, 1.0));
    p.mu[0] = 0.0;
    EventSequence seq{"x", 2.0, {{0.5, 0}, {1.0, 0}}, std::nullopt};
    LoglikDiagnostic diag;
    CHECK(std::isinf(hawkes_loglik(p, seq, &diag)));
    REQUIRE(diag.zero_intensity_event.has_value());
    CHECK(*diag.zero_intensity_event == 0);
}

TEST_CASE("jointly scaling mu and a shifts the event term by I log c") {
    Rng rng = make_rng(11, 0);
    const HawkesParams p = random_params(2, 3, rng);
    const EventSequence seq = sample(p, 8.0, 5);
    REQUIRE(seq.size() > 3);
    const double c = 2.5;
    HawkesParams q = p;
    for (auto& m : q.mu) {
        m *= c;
    }
    for (auto& a : q.a) {
        a *= c;
    }
    const auto comp = [](const HawkesParams& x, const EventSequence& s) {
        double t = 0.0;
        for (double v : hawkes_compensator(x, s)) {
            t += v;
        }
        return t;
    };
    const double event_term_p = hawkes_loglik(p, seq) + comp(p, seq);
    const double event_term_q = hawkes_loglik(q, seq) + comp(q, seq);
    CHECK(event_term_q - event_term_p ==
          doctest::Approx(static_cast<double>(seq.size()) * std::log(c)).epsilon(1e-12));
    CHECK(comp(q, seq) == doctest::Approx(c * comp(p, seq)).epsilon(1e-12));
}

TEST_CASE("compensator matches adaptive quadrature") {
    Rng rng = make_rng(12, 0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const HawkesParams p = random_params(1 + trial % 3, 1 + trial % 4, rng);
        const EventSequence seq = sample(p, 6.0, 100 + static_cast<std::uint64_t>(trial));
        double analytic = 0.0;
        for (double v : hawkes_compensator(p, seq)) {
            analytic += v;
        }
        const double numeric = oracle::compensator_by_quadrature(p, seq);
        worst = std::max(worst, std::abs(analytic - numeric) / numeric);
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("gradient matches central finite differences on 100 random instances") {
    Rng rng = make_rng(13, 0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const HawkesParams p = random_params(1 + trial % 3, 1 + trial % 3, rng);
        const EventSequence seq = sample(p, 5.0, 200 + static_cast<std::uint64_t>(trial));
        const auto grad = hawkes_loglik_grad(p, seq);
        const double h = 1e-5;
        const auto fd = [&](std::vector<double> HawkesParams::*field, std::size_t i) {
            HawkesParams up = p;
            HawkesParams dn = p;
            (up.*field)[i] += h;
            (dn.*field)[i] -= h;
            return (hawkes_loglik(up, seq) - hawkes_loglik(dn, seq)) / (2.0 * h);
        };
        for (std::size_t i = 0; i < p.mu.size(); ++i) {
            const double num = fd(&HawkesParams::mu, i);
            worst = std::max(worst, std::abs(num - grad.mu[i]) / std::max(1.0, std::abs(num)));
        }
        for (std::size_t i = 0; i < p.a.size(); ++i) {
            if (p.a[i] <= h) {
                continue;
            }
            const double num = fd(&HawkesParams::a, i);
            worst = std::max(worst, std::abs(num - grad.a[i]) / std::max(1.0, std::abs(num)));
        }
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("feature path agrees with direct evaluation") {
    Rng rng = make_rng(14, 0);
    for (int trial = 0; trial < 10; ++trial) {
        const HawkesParams p = random_params(3, 2, rng);
        const EventSequence seq = sample(p, 6.0, 300 + static_cast<std::uint64_t>(trial));
        const auto f = compute_features(seq, 3, p.basis);
        CHECK(feature_loglik(f, p.mu, p.a) == doctest::Approx(hawkes_loglik(p, seq)).epsilon(1e-11));
        std::vector<double> gmu(p.mu.size(), 0.0);
        std::vector<double> ga(p.a.size(), 0.0);
        feature_loglik_grad(f, p.mu, p.a, gmu, ga);
        const auto g = hawkes_loglik_grad(p, seq);
        for (std::size_t i = 0; i < gmu.size(); ++i) {
            CHECK(gmu[i] == doctest::Approx(g.mu[i]).epsilon(1e-11));
        }
        for (std::size_t i = 0; i < ga.size(); ++i) {
            CHECK(ga[i] == doctest::Approx(g.a[i]).epsilon(1e-10));
        }
    }
}

TEST_CASE("raising a triggering coefficient never lowers the intensity") {
    Rng rng = make_rng(15, 0);
    const HawkesParams p = random_params(2, 2, rng);
    const EventSequence seq = sample(p, 6.0, 77);
    std::uniform_real_distribution<double> t(0.0, 6.0);
    for (std::size_t i = 0; i < p.a.size(); ++i) {
        HawkesParams q = p;
        q.a[i] += 0.3;
        for (int s = 0; s < 50; ++s) {
            const double at = t(rng);
            for (int d = 0; d < 2; ++d) {
                CHECK(hawkes_intensity(q, seq.events, at, d) >= hawkes_intensity(p, seq.events, at, d));
            }
        }
    }
}

TEST_CASE("log-likelihood is concave along random chords") {
    Rng rng = make_rng(16, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const HawkesParams x = random_params(2, 2, rng);
        const HawkesParams y = random_params(2, 2, rng);
        const EventSequence seq = sample(x, 5.0, 400 + static_cast<std::uint64_t>(trial));
        HawkesParams mid = x;
        for (std::size_t i = 0; i < mid.mu.size(); ++i) {
            mid.mu[i] = 0.5 * (x.mu[i] + y.mu[i]);
        }
        for (std::size_t i = 0; i < mid.a.size(); ++i) {
            mid.a[i] = 0.5 * (x.a[i] + y.a[i]);
        }
        CHECK(hawkes_loglik(mid, seq) >= 0.5 * (hawkes_loglik(x, seq) + hawkes_loglik(y, seq)) - 1e-9);
    }
}

TEST_CASE("simulation-only intensities") {
    SimOnlyModel homo(HomogeneousPoisson{{2.0}});
    CHECK(sim_intensity(homo, 0.0, {}) == 2.0);
    CHECK(sim_intensity(homo, 17.3, {}) == 2.0);

    const double eta = 0.8;
    const double gamma = 0.3;
    SimOnlyModel sc(SelfCorrecting{1, eta, gamma});
    CHECK(sim_intensity(sc, 0.0, {}) == 1.0);
    const std::vector<Event> history{{0.5, 0}};
    CHECK(sim_intensity(sc, 1.5, history) == doctest::Approx(std::exp(eta * 1.5 - gamma)).epsilon(1e-15));
}

TEST_CASE("default basis") {
    Dataset data;
    data.sequences.push_back({"a", 10.0, {{1.0, 0}, {2.0, 0}, {4.0, 0}}, std::nullopt});
    const auto one = default_basis(data, 1);
    CHECK(one.support == doctest::Approx(4.5));
    CHECK(one.centers == std::vector<double>{0.0});
    CHECK(one.bandwidth == doctest::Approx(1.5));
    const auto three = default_basis(data, 3);
    CHECK(three.centers.size() == 3);
    CHECK(three.centers.back() == doctest::Approx(4.5));
    CHECK_THROWS_AS((void)default_basis(data, 0), ConfigError);
}
