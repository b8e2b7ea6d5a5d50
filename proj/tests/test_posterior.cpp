#include <cmath>
#include <random>

#include "doctest.h"
#include "tp2dp2/posterior.hpp"
#include "tp2dp2/random.hpp"
#include "tp2dp2/simulate.hpp"

using namespace tp2dp2;

namespace {

const BasisConfig kBasis{{0.0}, 0.2, 0.6};

Dataset tiny_dataset() {
    Dataset data;
    data.num_types = 3;
    data.sequences.push_back({"s", 1.0, {{0.25, 0}, {0.75, 1}}, std::nullopt});
    return data;
}

Component flat_component(std::vector<double> mu, double r) {
    Component c;
    c.mu = std::move(mu);
    c.w.assign(c.mu.size() * c.mu.size() * static_cast<std::size_t>(kBasis.size()), 0.0);
    c.r = r;
    return c;
}

}  // namespace

TEST_CASE("dataset validation") {
    Dataset ok;
    ok.num_types = 2;
    ok.sequences.push_back({"a", 2.0, {{0.5, 0}, {1.0, 1}}, std::nullopt});
    CHECK(validate_dataset(ok).empty());

    Dataset unordered = ok;
    unordered.sequences[0].events = {{1.0, 0}, {0.5, 1}};
    const auto v1 = validate_dataset(unordered);
    REQUIRE(v1.size() == 1);
    CHECK(v1[0].rule == "monotonicity");

    Dataset out_of_range;
    out_of_range.num_types = 3;
    out_of_range.sequences.push_back({"a", 2.0, {{0.5, 3}}, std::nullopt});
    const auto v2 = validate_dataset(out_of_range);
    REQUIRE(v2.size() == 1);
    CHECK(v2[0].rule == "type-range");

    Dataset duplicate = ok;
    duplicate.sequences.push_back(ok.sequences[0]);
    CHECK(validate_dataset(duplicate).front().rule == "unique-id");

    Dataset late = ok;
    late.sequences[0].horizon = 0.9;
    CHECK(validate_dataset(late).front().rule == "horizon");
}

TEST_CASE("state invariants") {
    MixtureState s;
    s.allocated = {flat_component({1.0}, 1.0)};
    s.labels = {0, 0};
    s.u = 1.0;
    CHECK_NOTHROW(s.check_invariants(2));
    CHECK_THROWS_AS(s.check_invariants(3), std::logic_error);
    s.labels = {0, 1};
    CHECK_THROWS_AS(s.check_invariants(2), std::logic_error);
    s.labels = {0, 0};
    s.allocated.push_back(flat_component({2.0}, 1.0));
    CHECK_THROWS_AS(s.check_invariants(2), std::logic_error);
}

TEST_CASE("log joint of a single Poisson component") {
    const auto data = tiny_dataset();
    PriorBundle prior;
    const auto ctx = make_posterior_context(data, kBasis, prior, 2.0);
    MixtureState s;
    s.basis = kBasis;
    s.allocated = {flat_component({1.0, 1.0, 1.0}, 0.7)};
    s.labels = {0};
    s.u = 1.3;

    const double likelihood = 2.0 * std::log(1.0) - 3.0 * 1.0;
    CHECK(ctx.seq_loglik(0, s.allocated[0]) == doctest::Approx(likelihood).epsilon(1e-14));

    const double prior_terms = dpp_log_density(ctx.dpp, std::vector<Point>{{1.0, 1.0, 1.0}}) +
                               9.0 * std::log(prior.weight_rate) + (-0.7) - 1.3 * 0.7 + std::log(0.7);
    CHECK(state_log_joint(s, ctx) == doctest::Approx(prior_terms + likelihood).epsilon(1e-13));
}

TEST_CASE("a duplicated center has zero prior density") {
    const auto data = tiny_dataset();
    const auto ctx = make_posterior_context(data, kBasis, PriorBundle{}, 2.0);
    MixtureState s;
    s.basis = kBasis;
    s.allocated = {flat_component({1.0, 1.0, 1.0}, 1.0)};
    s.non_allocated = {flat_component({1.5, 0.8, 1.2}, 0.4), flat_component({1.5, 0.8, 1.2}, 0.9)};
    s.labels = {0};
    CHECK(state_log_joint(s, ctx) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("scaling one weight changes the log joint by its own factor") {
    const auto data = build_hawkes_delta_dataset(2, 0.8, 5, 3, 10.0);
    const auto ctx = make_posterior_context(data, kBasis, PriorBundle{}, 2.0);
    MixtureState s;
    s.basis = kBasis;
    s.allocated = {flat_component({0.6, 0.6, 0.6}, 4.0), flat_component({1.3, 1.3, 1.3}, 6.0)};
    s.non_allocated = {flat_component({1.0, 0.9, 1.1}, 0.5)};
    s.labels = {0, 0, 0, 1, 1, 0, 1, 1, 1, 1};
    s.u = 0.8;
    const double before = state_log_joint(s, ctx);
    for (std::size_t m = 0; m < 2; ++m) {
        const double c = 1.7;
        auto t = s;
        t.allocated[m].r *= c;
        const double r = s.allocated[m].r;
        const double n = static_cast<double>(s.cluster_sizes()[m]);
        const double expected = n * std::log(c) - s.u * (c - 1.0) * r + log_r_prior(c * r) - log_r_prior(r);
        CHECK(state_log_joint(t, ctx) - before == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("log joint is invariant under component permutation") {
    const auto data = build_hawkes_delta_dataset(3, 0.6, 4, 5, 10.0);
    const auto ctx = make_posterior_context(data, kBasis, PriorBundle{}, 3.0);
    Rng rng = make_rng(31, 0);
    std::uniform_real_distribution<double> w(0.0, 0.2);
    MixtureState s;
    s.basis = kBasis;
    for (double mu : {0.6, 1.1, 1.6}) {
        auto c = flat_component({mu, mu, mu}, mu * 3.0);
        for (auto& x : c.w) {
            x = w(rng);
        }
        s.allocated.push_back(c);
    }
    s.non_allocated = {flat_component({0.9, 1.4, 0.7}, 0.3), flat_component({1.8, 0.6, 1.0}, 0.2)};
    s.labels = {0, 0, 1, 0, 1, 1, 2, 1, 2, 2, 0, 2};
    s.u = 0.5;
    const double base = state_log_joint(s, ctx);

    MixtureState p = s;
    const std::vector<int> perm{2, 0, 1};
    for (std::size_t m = 0; m < 3; ++m) {
        p.allocated[static_cast<std::size_t>(perm[m])] = s.allocated[m];
    }
    for (auto& c : p.labels) {
        c = perm[static_cast<std::size_t>(c)];
    }
    std::swap(p.non_allocated[0], p.non_allocated[1]);
    CHECK(std::abs(state_log_joint(p, ctx) - base) <= 1e-9 * std::abs(base));

    LoglikCache cache(ctx);
    CHECK(state_log_joint(s, ctx, cache) == base);
    CHECK(state_log_joint(s, ctx, cache) == base);
}

TEST_CASE("weight prior support") {
    const std::vector<double> ok{0.1, 0.0};
    const std::vector<double> bad{0.1, -0.01};
    CHECK(log_weight_prior(ok, 5.0) == doctest::Approx(2.0 * std::log(5.0) - 0.5).epsilon(1e-15));
    CHECK(log_weight_prior(bad, 5.0) == -std::numeric_limits<double>::infinity());
}
