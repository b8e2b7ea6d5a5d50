#include "tp2dp2/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <random>

namespace tp2dp2 {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string sequence_id(std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%06zu", n);
    return buf;
}

BasisConfig delta_kernel() {
    BasisConfig b;
    b.centers = {0.0};
    b.bandwidth = 0.2;
    b.support = 0.6;
    return b;
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

std::uint64_t require_seed(const json& j) {
    if (!j.contains("seed") || !j.at("seed").is_number_integer()) {
        throw ConfigError("recipe needs an integer 'seed'");
    }
    return j.at("seed").get<std::uint64_t>();
}

}  // namespace

EventSequence thinning_sample(const IntensityModel& model, double horizon, Rng& rng, BoundMode mode) {
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
        throw ConfigError("simulation horizon must be finite and non-negative");
    }
    EventSequence seq;
    seq.horizon = horizon;
    const int D = model.num_types();
    std::vector<double> lambda(static_cast<std::size_t>(D));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double t = 0.0;
    while (t < horizon) {
        const DominatingRate bound =
            mode == BoundMode::Windowed ? model.upper_bound(t, seq.events) : model.global_bound(t, horizon, seq.events);
        if (!(bound.rate >= 0.0) || !std::isfinite(bound.rate)) {
            throw NumericalError("dominating-rate failure: unbounded intensity estimate at t=" + std::to_string(t));
        }
        const double limit = std::min(bound.valid_until, horizon);
        if (!(limit > t)) {
            throw NumericalError("dominating-rate failure: empty lookahead window at t=" + std::to_string(t));
        }
        if (bound.rate == 0.0) {
            t = limit;
            continue;
        }
        const double candidate = t + std::exponential_distribution<double>(bound.rate)(rng);
        if (candidate > limit) {
            t = limit;
            continue;
        }
        t = candidate;
        double total = 0.0;
        for (int d = 0; d < D; ++d) {
            lambda[static_cast<std::size_t>(d)] = model.intensity(t, seq.events, d);
            total += lambda[static_cast<std::size_t>(d)];
        }
        if (total > bound.rate * (1.0 + 1e-9) + 1e-12) {
            throw NumericalError("dominating-rate failure: intensity " + std::to_string(total) +
                                 " exceeds bound " + std::to_string(bound.rate) + " at t=" + std::to_string(t));
        }
        if (unif(rng) * bound.rate > total) {
            continue;
        }
        if (!seq.events.empty() && !(t > seq.events.back().time)) {
            continue;
        }
        double pick = unif(rng) * total;
        int d = 0;
        while (d < D - 1 && pick >= lambda[static_cast<std::size_t>(d)]) {
            pick -= lambda[static_cast<std::size_t>(d)];
            ++d;
        }
        seq.events.push_back({t, d});
    }
    return seq;
}

EventSequence thinning_sample(const IntensityModel& model, double horizon, std::uint64_t seed, BoundMode mode) {
    Rng rng(seed);
    return thinning_sample(model, horizon, rng, mode);
}

void MixtureSpec::validate() const {
    if (components.empty()) {
        throw ConfigError("mixture needs at least one component");
    }
    for (const auto& c : components) {
        if (!c.model) {
            throw ConfigError("mixture component without a model");
        }
        if (!(c.weight > 0.0)) {
            throw ConfigError("mixture weights must be positive");
        }
        if (c.model->num_types() != components.front().model->num_types()) {
            throw ConfigError("mixture components disagree on D");
        }
    }
    if (n_per_component.has_value() == num_sequences.has_value()) {
        throw ConfigError("mixture needs exactly one of n_per_component and num_sequences");
    }
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
        throw ConfigError("mixture horizon must be finite and non-negative");
    }
}

Dataset simulate_mixture(const MixtureSpec& spec) {
    spec.validate();
    Dataset data;
    data.num_types = spec.components.front().model->num_types();

    std::vector<double> weights;
    for (const auto& c : spec.components) {
        weights.push_back(c.weight);
    }
    const std::size_t total =
        spec.n_per_component ? *spec.n_per_component * spec.components.size() : *spec.num_sequences;
    data.sequences.reserve(total);
    for (std::size_t n = 0; n < total; ++n) {
        Rng rng = make_rng(spec.seed, n);
        std::size_t m = 0;
        if (spec.n_per_component) {
            m = n / *spec.n_per_component;
        } else {
            m = std::discrete_distribution<std::size_t>(weights.begin(), weights.end())(rng);
        }
        auto seq = thinning_sample(*spec.components[m].model, spec.horizon, rng);
        seq.id = sequence_id(n);
        seq.label = static_cast<int>(m) + 1;
        data.sequences.push_back(std::move(seq));
    }

    ordered_json components = ordered_json::array();
    for (std::size_t m = 0; m < spec.components.size(); ++m) {
        const auto& c = spec.components[m];
        components.push_back({{"label", m + 1},
                              {"name", c.name},
                              {"weight", c.weight},
                              {"model", c.model->describe()}});
    }
    data.metadata["num_types"] = data.num_types;
    data.metadata["horizon"] = spec.horizon;
    data.metadata["seed"] = spec.seed;
    if (spec.n_per_component) {
        data.metadata["n_per_component"] = *spec.n_per_component;
    }
    data.metadata["components"] = std::move(components);
    return data;
}

std::shared_ptr<const IntensityModel> model_from_json(const json& j) {
    try {
        const auto family = j.at("family").get<std::string>();
        if (family == "hawkes") {
            HawkesParams p;
            p.mu = j.at("mu").get<std::vector<double>>();
            p.a = j.at("a").get<std::vector<double>>();
            p.basis.centers = j.at("basis").at("centers").get<std::vector<double>>();
            p.basis.bandwidth = j.at("basis").at("bandwidth").get<double>();
            p.basis.support = j.at("basis").at("support").get<double>();
            return std::make_shared<HawkesModel>(std::move(p));
        }
        if (family == "homogeneous_poisson") {
            return std::make_shared<SimOnlyModel>(HomogeneousPoisson{j.at("rates").get<std::vector<double>>()});
        }
        if (family == "inhomogeneous_poisson") {
            const auto shape = j.at("shape").get<std::string>();
            if (shape == "sinusoidal") {
                SinusoidalRate r;
                r.base = j.at("base").get<std::vector<double>>();
                r.amplitude = j.at("amplitude").get<std::vector<double>>();
                r.period = j.at("period").get<double>();
                r.phase = get_or(j, "phase", 0.0);
                return std::make_shared<SimOnlyModel>(InhomogeneousPoisson{r});
            }
            if (shape == "piecewise_linear") {
                PiecewiseLinearRate r;
                r.knots = j.at("knots").get<std::vector<double>>();
                r.values = j.at("values").get<std::vector<std::vector<double>>>();
                return std::make_shared<SimOnlyModel>(InhomogeneousPoisson{r});
            }
            throw ConfigError("unknown inhomogeneous rate shape '" + shape + "'");
        }
        if (family == "self_correcting") {
            SelfCorrecting sc;
            sc.num_types = j.at("num_types").get<int>();
            sc.drift = get_or(j, "drift", 1.0);
            sc.inhibition = get_or(j, "inhibition", 0.5);
            return std::make_shared<SimOnlyModel>(sc);
        }
        throw ConfigError("unknown model family '" + family + "'");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed model description: ") + e.what());
    }
}

Dataset build_hawkes_delta_dataset(int k, double delta, std::size_t n_per_cluster, std::uint64_t seed,
                                   double horizon) {
    if (k < 2) {
        throw ConfigError("hawkes-delta needs K >= 2");
    }
    if (!(delta >= 0.0)) {
        throw ConfigError("hawkes-delta needs delta >= 0");
    }
    constexpr int D = 3;
    MixtureSpec spec;
    spec.n_per_component = n_per_cluster;
    spec.horizon = horizon;
    spec.seed = seed;
    for (int m = 0; m < k; ++m) {
        HawkesParams p;
        p.mu.assign(D, 0.5 + delta * m);
        p.basis = delta_kernel();
        p.a.assign(D * D, 0.1);
        spec.components.push_back({std::make_shared<HawkesModel>(std::move(p)), 1.0, "hawkes"});
    }
    auto data = simulate_mixture(spec);
    data.metadata["recipe"] = {{"name", "hawkes-delta"},
                               {"k", k},
                               {"delta", delta},
                               {"n_per_cluster", n_per_cluster},
                               {"horizon", horizon},
                               {"seed", seed}};
    return data;
}

Dataset build_hybrid_dataset(int k, std::size_t n_per_cluster, double horizon, std::uint64_t seed) {
    if (k < 3 || k > 5) {
        throw ConfigError("hybrid recipe supports K in {3, 4, 5}");
    }
    constexpr int D = 3;
    MixtureSpec spec;
    spec.n_per_component = n_per_cluster;
    spec.horizon = horizon;
    spec.seed = seed;

    spec.components.push_back(
        {std::make_shared<SimOnlyModel>(HomogeneousPoisson{std::vector<double>(D, 1.0)}), 1.0, "homo"});

    SinusoidalRate wave;
    wave.base.assign(D, 2.0);
    wave.amplitude.assign(D, 1.5);
    wave.period = horizon > 0.0 ? horizon / 2.0 : 1.0;
    spec.components.push_back({std::make_shared<SimOnlyModel>(InhomogeneousPoisson{wave}), 1.0, "inhomo"});

    HawkesParams excite;
    excite.mu.assign(D, 0.3);
    excite.basis = delta_kernel();
    excite.a.assign(D * D, 0.1);
    for (int d = 0; d < D; ++d) {
        excite.a[excite.coef_index(d, d, 0)] = 0.6;
    }
    spec.components.push_back({std::make_shared<HawkesModel>(std::move(excite)), 1.0, "hawkes"});

    if (k >= 4) {
        spec.components.push_back({std::make_shared<SimOnlyModel>(SelfCorrecting{D, 1.0, 0.5}), 1.0, "self_correcting"});
    }
    if (k == 5) {
        Rng rng = make_rng(derive_seed(seed, 0x5eed), 5);
        std::uniform_real_distribution<double> mu_dist(0.3, 1.5);
        std::uniform_real_distribution<double> a_dist(0.0, 0.3);
        HawkesParams p;
        for (int d = 0; d < D; ++d) {
            p.mu.push_back(mu_dist(rng));
        }
        p.basis = delta_kernel();
        for (int i = 0; i < D * D; ++i) {
            p.a.push_back(a_dist(rng));
        }
        spec.components.push_back({std::make_shared<HawkesModel>(std::move(p)), 1.0, "hawkes_randomized"});
    }

    auto data = simulate_mixture(spec);
    data.metadata["recipe"] = {{"name", "hybrid"},
                               {"k", k},
                               {"n_per_cluster", n_per_cluster},
                               {"horizon", horizon},
                               {"seed", seed}};
    if (k == 5) {
        data.metadata["substitutions"] = {
            "component 5 is a Hawkes process with randomized parameters standing in for a neural point process"};
    }
    return data;
}

Dataset build_poisson_dataset(const std::vector<double>& rates, int num_types, std::size_t n_per_cluster,
                              double horizon, std::uint64_t seed) {
    if (rates.empty() || num_types < 1) {
        throw ConfigError("poisson recipe needs at least one rate and D >= 1");
    }
    MixtureSpec spec;
    spec.n_per_component = n_per_cluster;
    spec.horizon = horizon;
    spec.seed = seed;
    for (double r : rates) {
        spec.components.push_back(
            {std::make_shared<SimOnlyModel>(HomogeneousPoisson{std::vector<double>(static_cast<std::size_t>(num_types), r)}),
             1.0, "homo"});
    }
    auto data = simulate_mixture(spec);
    data.metadata["recipe"] = {{"name", "poisson"},
                               {"rates", rates},
                               {"num_types", num_types},
                               {"n_per_cluster", n_per_cluster},
                               {"horizon", horizon},
                               {"seed", seed}};
    return data;
}

Dataset simulate_recipe(const json& recipe) {
    if (!recipe.is_object() || !recipe.contains("recipe")) {
        throw ConfigError("simulation recipe must be an object with a 'recipe' field");
    }
    try {
        const auto name = recipe.at("recipe").get<std::string>();
        const auto seed = require_seed(recipe);
        const auto n = get_or<std::size_t>(recipe, "n_per_cluster", 100);
        if (name == "hawkes-delta") {
            return build_hawkes_delta_dataset(get_or(recipe, "k", 4), recipe.at("delta").get<double>(), n, seed,
                                              get_or(recipe, "horizon", kDeltaHorizon));
        }
        if (name == "hybrid") {
            return build_hybrid_dataset(get_or(recipe, "k", 3), n, get_or(recipe, "horizon", kHybridHorizon), seed);
        }
        if (name == "poisson") {
            return build_poisson_dataset(recipe.at("rates").get<std::vector<double>>(), get_or(recipe, "num_types", 1),
                                         n, get_or(recipe, "horizon", 50.0), seed);
        }
        if (name == "mixture") {
            MixtureSpec spec;
            spec.seed = seed;
            spec.horizon = recipe.at("horizon").get<double>();
            if (recipe.contains("num_sequences")) {
                spec.num_sequences = recipe.at("num_sequences").get<std::size_t>();
            } else {
                spec.n_per_component = n;
            }
            for (const auto& c : recipe.at("components")) {
                spec.components.push_back(
                    {model_from_json(c.at("model")), get_or(c, "weight", 1.0), get_or<std::string>(c, "name", "")});
            }
            auto data = simulate_mixture(spec);
            data.metadata["recipe"] = recipe;
            return data;
        }
        throw ConfigError("unknown recipe '" + name + "'");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed recipe: ") + e.what());
    }
}

}  // namespace tp2dp2
