#include "tp2dp2/config.hpp"

#include <random>
#include <set>

#include "tp2dp2/random.hpp"

namespace tp2dp2 {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
        throw ConfigError("config section '" + section + "' must be an object");
    }
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items()) {
        if (!keys.contains(key)) {
            throw ConfigError("unknown config key '" + (section.empty() ? key : section + "." + key) + "'");
        }
    }
}

const json& section(const json& j, const char* key) {
    static const json empty = json::object();
    return j.contains(key) && !j.at(key).is_null() ? j.at(key) : empty;
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key) && !j.at(key).is_null()) {
        try {
            out = j.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config key '") + key + "' has the wrong type: " + e.what());
        }
    }
}

template <class T>
void read(const json& j, const char* key, std::optional<T>& out) {
    if (j.contains(key) && !j.at(key).is_null()) {
        T v{};
        read(j, key, v);
        out = v;
    }
}

DomainRule parse_domain_rule(const std::string& s) {
    if (s == "range") {
        return DomainRule::SequenceRange;
    }
    if (s == "mean") {
        return DomainRule::GlobalMean;
    }
    throw ConfigError("dpp domain_rule must be 'range' or 'mean'");
}

template <class T>
ordered_json opt_json(const std::optional<T>& v) {
    return v ? ordered_json(*v) : ordered_json();
}

}  // namespace

std::string domain_rule_name(DomainRule rule) { return rule == DomainRule::GlobalMean ? "mean" : "range"; }

void RunConfig::validate() const {
    if (!dataset.is_object() || (!dataset.empty() && dataset.contains("path") == dataset.contains("recipe"))) {
        throw ConfigError("config 'dataset' needs exactly one of 'path' and 'recipe'");
    }
    if (basis.n_basis < 1) {
        throw ConfigError("basis n_basis must be at least 1");
    }
    if (basis.support && !(*basis.support > 0.0)) {
        throw ConfigError("basis support must be positive");
    }
    if (basis.bandwidth && !(*basis.bandwidth > 0.0)) {
        throw ConfigError("basis bandwidth must be positive");
    }
    prior.validate();
    pretrain.validate();
    sampler.validate();
    if (!(eval.holdout_fraction >= 0.0 && eval.holdout_fraction < 1.0)) {
        throw ConfigError("eval holdout_fraction must lie in [0, 1)");
    }
}

ordered_json RunConfig::to_json() const {
    ordered_json j;
    j["seed"] = seed;
    j["dataset"] = dataset;
    j["basis"] = {{"n_basis", basis.n_basis}, {"support", opt_json(basis.support)}, {"bandwidth", opt_json(basis.bandwidth)}};
    j["prior"] = {{"weight_rate", prior.weight_rate},
                  {"dpp",
                   {{"rho", opt_json(prior.dpp.rho)},
                    {"alpha", prior.dpp.alpha},
                    {"lattice_half_width", prior.dpp.lattice_half_width},
                    {"domain_rule", domain_rule_name(prior.dpp.domain_rule)}}},
                  {"sgld", {{"eps0", prior.sgld.eps0}, {"decay", prior.sgld.decay}, {"offset", prior.sgld.offset}}}};
    j["pretrain"] = {{"m_init", pretrain.m_init},
                     {"rounds", pretrain.rounds},
                     {"gd_steps", pretrain.gd_steps},
                     {"learning_rate", pretrain.learning_rate}};
    j["sampler"] = {{"iterations", sampler.iterations},
                    {"burn_in", sampler.burn_in},
                    {"thin", sampler.thin},
                    {"birth_prob", sampler.birth_prob},
                    {"birth_death_attempts", sampler.birth_death_attempts},
                    {"mu_step", sampler.mu_step},
                    {"minibatch", sampler.minibatch}};
    j["eval"] = {{"holdout_fraction", eval.holdout_fraction}};
    j["output"] = {{"dir", output_dir}};
    return j;
}

RunConfig resolve_config(const json& user) {
    check_keys(user, "", {"seed", "dataset", "basis", "prior", "pretrain", "sampler", "eval", "output"});
    RunConfig c;
    if (!user.contains("seed") || !user.at("seed").is_number_integer()) {
        throw ConfigError("config needs an integer 'seed'");
    }
    c.seed = user.at("seed").get<std::uint64_t>();

    if (user.contains("dataset")) {
        const auto& ds = user.at("dataset");
        check_keys(ds, "dataset", {"path", "recipe"});
        c.dataset = ds;
    }

    const auto& basis = section(user, "basis");
    check_keys(basis, "basis", {"n_basis", "support", "bandwidth"});
    read(basis, "n_basis", c.basis.n_basis);
    read(basis, "support", c.basis.support);
    read(basis, "bandwidth", c.basis.bandwidth);

    const auto& prior = section(user, "prior");
    check_keys(prior, "prior", {"weight_rate", "dpp", "sgld"});
    read(prior, "weight_rate", c.prior.weight_rate);
    const auto& dpp = section(prior, "dpp");
    check_keys(dpp, "prior.dpp", {"rho", "alpha", "lattice_half_width", "domain_rule"});
    read(dpp, "rho", c.prior.dpp.rho);
    read(dpp, "alpha", c.prior.dpp.alpha);
    read(dpp, "lattice_half_width", c.prior.dpp.lattice_half_width);
    std::string rule = "range";
    read(dpp, "domain_rule", rule);
    c.prior.dpp.domain_rule = parse_domain_rule(rule);
    const auto& sgld = section(prior, "sgld");
    check_keys(sgld, "prior.sgld", {"eps0", "decay", "offset"});
    read(sgld, "eps0", c.prior.sgld.eps0);
    read(sgld, "decay", c.prior.sgld.decay);
    read(sgld, "offset", c.prior.sgld.offset);

    const auto& pre = section(user, "pretrain");
    check_keys(pre, "pretrain", {"m_init", "rounds", "gd_steps", "learning_rate"});
    if (pre.contains("m_init") && pre.at("m_init").is_array()) {
        const auto range = pre.at("m_init").get<std::vector<int>>();
        if (range.size() != 2 || range[0] < 1 || range[1] < range[0]) {
            throw ConfigError("pretrain m_init range must be [lo, hi] with 1 <= lo <= hi");
        }
        Rng rng = make_rng(c.seed, 4);
        c.pretrain.m_init = std::uniform_int_distribution<int>(range[0], range[1])(rng);
    } else {
        read(pre, "m_init", c.pretrain.m_init);
    }
    read(pre, "rounds", c.pretrain.rounds);
    read(pre, "gd_steps", c.pretrain.gd_steps);
    read(pre, "learning_rate", c.pretrain.learning_rate);

    const auto& smp = section(user, "sampler");
    check_keys(smp, "sampler",
               {"iterations", "burn_in", "thin", "birth_prob", "birth_death_attempts", "mu_step", "minibatch"});
    read(smp, "iterations", c.sampler.iterations);
    read(smp, "burn_in", c.sampler.burn_in);
    read(smp, "thin", c.sampler.thin);
    read(smp, "birth_prob", c.sampler.birth_prob);
    read(smp, "birth_death_attempts", c.sampler.birth_death_attempts);
    read(smp, "mu_step", c.sampler.mu_step);
    read(smp, "minibatch", c.sampler.minibatch);

    const auto& ev = section(user, "eval");
    check_keys(ev, "eval", {"holdout_fraction"});
    read(ev, "holdout_fraction", c.eval.holdout_fraction);

    const auto& out = section(user, "output");
    check_keys(out, "output", {"dir"});
    read(out, "dir", c.output_dir);

    c.pretrain.seed = derive_seed(c.seed, 1);
    c.sampler.seed = derive_seed(c.seed, 2);
    c.validate();
    return c;
}

void apply_override(json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override '" + assignment + "' is not of the form key.path=value");
    }
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) {
        value = text;
    }
    json* node = &config;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (key.empty()) {
            throw ConfigError("override '" + assignment + "' has an empty key");
        }
        if (!node->is_object()) {
            *node = json::object();
        }
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

}  // namespace tp2dp2
