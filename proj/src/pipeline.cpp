#include "tp2dp2/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>

#include "tp2dp2/backbone.hpp"
#include "tp2dp2/io.hpp"
#include "tp2dp2/posterior.hpp"
#include "tp2dp2/pretrain.hpp"
#include "tp2dp2/random.hpp"
#include "tp2dp2/simulate.hpp"

namespace tp2dp2 {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ordered_json component_json(const Component& c, const BasisConfig& basis, std::optional<int> size) {
    HawkesParams p;
    p.mu = c.mu;
    p.a = c.w;
    p.basis = basis;
    const auto params = params_to_json(p);
    ordered_json j;
    j["mu"] = params.at("mu");
    j["a"] = params.at("a");
    j["r"] = c.r;
    if (size) {
        j["n"] = *size;
    }
    return j;
}

Component component_from_json(const json& j, const BasisConfig& basis) {
    json p = {{"mu", j.at("mu")}, {"a", j.at("a")}, {"basis", basis_to_json(basis)}};
    const auto params = params_from_json(p);
    return {params.mu, params.a, j.at("r").get<double>()};
}

}  // namespace

std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double holdout_fraction, std::uint64_t seed) {
    if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
        throw ConfigError("holdout fraction must lie in [0, 1)");
    }
    const std::size_t N = data.size();
    std::size_t held = static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(N)));
    held = std::min(held, N > 0 ? N - 1 : 0);
    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_rng(seed, 3);
    for (std::size_t i = 0; i + 1 < N; ++i) {
        const auto j = std::uniform_int_distribution<std::size_t>(i, N - 1)(rng);
        std::swap(order[i], order[j]);
    }
    std::vector<char> is_held(N, 0);
    for (std::size_t i = 0; i < held; ++i) {
        is_held[order[i]] = 1;
    }
    Dataset train;
    Dataset test;
    train.num_types = test.num_types = data.num_types;
    train.metadata = test.metadata = data.metadata;
    for (std::size_t n = 0; n < N; ++n) {
        (is_held[n] ? test : train).sequences.push_back(data.sequences[n]);
    }
    return {std::move(train), std::move(test)};
}

Dataset load_config_dataset(const RunConfig& config) {
    if (config.dataset.contains("path")) {
        return load_dataset(config.dataset.at("path").get<std::string>());
    }
    if (config.dataset.contains("recipe")) {
        return simulate_recipe(config.dataset.at("recipe"));
    }
    throw ConfigError("config 'dataset' needs a 'path' or a 'recipe'");
}

FitOutput fit_dataset(const Dataset& data, const RunConfig& config, const std::atomic<bool>* stop) {
    config.validate();
    const auto violations = validate_dataset(data);
    if (!violations.empty()) {
        std::string msg = "dataset is invalid:";
        for (const auto& v : violations) {
            msg += "\n  [" + v.rule + "] " + (v.sequence_id.empty() ? "" : v.sequence_id + ": ") + v.detail;
        }
        throw DatasetError(msg);
    }
    const auto start = std::chrono::steady_clock::now();
    auto [train, heldout] = split_dataset(data, config.eval.holdout_fraction, config.seed);

    const BasisConfig basis = default_basis(train, config.basis.n_basis, config.basis.support, config.basis.bandwidth);
    const auto features = compute_features(train, basis);
    std::vector<double> objective;
    MixtureState init = pretrain_mixture(train, features, basis, config.pretrain, &objective);
    const std::size_t init_k = init.k();
    const double pretrain_seconds = seconds_since(start);

    const PosteriorContext ctx =
        make_posterior_context(train, basis, config.prior, static_cast<double>(config.pretrain.m_init));
    const auto sample_start = std::chrono::steady_clock::now();
    FitOutput out;
    out.sampler = run_sampler(ctx, std::move(init), config.sampler, stop);
    const double sampler_seconds = seconds_since(sample_start);
    const auto& res = out.sampler;

    ordered_json report;
    report["has_samples"] = res.has_samples;
    report["interrupted"] = res.interrupted;
    report["iterations_run"] = res.iterations_run;
    report["trace_length"] = res.trace.records.size();
    report["num_sequences"] = {{"train", train.size()}, {"heldout", heldout.size()}};

    ordered_json labels = ordered_json::object();
    ordered_json metrics = ordered_json::object();
    if (res.has_samples) {
        const auto& map = res.map_state;
        const auto sizes = map.cluster_sizes();
        ordered_json comps = ordered_json::array();
        for (std::size_t m = 0; m < map.k(); ++m) {
            comps.push_back(component_json(map.allocated[m], basis, sizes[m]));
        }
        ordered_json empties = ordered_json::array();
        for (const auto& c : map.non_allocated) {
            empties.push_back(component_json(c, basis, std::nullopt));
        }
        report["map"] = {{"iteration", res.map_iteration},
                         {"log_joint", res.map_log_joint},
                         {"k", map.k()},
                         {"l", map.l()},
                         {"u", map.u},
                         {"allocated", std::move(comps)},
                         {"non_allocated", std::move(empties)}};
        for (std::size_t n = 0; n < train.size(); ++n) {
            labels[train.sequences[n].id] = map.labels[n] + 1;
        }
        std::vector<std::size_t> ks;
        std::vector<std::size_t> totals;
        for (const auto& rec : res.trace.records) {
            ks.push_back(rec.k);
            totals.push_back(rec.k + rec.l);
        }
        if (!ks.empty()) {
            report["k_summary"] = m_summary(ks).to_json();
            report["k_plus_l_summary"] = m_summary(totals).to_json();
        }
        if (train.has_labels()) {
            const auto truth = train.labels();
            metrics["purity"] = purity(map.labels, truth);
            metrics["ari"] = ari(map.labels, truth);
        }
        if (!heldout.sequences.empty() && heldout.total_events() > 0) {
            metrics["ell"] = ell(map, compute_features(heldout, basis));
        } else {
            metrics["ell"] = nullptr;
        }
        if (!ks.empty()) {
            metrics["m_posterior_mean"] = report["k_summary"]["mean"];
        }
    } else {
        report["map"] = nullptr;
        report["warning"] = "no post-burn-in samples";
    }
    report["labels"] = std::move(labels);
    report["heldout_ids"] = ordered_json::array();
    for (const auto& s : heldout.sequences) {
        report["heldout_ids"].push_back(s.id);
    }
    report["metrics"] = std::move(metrics);
    report["acceptance"] = res.trace.diagnostics.to_json();
    report["basis"] = basis_to_json(basis);
    report["dpp"] = ctx.dpp.summary();
    report["pretrain"] = {{"m_init", config.pretrain.m_init}, {"k", init_k}, {"hard_loglik", objective}};
    report["choices"] = {
        {"birth_proposal", "uniform on the rescaled unit cube"},
        {"birth_death_attempts_per_sweep", config.sampler.birth_death_attempts},
        {"weight_updates", "exact conjugate Gamma/Exponential draws"},
        {"allocated_mu_proposal", "Gaussian random walk scaled by sqrt(count)/time"},
        {"sgld_minibatch", config.sampler.minibatch},
        {"sgld_boundary", "reflection at zero"},
        {"domain_rule", domain_rule_name(config.prior.dpp.domain_rule)},
        {"clustering", "MAP sample by log-joint after burn-in"},
        {"m_summary", "allocated components k"},
        {"ell", "held-out split, weights r/t, all MAP components"}};
    report["config"] = config.to_json();
    report["config"].erase("output");
    out.report = std::move(report);
    out.timing = {{"pretrain_seconds", pretrain_seconds},
                  {"sampler_seconds", sampler_seconds},
                  {"total_seconds", seconds_since(start)},
                  {"seconds_per_iteration",
                   res.iterations_run > 0 ? sampler_seconds / static_cast<double>(res.iterations_run) : 0.0}};
    return out;
}

MixtureState state_from_report(const json& report) {
    if (!report.contains("map") || report.at("map").is_null()) {
        throw ConfigError("report carries no MAP state");
    }
    try {
        const BasisConfig basis = basis_from_json(report.at("basis"));
        const auto& map = report.at("map");
        MixtureState s;
        s.basis = basis;
        s.u = map.at("u").get<double>();
        for (const auto& c : map.at("allocated")) {
            s.allocated.push_back(component_from_json(c, basis));
        }
        for (const auto& c : map.at("non_allocated")) {
            s.non_allocated.push_back(component_from_json(c, basis));
        }
        return s;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed report: ") + e.what());
    }
}

EvalResult evaluate_report(const json& report, const Dataset& data) {
    EvalResult r;
    const MixtureState state = state_from_report(report);
    if (!report.contains("labels") || !report.at("labels").is_object()) {
        throw ConfigError("report carries no labels");
    }
    if (data.num_types != static_cast<int>(state.allocated.empty() ? data.num_types : state.allocated[0].mu.size())) {
        throw DatasetError("dataset D differs from the fitted model");
    }
    std::unordered_map<std::string, const EventSequence*> by_id;
    for (const auto& s : data.sequences) {
        by_id[s.id] = &s;
    }
    if (data.has_labels()) {
        std::vector<int> pred;
        std::vector<int> truth;
        for (const auto& [id, label] : report.at("labels").items()) {
            const auto it = by_id.find(id);
            if (it != by_id.end()) {
                pred.push_back(label.get<int>());
                truth.push_back(*it->second->label);
            }
        }
        if (!pred.empty()) {
            r.purity = purity(pred, truth);
        }
        if (pred.size() >= 2) {
            r.ari = ari(pred, truth);
        }
    }
    Dataset eval;
    eval.num_types = data.num_types;
    if (report.contains("heldout_ids") && !report.at("heldout_ids").empty()) {
        for (const auto& id : report.at("heldout_ids")) {
            const auto it = by_id.find(id.get<std::string>());
            if (it != by_id.end()) {
                eval.sequences.push_back(*it->second);
            }
        }
    } else {
        eval.sequences = data.sequences;
    }
    if (eval.total_events() > 0) {
        r.ell = ell(state, compute_features(eval, state.basis));
    }
    if (report.contains("k_summary")) {
        const auto& ks = report.at("k_summary");
        r.m_posterior_mean = ks.at("mean").get<double>();
        for (const auto& [k, n] : ks.at("histogram").items()) {
            r.m_histogram[static_cast<std::size_t>(std::stoul(k))] = n.get<std::size_t>();
        }
    }
    return r;
}

}  // namespace tp2dp2
