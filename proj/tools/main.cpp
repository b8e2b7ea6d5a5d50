#include <charconv>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tp2dp2/tp2dp2.h"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUser = 1;
constexpr int kExitNumerical = 2;

struct Failure {
    int code;
    std::string message;
};

int exit_code(tp2dp2_status status) {
    return status == TP2DP2_NUMERICAL || status == TP2DP2_INTERNAL ? kExitNumerical : kExitUser;
}

void check(tp2dp2_status status, const std::string& context) {
    if (status != TP2DP2_OK) {
        throw Failure{exit_code(status), context + ": " + tp2dp2_last_error()};
    }
}

std::string take(char* s) {
    std::string out(s ? s : "");
    tp2dp2_string_free(s);
    return out;
}

struct DatasetHandle {
    tp2dp2_dataset* ptr{nullptr};
    DatasetHandle() = default;
    DatasetHandle(const DatasetHandle&) = delete;
    DatasetHandle& operator=(const DatasetHandle&) = delete;
    ~DatasetHandle() { tp2dp2_dataset_free(ptr); }
};

struct FitHandle {
    tp2dp2_fit_result* ptr{nullptr};
    FitHandle() = default;
    FitHandle(const FitHandle&) = delete;
    FitHandle& operator=(const FitHandle&) = delete;
    ~FitHandle() { tp2dp2_fit_free(ptr); }
};

fs::path output_root() {
    const char* env = std::getenv("TP2DP2_OUTPUT_ROOT");
    return env && *env ? fs::path(env) : fs::path(".");
}

fs::path under_root(const fs::path& p) { return p.is_absolute() ? p : output_root() / p; }

void write_file(const fs::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) {
        throw Failure{kExitUser, "cannot write '" + path.string() + "'"};
    }
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Failure{kExitUser, "cannot open '" + path.string() + "'"};
    }
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw Failure{kExitUser, "'" + path.string() + "' is not valid JSON"};
    }
    return j;
}

void set_path(json& j, const std::string& dotted, const json& value) {
    json* node = &j;
    std::stringstream ss(dotted);
    std::string key;
    std::vector<std::string> keys;
    while (std::getline(ss, key, '.')) {
        keys.push_back(key);
    }
    for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
        if (!(*node)[keys[i]].is_object()) {
            (*node)[keys[i]] = json::object();
        }
        node = &(*node)[keys[i]];
    }
    (*node)[keys.back()] = value;
}

void apply_sets(json& config, const std::vector<std::string>& sets) {
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw Failure{kExitUser, "--set expects key.path=value, got '" + s + "'"};
        }
        json value = json::parse(s.substr(eq + 1), nullptr, false);
        if (value.is_discarded()) {
            value = s.substr(eq + 1);
        }
        set_path(config, s.substr(0, eq), value);
    }
}

extern "C" void on_sigint(int) { tp2dp2_request_stop(); }

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string recipe{"hawkes-delta"};
    std::string recipe_file;
    int k{4};
    double delta{0.6};
    int n_per_cluster{100};
    double horizon{-1.0};
    std::vector<double> rates{0.2, 5.0};
    int num_types{1};
    unsigned long long seed{0};
    bool seed_given{false};
    std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
    json recipe;
    if (!a.recipe_file.empty()) {
        recipe = read_json(a.recipe_file);
    } else {
        recipe = {{"recipe", a.recipe}, {"k", a.k}, {"n_per_cluster", a.n_per_cluster}};
        if (a.recipe == "hawkes-delta") {
            recipe["delta"] = a.delta;
        } else if (a.recipe == "poisson") {
            recipe["rates"] = a.rates;
            recipe["num_types"] = a.num_types;
            recipe.erase("k");
        }
        if (a.horizon > 0.0) {
            recipe["horizon"] = a.horizon;
        }
    }
    if (a.seed_given || !recipe.contains("seed")) {
        recipe["seed"] = a.seed;
    }
    DatasetHandle data;
    check(tp2dp2_dataset_simulate(recipe.dump().c_str(), &data.ptr), "simulate");
    const fs::path out = under_root(a.out.empty() ? fs::path("data") / (recipe.value("recipe", "dataset") + ".jsonl")
                                                  : fs::path(a.out));
    check(tp2dp2_dataset_save(data.ptr, out.string().c_str()), "simulate");
    std::size_t n = 0;
    int d = 0;
    check(tp2dp2_dataset_size(data.ptr, &n, &d), "simulate");
    std::cout << "wrote " << n << " sequences (D=" << d << ") to " << out.string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct FitArgs {
    std::string config;
    std::string data;
    std::string out;
    std::vector<std::string> sets;
    long long seed{-1};
    long long iterations{-1};
    long long burn_in{-1};
};

json build_fit_config(const FitArgs& a) {
    json config = a.config.empty() ? json::object() : read_json(a.config);
    if (!a.data.empty()) {
        config["dataset"] = {{"path", a.data}};
    }
    if (a.seed >= 0) {
        config["seed"] = a.seed;
    }
    if (a.iterations >= 0) {
        set_path(config, "sampler.iterations", a.iterations);
    }
    if (a.burn_in >= 0) {
        set_path(config, "sampler.burn_in", a.burn_in);
    }
    apply_sets(config, a.sets);
    if (!a.out.empty()) {
        set_path(config, "output.dir", a.out);
    }
    return config;
}

void load_config_dataset(const json& resolved, DatasetHandle& data) {
    const auto& ds = resolved.at("dataset");
    if (ds.contains("path")) {
        check(tp2dp2_dataset_load(ds.at("path").get<std::string>().c_str(), &data.ptr), "load dataset");
    } else if (ds.contains("recipe")) {
        check(tp2dp2_dataset_simulate(ds.at("recipe").dump().c_str(), &data.ptr), "simulate dataset");
    } else {
        throw Failure{kExitUser, "config needs dataset.path or dataset.recipe (or pass --data)"};
    }
}

int cmd_fit(const FitArgs& a) {
    const json config = build_fit_config(a);
    char* resolved_text = nullptr;
    check(tp2dp2_config_resolve(config.dump().c_str(), &resolved_text), "config");
    const std::string resolved_str = take(resolved_text);
    const json resolved = json::parse(resolved_str);

    DatasetHandle data;
    load_config_dataset(resolved, data);
    char* violations = nullptr;
    check(tp2dp2_dataset_validate(data.ptr, &violations), "validate");
    const json v = json::parse(take(violations));
    if (!v.empty()) {
        std::cerr << "dataset is invalid:\n";
        for (const auto& item : v) {
            std::cerr << "  [" << item.at("rule").get<std::string>() << "] " << item.at("sequence_id").get<std::string>()
                      << ": " << item.at("detail").get<std::string>() << "\n";
        }
        return kExitUser;
    }

    const fs::path dir = under_root(resolved.at("output").at("dir").get<std::string>());
    write_file(dir / "config.resolved.json", resolved_str + "\n");

    tp2dp2_clear_stop();
    std::signal(SIGINT, on_sigint);
    FitHandle fit;
    check(tp2dp2_fit(data.ptr, resolved_str.c_str(), &fit.ptr), "fit");
    std::signal(SIGINT, SIG_DFL);

    check(tp2dp2_fit_write_trace(fit.ptr, (dir / "trace.jsonl").string().c_str()), "trace");
    char* report = nullptr;
    check(tp2dp2_fit_report(fit.ptr, &report), "report");
    const std::string report_str = take(report);
    write_file(dir / "report.json", report_str + "\n");
    char* timing = nullptr;
    check(tp2dp2_fit_timing(fit.ptr, &timing), "timing");
    write_file(dir / "timing.json", take(timing) + "\n");

    const json r = json::parse(report_str);
    std::cout << "wrote " << (dir / "report.json").string() << "\n";
    if (r.contains("k_summary")) {
        std::cout << "posterior mean k = " << r["k_summary"]["mean"].get<double>()
                  << ", MAP k = " << r["map"]["k"].get<int>() << "\n";
    }
    if (r["metrics"].contains("purity")) {
        std::cout << "purity = " << r["metrics"]["purity"].get<double>() << ", ari = " << r["metrics"]["ari"].get<double>()
                  << "\n";
    }
    if (tp2dp2_fit_interrupted(fit.ptr)) {
        std::cerr << "interrupted: partial trace written\n";
        return kExitUser;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string report;
    std::string data;
    std::string out;
};

std::string number(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string csv_field(const json& j) { return j.is_null() ? std::string() : number(j.get<double>()); }

int cmd_eval(const EvalArgs& a) {
    const json report = read_json(a.report);
    DatasetHandle data;
    check(tp2dp2_dataset_load(a.data.c_str(), &data.ptr), "load dataset");
    char* result = nullptr;
    check(tp2dp2_evaluate(report.dump().c_str(), data.ptr, &result), "eval");
    const json r = json::parse(take(result));
    if (r["purity"].is_null()) {
        std::cerr << "warning: dataset has no labels; purity and ARI omitted\n";
    }
    const fs::path dir = under_root(a.out.empty() ? fs::path(a.report).parent_path() : fs::path(a.out));
    write_file(dir / "eval.json", r.dump(2) + "\n");
    std::string csv = "purity,ari,ell,m_mean\n";
    csv += csv_field(r["purity"]) + "," + csv_field(r["ari"]) + "," + csv_field(r["ell"]) + "," +
           csv_field(r["m_posterior_mean"]) + "\n";
    write_file(dir / "eval.csv", csv);
    std::cout << r.dump(2) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
    std::string config;
    std::vector<double> deltas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    int trials{5};
    int jobs{1};
    int k{4};
    int n_per_cluster{100};
    unsigned long long seed{0};
    std::vector<std::string> sets;
    std::string out{"sweep"};
};

int cmd_sweep(const SweepArgs& a) {
    json base = a.config.empty() ? json::object() : read_json(a.config);
    base.erase("dataset");
    apply_sets(base, a.sets);
    if (!base.contains("pretrain") || !base["pretrain"].contains("m_init")) {
        set_path(base, "pretrain.m_init", json::array({std::max(1, a.k - 1), a.k + 1}));
    }
    if (!base.contains("eval") || !base["eval"].contains("holdout_fraction")) {
        set_path(base, "eval.holdout_fraction", 0.0);
    }

    struct Row {
        double delta;
        int trial;
        double purity{0.0};
        double ari{0.0};
        double m_mean{0.0};
    };
    std::vector<Row> rows;
    for (double d : a.deltas) {
        for (int t = 0; t < a.trials; ++t) {
            rows.push_back({d, t});
        }
    }
    std::mutex lock;
    std::size_t next = 0;
    std::vector<Failure> failures;
    const auto worker = [&] {
        while (true) {
            std::size_t i;
            {
                std::lock_guard g(lock);
                if (next >= rows.size() || !failures.empty()) {
                    return;
                }
                i = next++;
            }
            Row& row = rows[i];
            const auto delta_index = static_cast<unsigned long long>(i / static_cast<std::size_t>(a.trials));
            const unsigned long long trial_seed = a.seed + 1000ULL * delta_index + static_cast<unsigned long long>(row.trial);
            try {
                json recipe = {{"recipe", "hawkes-delta"},
                               {"k", a.k},
                               {"delta", row.delta},
                               {"n_per_cluster", a.n_per_cluster},
                               {"seed", trial_seed}};
                DatasetHandle data;
                check(tp2dp2_dataset_simulate(recipe.dump().c_str(), &data.ptr), "simulate");
                json config = base;
                config["seed"] = trial_seed;
                FitHandle fit;
                check(tp2dp2_fit(data.ptr, config.dump().c_str(), &fit.ptr), "fit");
                char* report = nullptr;
                check(tp2dp2_fit_report(fit.ptr, &report), "report");
                const json r = json::parse(take(report));
                row.purity = r["metrics"]["purity"].get<double>();
                row.ari = r["metrics"]["ari"].get<double>();
                row.m_mean = r["k_summary"]["mean"].get<double>();
                std::lock_guard g(lock);
                std::cout << "delta=" << row.delta << " trial=" << row.trial << " purity=" << row.purity
                          << " ari=" << row.ari << "\n";
            } catch (const Failure& f) {
                std::lock_guard g(lock);
                failures.push_back(f);
            }
        }
    };
    std::vector<std::thread> pool;
    for (int j = 1; j < std::max(1, a.jobs); ++j) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }
    if (!failures.empty()) {
        throw failures.front();
    }
    std::string csv = "delta,trial,purity,ari,m_mean\n";
    for (const auto& r : rows) {
        csv += number(r.delta) + "," + std::to_string(r.trial) + "," + number(r.purity) + "," + number(r.ari) + "," +
               number(r.m_mean) + "\n";
    }
    const fs::path path = under_root(fs::path(a.out) / "sweep.csv");
    write_file(path, csv);
    std::cout << "wrote " << path.string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian mixture of Hawkes processes with a repulsive prior"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(tp2dp2_version()));

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Generate a synthetic event-sequence dataset");
    s->add_option("--recipe", sim.recipe, "hawkes-delta, hybrid or poisson")
        ->check(CLI::IsMember({"hawkes-delta", "hybrid", "poisson", "mixture"}));
    s->add_option("--recipe-file", sim.recipe_file, "JSON recipe (overrides --recipe)");
    s->add_option("--k", sim.k, "number of clusters");
    s->add_option("--delta", sim.delta, "base-intensity gap for hawkes-delta");
    s->add_option("--n-per-cluster", sim.n_per_cluster, "sequences per cluster");
    s->add_option("--horizon", sim.horizon, "observation window T");
    s->add_option("--rates", sim.rates, "poisson rates, one cluster each");
    s->add_option("--num-types", sim.num_types, "event types for poisson");
    s->add_option("--seed", sim.seed, "random seed")->each([&](const std::string&) { sim.seed_given = true; });
    s->add_option("--out", sim.out, "dataset path (.jsonl)");

    FitArgs fit;
    auto* f = app.add_subcommand("fit", "Pretrain and run the Gibbs sampler");
    f->add_option("--config", fit.config, "JSON config file");
    f->add_option("--data", fit.data, "dataset path (.jsonl)");
    f->add_option("--out", fit.out, "output directory");
    f->add_option("--seed", fit.seed, "global seed");
    f->add_option("--iterations", fit.iterations, "sampler iterations");
    f->add_option("--burn-in", fit.burn_in, "burn-in iterations");
    f->add_option("--set", fit.sets, "config override key.path=value")->allow_extra_args(false);

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Score a fit report against a dataset");
    e->add_option("--report", ev.report, "report.json from fit")->required();
    e->add_option("--data", ev.data, "dataset path (.jsonl)")->required();
    e->add_option("--out", ev.out, "output directory (default: next to the report)");

    SweepArgs sw;
    auto* w = app.add_subcommand("sweep", "Purity over a grid of delta values on hawkes-delta data");
    w->add_option("--config", sw.config, "base fit config");
    w->add_option("--deltas", sw.deltas, "delta grid");
    w->add_option("--trials", sw.trials, "trials per delta")->check(CLI::PositiveNumber);
    w->add_option("--jobs", sw.jobs, "parallel fits")->check(CLI::PositiveNumber);
    w->add_option("--k", sw.k, "clusters")->check(CLI::Range(2, 100));
    w->add_option("--n-per-cluster", sw.n_per_cluster, "sequences per cluster");
    w->add_option("--seed", sw.seed, "base seed");
    w->add_option("--set", sw.sets, "config override key.path=value")->allow_extra_args(false);
    w->add_option("--out", sw.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kExitOk : kExitUser;
    }

    try {
        if (s->parsed()) {
            return cmd_simulate(sim);
        }
        if (f->parsed()) {
            return cmd_fit(fit);
        }
        if (e->parsed()) {
            return cmd_eval(ev);
        }
        return cmd_sweep(sw);
    } catch (const Failure& err) {
        std::cerr << "error: " << err.message << "\n";
        return err.code;
    } catch (const json::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitUser;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitNumerical;
    }
}
