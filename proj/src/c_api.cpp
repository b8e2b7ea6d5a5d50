#include "tp2dp2/tp2dp2.h"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <sstream>
#include <string>

#include "tp2dp2/config.hpp"
#include "tp2dp2/io.hpp"
#include "tp2dp2/pipeline.hpp"
#include "tp2dp2/simulate.hpp"

struct tp2dp2_dataset {
    tp2dp2::Dataset data;
};

struct tp2dp2_fit_result {
    tp2dp2::FitOutput output;
};

namespace {

thread_local std::string last_error;
std::atomic<bool> stop_requested{false};

static_assert(std::atomic<bool>::is_always_lock_free);

tp2dp2_status fail(tp2dp2_status status, const std::string& message) {
    last_error = message;
    return status;
}

template <class Fn>
tp2dp2_status guarded(Fn&& fn) {
    try {
        last_error.clear();
        fn();
        return TP2DP2_OK;
    } catch (const tp2dp2::ConfigError& e) {
        return fail(TP2DP2_INVALID_ARGUMENT, e.what());
    } catch (const tp2dp2::IoError& e) {
        return fail(TP2DP2_IO, e.what());
    } catch (const tp2dp2::DatasetError& e) {
        return fail(TP2DP2_INVALID_DATASET, e.what());
    } catch (const tp2dp2::NumericalError& e) {
        return fail(TP2DP2_NUMERICAL, e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(TP2DP2_INVALID_ARGUMENT, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(TP2DP2_INVALID_ARGUMENT, e.what());
    } catch (const std::exception& e) {
        return fail(TP2DP2_INTERNAL, e.what());
    } catch (...) {
        return fail(TP2DP2_INTERNAL, "unknown error");
    }
}

char* copy_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) {
        throw std::bad_alloc();
    }
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void require(const void* p, const char* what) {
    if (!p) {
        throw std::invalid_argument(std::string(what) + " must not be null");
    }
}

nlohmann::json parse_json(const char* text, const char* what) {
    require(text, what);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw tp2dp2::ConfigError(std::string(what) + " is not valid JSON: " + e.what());
    }
}

}  // namespace

extern "C" {

const char* tp2dp2_version(void) { return "0.1.0"; }

const char* tp2dp2_last_error(void) { return last_error.c_str(); }

void tp2dp2_string_free(char* s) { std::free(s); }

tp2dp2_status tp2dp2_dataset_simulate(const char* recipe_json, tp2dp2_dataset** out) {
    return guarded([&] {
        require(out, "out");
        auto data = tp2dp2::simulate_recipe(parse_json(recipe_json, "recipe"));
        *out = new tp2dp2_dataset{std::move(data)};
    });
}

tp2dp2_status tp2dp2_dataset_load(const char* path, tp2dp2_dataset** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new tp2dp2_dataset{tp2dp2::load_dataset(path)};
    });
}

tp2dp2_status tp2dp2_dataset_save(const tp2dp2_dataset* data, const char* path) {
    return guarded([&] {
        require(data, "dataset");
        require(path, "path");
        tp2dp2::save_dataset(path, data->data);
    });
}

tp2dp2_status tp2dp2_dataset_size(const tp2dp2_dataset* data, size_t* num_sequences, int* num_types) {
    return guarded([&] {
        require(data, "dataset");
        if (num_sequences) {
            *num_sequences = data->data.size();
        }
        if (num_types) {
            *num_types = data->data.num_types;
        }
    });
}

tp2dp2_status tp2dp2_dataset_metadata(const tp2dp2_dataset* data, char** json_out) {
    return guarded([&] {
        require(data, "dataset");
        require(json_out, "json_out");
        *json_out = copy_string(data->data.metadata.dump());
    });
}

tp2dp2_status tp2dp2_dataset_validate(const tp2dp2_dataset* data, char** json_out) {
    return guarded([&] {
        require(data, "dataset");
        require(json_out, "json_out");
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& v : tp2dp2::validate_dataset(data->data)) {
            arr.push_back({{"sequence_id", v.sequence_id}, {"rule", v.rule}, {"detail", v.detail}});
        }
        *json_out = copy_string(arr.dump());
    });
}

tp2dp2_status tp2dp2_dataset_split(const tp2dp2_dataset* data, double holdout_fraction, unsigned long long seed,
                                   tp2dp2_dataset** train, tp2dp2_dataset** heldout) {
    return guarded([&] {
        require(data, "dataset");
        require(train, "train");
        require(heldout, "heldout");
        auto [a, b] = tp2dp2::split_dataset(data->data, holdout_fraction, seed);
        auto* first = new tp2dp2_dataset{std::move(a)};
        *heldout = new tp2dp2_dataset{std::move(b)};
        *train = first;
    });
}

void tp2dp2_dataset_free(tp2dp2_dataset* data) { delete data; }

tp2dp2_status tp2dp2_config_resolve(const char* config_json, char** resolved_json) {
    return guarded([&] {
        require(resolved_json, "resolved_json");
        const auto config = tp2dp2::resolve_config(parse_json(config_json, "config"));
        *resolved_json = copy_string(config.to_json().dump(2));
    });
}

tp2dp2_status tp2dp2_fit(const tp2dp2_dataset* data, const char* config_json, tp2dp2_fit_result** out) {
    return guarded([&] {
        require(data, "dataset");
        require(out, "out");
        auto user = parse_json(config_json, "config");
        if (user.is_object()) {
            user.erase("dataset");
        }
        const auto config = tp2dp2::resolve_config(user);
        auto result = std::make_unique<tp2dp2_fit_result>();
        result->output = tp2dp2::fit_dataset(data->data, config, &stop_requested);
        *out = result.release();
    });
}

tp2dp2_status tp2dp2_fit_report(const tp2dp2_fit_result* fit, char** json_out) {
    return guarded([&] {
        require(fit, "fit");
        require(json_out, "json_out");
        *json_out = copy_string(fit->output.report.dump(2));
    });
}

tp2dp2_status tp2dp2_fit_timing(const tp2dp2_fit_result* fit, char** json_out) {
    return guarded([&] {
        require(fit, "fit");
        require(json_out, "json_out");
        *json_out = copy_string(fit->output.timing.dump(2));
    });
}

tp2dp2_status tp2dp2_fit_trace(const tp2dp2_fit_result* fit, char** jsonl_out) {
    return guarded([&] {
        require(fit, "fit");
        require(jsonl_out, "jsonl_out");
        std::ostringstream ss;
        tp2dp2::write_trace(ss, fit->output.sampler.trace);
        *jsonl_out = copy_string(ss.str());
    });
}

tp2dp2_status tp2dp2_fit_write_trace(const tp2dp2_fit_result* fit, const char* path) {
    return guarded([&] {
        require(fit, "fit");
        require(path, "path");
        std::ostringstream ss;
        tp2dp2::write_trace(ss, fit->output.sampler.trace);
        tp2dp2::write_text_file(path, ss.str());
    });
}

int tp2dp2_fit_interrupted(const tp2dp2_fit_result* fit) {
    return fit && fit->output.sampler.interrupted ? 1 : 0;
}

void tp2dp2_fit_free(tp2dp2_fit_result* fit) { delete fit; }

tp2dp2_status tp2dp2_evaluate(const char* report_json, const tp2dp2_dataset* data, char** json_out) {
    return guarded([&] {
        require(data, "dataset");
        require(json_out, "json_out");
        const auto result = tp2dp2::evaluate_report(parse_json(report_json, "report"), data->data);
        *json_out = copy_string(result.to_json().dump(2));
    });
}

void tp2dp2_request_stop(void) { stop_requested.store(true); }

void tp2dp2_clear_stop(void) { stop_requested.store(false); }

}  // extern "C"
