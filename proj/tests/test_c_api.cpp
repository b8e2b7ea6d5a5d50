#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "tp2dp2/tp2dp2.h"

namespace {

std::string take(char* s) {
    std::string out(s);
    tp2dp2_string_free(s);
    return out;
}

const char* kRecipe = R"({"recipe":"hawkes-delta","k":2,"delta":0.8,"n_per_cluster":6,"horizon":10,"seed":3})";
const char* kConfig = R"({"seed":5,"pretrain":{"m_init":2},"sampler":{"iterations":30,"burn_in":10}})";

}  // namespace

TEST_CASE("version") { CHECK(std::strlen(tp2dp2_version()) > 0); }

TEST_CASE("dataset lifecycle") {
    tp2dp2_dataset* data = nullptr;
    REQUIRE(tp2dp2_dataset_simulate(kRecipe, &data) == TP2DP2_OK);
    size_t n = 0;
    int d = 0;
    CHECK(tp2dp2_dataset_size(data, &n, &d) == TP2DP2_OK);
    CHECK(n == 12);
    CHECK(d == 3);

    char* violations = nullptr;
    REQUIRE(tp2dp2_dataset_validate(data, &violations) == TP2DP2_OK);
    CHECK(take(violations) == "[]");

    char* meta = nullptr;
    REQUIRE(tp2dp2_dataset_metadata(data, &meta) == TP2DP2_OK);
    CHECK(take(meta).find("\"num_types\"") != std::string::npos);

    tp2dp2_dataset* train = nullptr;
    tp2dp2_dataset* held = nullptr;
    REQUIRE(tp2dp2_dataset_split(data, 0.25, 1, &train, &held) == TP2DP2_OK);
    CHECK(tp2dp2_dataset_size(held, &n, &d) == TP2DP2_OK);
    CHECK(n == 3);

    const auto dir = std::filesystem::temp_directory_path() / "tp2dp2_capi_test";
    std::filesystem::remove_all(dir);
    const auto path = (dir / "d.jsonl").string();
    CHECK(tp2dp2_dataset_save(data, path.c_str()) == TP2DP2_OK);
    tp2dp2_dataset* loaded = nullptr;
    CHECK(tp2dp2_dataset_load(path.c_str(), &loaded) == TP2DP2_OK);
    CHECK(tp2dp2_dataset_size(loaded, &n, &d) == TP2DP2_OK);
    CHECK(n == 12);
    std::filesystem::remove_all(dir);

    tp2dp2_dataset_free(loaded);
    tp2dp2_dataset_free(train);
    tp2dp2_dataset_free(held);
    tp2dp2_dataset_free(data);
    tp2dp2_dataset_free(nullptr);
}

TEST_CASE("status codes") {
    tp2dp2_dataset* data = nullptr;
    CHECK(tp2dp2_dataset_simulate(nullptr, &data) == TP2DP2_INVALID_ARGUMENT);
    CHECK(tp2dp2_dataset_simulate("{not json", &data) == TP2DP2_INVALID_ARGUMENT);
    CHECK(std::strlen(tp2dp2_last_error()) > 0);
    CHECK(tp2dp2_dataset_simulate(R"({"recipe":"hybrid","k":9,"seed":1})", &data) == TP2DP2_INVALID_ARGUMENT);
    CHECK(data == nullptr);
    CHECK(tp2dp2_dataset_load("/nonexistent/file.jsonl", &data) == TP2DP2_IO);

    char* resolved = nullptr;
    CHECK(tp2dp2_config_resolve(R"({"sampler":{}})", &resolved) == TP2DP2_INVALID_ARGUMENT);
    CHECK(std::string(tp2dp2_last_error()).find("seed") != std::string::npos);
    REQUIRE(tp2dp2_config_resolve(R"({"seed":1})", &resolved) == TP2DP2_OK);
    CHECK(take(resolved).find("\"iterations\": 3000") != std::string::npos);
}

TEST_CASE("fit through the C interface") {
    tp2dp2_dataset* data = nullptr;
    REQUIRE(tp2dp2_dataset_simulate(kRecipe, &data) == TP2DP2_OK);
    tp2dp2_fit_result* fit = nullptr;
    REQUIRE(tp2dp2_fit(data, kConfig, &fit) == TP2DP2_OK);
    CHECK(tp2dp2_fit_interrupted(fit) == 0);

    char* report = nullptr;
    REQUIRE(tp2dp2_fit_report(fit, &report) == TP2DP2_OK);
    const std::string report_text = take(report);
    CHECK(report_text.find("\"has_samples\": true") != std::string::npos);

    char* trace = nullptr;
    REQUIRE(tp2dp2_fit_trace(fit, &trace) == TP2DP2_OK);
    const std::string trace_text = take(trace);
    std::size_t lines = 0;
    for (char c : trace_text) {
        lines += c == '\n' ? 1 : 0;
    }
    CHECK(lines == 20);

    char* timing = nullptr;
    REQUIRE(tp2dp2_fit_timing(fit, &timing) == TP2DP2_OK);
    CHECK(take(timing).find("total_seconds") != std::string::npos);

    char* eval = nullptr;
    REQUIRE(tp2dp2_evaluate(report_text.c_str(), data, &eval) == TP2DP2_OK);
    CHECK(take(eval).find("\"purity\"") != std::string::npos);

    tp2dp2_fit_result* again = nullptr;
    REQUIRE(tp2dp2_fit(data, kConfig, &again) == TP2DP2_OK);
    char* report2 = nullptr;
    REQUIRE(tp2dp2_fit_report(again, &report2) == TP2DP2_OK);
    CHECK(take(report2) == report_text);

    tp2dp2_request_stop();
    tp2dp2_fit_result* stopped = nullptr;
    REQUIRE(tp2dp2_fit(data, kConfig, &stopped) == TP2DP2_OK);
    CHECK(tp2dp2_fit_interrupted(stopped) == 1);
    tp2dp2_clear_stop();

    tp2dp2_fit_free(stopped);
    tp2dp2_fit_free(again);
    tp2dp2_fit_free(fit);
    tp2dp2_dataset_free(data);
}
