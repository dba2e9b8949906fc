#include <cstdio>
#include <fstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "cdl.h"

using nlohmann::json;

namespace {

struct OwnedString {
    char* ptr = nullptr;
    ~OwnedString() { cdl_string_free(ptr); }
};

} // namespace

TEST_CASE("cluster endpoint reproduces the k-means example") {
    OwnedString out;
    REQUIRE(cdl_cluster_values("[1, 2, 10, 11]", 2, &out.ptr) == CDL_OK);
    const json j = json::parse(out.ptr);
    CHECK(j.at("labels") == json({0, 0, 1, 1}));
    CHECK(j.at("k") == 2);
    CHECK(j.at("within_cluster_ss").get<double>() == doctest::Approx(1.0));
    CHECK(j.at("profile") == json({"CP", "CP", "CP", "CP"}));
}

TEST_CASE("cluster endpoint accepts id->value objects and auto-k") {
    OwnedString out;
    REQUIRE(cdl_cluster_values(R"({"0": 0.0, "1": 0.1, "2": 10.0, "3": 10.1})", 0, &out.ptr) == CDL_OK);
    const json j = json::parse(out.ptr);
    CHECK(j.at("k") == 2);
    CHECK(j.at("k_selected_automatically") == true);
}

TEST_CASE("cluster endpoint reports malformed input") {
    OwnedString out;
    CHECK(cdl_cluster_values("not json", 2, &out.ptr) == CDL_ERR_DATA);
    CHECK(std::string(cdl_last_error()).find("JSON") != std::string::npos);
    CHECK(cdl_cluster_values("[1, 2]", 5, &out.ptr) == CDL_ERR_INVALID_ARGUMENT);
}

TEST_CASE("game endpoint enumerates the hand-built 2x2 table") {
    const char* losses = R"({"theta": [1.0, 1.0], "phi": [0.5, 0.5]})";
    const char* payoff =
        R"({"benefit": 1.0, "costs": {"c_plocal": 0.1, "c_pglobal": 0.1, "c_m": 0.1, "c_m_prime": 0.1}})";
    OwnedString out;
    REQUIRE(cdl_analyze_game(losses, payoff, &out.ptr) == CDL_OK);
    const json j = json::parse(out.ptr);
    CHECK(j.at("equilibria") == json({"CP,CP", "DF,DF"}));
    CHECK(j.at("free_rider") == json({false, false}));
    CHECK(j.at("all_cp_payoffs")[0].get<double>() == doctest::Approx(1.6));
    CHECK(j.at("all_df_payoffs")[0].get<double>() == doctest::Approx(0.9));
    REQUIRE(j.contains("profiles"));
    CHECK(j.at("profiles").size() == 4);
}

TEST_CASE("experiment endpoint runs a small config end to end") {
    const json config = {
        {"master_seed", 7},
        {"model", {{"input_dim", 3}, {"hidden_dims", {4}}, {"num_classes", 3}}},
        {"training", {{"batch_size", 8}, {"rounds", 3}, {"learning_rate", 0.05}}},
        {"data_source",
         {{"type", "synthetic"}, {"num_classes", 3}, {"rows_per_class", 50}, {"input_dim", 3},
          {"separation", 8.0}}},
        {"partition",
         {{"num_participants", 3},
          {"classes_per_participant", {{0, 1, 2}, {0, 1}, {2}}},
          {"rows_per_participant", 30}}},
    };
    cdl_run* run = nullptr;
    REQUIRE(cdl_run_experiment(config.dump().c_str(), &run) == CDL_OK);
    REQUIRE(run != nullptr);

    const double rate = cdl_run_cooperation_rate(run);
    CHECK(rate >= 0.0);
    CHECK(rate <= 1.0);

    OwnedString report;
    REQUIRE(cdl_run_report_json(run, 0, &report.ptr) == CDL_OK);
    const json j = json::parse(report.ptr);
    CHECK(j.at("schema_version") == 1);
    CHECK(j.at("symbols").at("N") == 3);

    OwnedString losses, summary;
    REQUIRE(cdl_run_losses_csv(run, &losses.ptr) == CDL_OK);
    REQUIRE(cdl_run_summary_csv(run, &summary.ptr) == CDL_OK);
    CHECK(std::string(losses.ptr).rfind("device,round,loss\n", 0) == 0);
    CHECK(std::string(summary.ptr).rfind("device,strategy,theta,phi,tau,payoff\n", 0) == 0);

    cdl_run_free(run);
}

TEST_CASE("file-based experiment endpoint reads the config from disk") {
    const json config = {
        {"master_seed", 7},
        {"model", {{"input_dim", 3}, {"hidden_dims", {4}}, {"num_classes", 3}}},
        {"training", {{"batch_size", 8}, {"rounds", 2}, {"learning_rate", 0.05}}},
        {"data_source",
         {{"type", "synthetic"}, {"num_classes", 3}, {"rows_per_class", 50}, {"input_dim", 3},
          {"separation", 8.0}}},
        {"partition",
         {{"num_participants", 2}, {"classes_per_participant", {{0, 1}, {2}}},
          {"rows_per_participant", 20}}},
    };
    const std::string path = "capi_test_config.json";
    {
        std::ofstream out(path);
        out << config.dump();
    }
    cdl_run* run = nullptr;
    REQUIRE(cdl_run_experiment_file(path.c_str(), &run) == CDL_OK);
    cdl_run_free(run);
    std::remove(path.c_str());

    CHECK(cdl_run_experiment_file("no_such_config.json", &run) == CDL_ERR_CONFIG);
    CHECK(std::string(cdl_last_error()).find("no_such_config.json") != std::string::npos);
}

TEST_CASE("experiment endpoint classifies errors") {
    cdl_run* run = nullptr;
    CHECK(cdl_run_experiment("{ broken", &run) == CDL_ERR_CONFIG);
    CHECK(run == nullptr);
    CHECK(cdl_run_experiment(nullptr, &run) == CDL_ERR_INVALID_ARGUMENT);

    // valid JSON, but the partition demands more rows than exist
    const json config = {
        {"master_seed", 7},
        {"model", {{"input_dim", 3}, {"hidden_dims", {4}}, {"num_classes", 3}}},
        {"data_source",
         {{"type", "synthetic"}, {"num_classes", 3}, {"rows_per_class", 10}, {"input_dim", 3}}},
        {"partition",
         {{"num_participants", 1}, {"classes_per_participant", {{0, 1, 2}}},
          {"rows_per_participant", 100000}}},
    };
    CHECK(cdl_run_experiment(config.dump().c_str(), &run) == CDL_ERR_DATA);
    CHECK(std::string(cdl_last_error()).find("deficit") != std::string::npos);
}

TEST_CASE("ingest endpoint windows an ARAS day file") {
    const std::string path = "capi_test_day.txt";
    {
        std::ofstream out(path);
        for (int r = 0; r < 130; ++r) {
            for (int c = 0; c < 20; ++c) out << (c == r % 20 ? 1 : 0) << ' ';
            out << (r < 70 ? 3 : 9) << ' ' << 1 << '\n';
        }
    }
    const char* paths[] = {path.c_str()};
    OwnedString csv;
    REQUIRE(cdl_ingest_aras(paths, 1, 60, 1, &csv.ptr) == CDL_OK);
    const std::string text(csv.ptr);
    CHECK(text.rfind("f0,", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3); // header + 2 windows
    std::remove(path.c_str());

    const char* missing[] = {"definitely_missing_file.txt"};
    OwnedString fail_out;
    CHECK(cdl_ingest_aras(missing, 1, 60, 1, &fail_out.ptr) == CDL_ERR_DATA);
}

TEST_CASE("version string is present") {
    CHECK(std::string(cdl_version()).find('.') != std::string::npos);
}
