#include "cdl.h"

#include <algorithm>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include <json.hpp>

#include "cdl/cluster.hpp"
#include "cdl/dataset.hpp"
#include "cdl/error.hpp"
#include "cdl/experiment.hpp"
#include "cdl/game.hpp"

using nlohmann::json;

struct cdl_run {
    cdl::RunReport report;
};

namespace {

thread_local std::string t_last_error;

char* dup_string(const std::string& s) {
    char* out = new (std::nothrow) char[s.size() + 1];
    if (!out) return nullptr;
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

cdl_status fail(cdl_status code, const std::string& message) {
    t_last_error = message;
    return code;
}

// Translate the C++ error taxonomy into C status codes.
template <typename Fn>
cdl_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const cdl::ConfigError& e) {
        return fail(CDL_ERR_CONFIG, e.what());
    } catch (const cdl::DataError& e) {
        return fail(CDL_ERR_DATA, e.what());
    } catch (const cdl::ContractViolation& e) {
        return fail(CDL_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::exception& e) {
        return fail(CDL_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(CDL_ERR_INTERNAL, "unknown error");
    }
}

cdl_status emit(const std::string& payload, char** out) {
    *out = dup_string(payload);
    if (!*out) return fail(CDL_ERR_INTERNAL, "out of memory");
    return CDL_OK;
}

std::map<int, double> parse_values(const char* values_json) {
    json j;
    try {
        j = json::parse(values_json);
    } catch (const json::exception& e) {
        throw cdl::DataError(std::string("values: invalid JSON: ") + e.what());
    }
    std::map<int, double> values;
    if (j.is_array()) {
        int id = 0;
        for (const auto& v : j) values[id++] = v.get<double>();
    } else if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            values[std::stoi(it.key())] = it.value().get<double>();
        }
    } else {
        throw cdl::DataError("values must be a JSON array or an object of id -> value");
    }
    if (values.empty()) throw cdl::DataError("values: empty input");
    return values;
}

} // namespace

extern "C" {

const char* cdl_version(void) { return "1.0.0"; }

const char* cdl_last_error(void) { return t_last_error.c_str(); }

void cdl_string_free(char* s) { delete[] s; }

cdl_status cdl_run_experiment(const char* config_json, cdl_run** out_run) {
    if (!config_json || !out_run) return fail(CDL_ERR_INVALID_ARGUMENT, "null argument");
    *out_run = nullptr;
    return guarded([&] {
        json j;
        try {
            j = json::parse(config_json);
        } catch (const json::exception& e) {
            throw cdl::ConfigError(std::string("config: invalid JSON: ") + e.what());
        }
        auto cfg = cdl::ExperimentConfig::from_json(j);
        auto run = std::make_unique<cdl_run>();
        run->report = cdl::run_experiment(cfg);
        *out_run = run.release();
        return CDL_OK;
    });
}

cdl_status cdl_run_experiment_file(const char* config_path, cdl_run** out_run) {
    if (!config_path || !out_run) return fail(CDL_ERR_INVALID_ARGUMENT, "null argument");
    *out_run = nullptr;
    return guarded([&] {
        auto cfg = cdl::ExperimentConfig::from_file(config_path);
        auto run = std::make_unique<cdl_run>();
        run->report = cdl::run_experiment(cfg);
        *out_run = run.release();
        return CDL_OK;
    });
}

void cdl_run_free(cdl_run* run) { delete run; }

cdl_status cdl_run_report_json(const cdl_run* run, int pretty, char** out_json) {
    if (!run || !out_json) return fail(CDL_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        const json j = run->report.to_json();
        return emit(pretty > 0 ? j.dump(2) : j.dump(), out_json);
    });
}

cdl_status cdl_run_losses_csv(const cdl_run* run, char** out_csv) {
    if (!run || !out_csv) return fail(CDL_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] { return emit(run->report.losses_csv(), out_csv); });
}

cdl_status cdl_run_summary_csv(const cdl_run* run, char** out_csv) {
    if (!run || !out_csv) return fail(CDL_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] { return emit(run->report.summary_csv(), out_csv); });
}

double cdl_run_cooperation_rate(const cdl_run* run) {
    return run ? run->report.cooperation_rate : -1.0;
}

cdl_status cdl_cluster_values(const char* values_json, int k, char** out_json) {
    if (!values_json || !out_json) return fail(CDL_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        const auto values = parse_values(values_json);
        std::size_t chosen_k;
        if (k > 0) {
            chosen_k = static_cast<std::size_t>(k);
        } else {
            chosen_k = cdl::choose_k(values, std::min<std::size_t>(5, values.size() > 1 ? values.size() - 1 : 1));
        }
        const auto assignment = cdl::kmeans_1d(values, chosen_k);
        const auto profile = cdl::fair_strategy(assignment);

        json ids = json::array(), vals = json::array(), labels = json::array(), strategies = json::array();
        for (const auto& [id, value] : values) {
            ids.push_back(id);
            vals.push_back(value);
            labels.push_back(assignment.labels.at(id));
        }
        for (auto s : profile) strategies.push_back(cdl::to_string(s));
        const json out = {{"ids", ids},
                          {"values", vals},
                          {"k", assignment.k},
                          {"k_selected_automatically", k <= 0},
                          {"labels", labels},
                          {"centers", assignment.centers},
                          {"within_cluster_ss", assignment.within_cluster_ss},
                          {"profile", strategies}};
        return emit(out.dump(2), out_json);
    });
}

cdl_status cdl_analyze_game(const char* losses_json, const char* payoff_json, char** out_json) {
    if (!losses_json || !payoff_json || !out_json) return fail(CDL_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        json jl, jp;
        try {
            jl = json::parse(losses_json);
            jp = json::parse(payoff_json);
        } catch (const json::exception& e) {
            throw cdl::DataError(std::string("invalid JSON: ") + e.what());
        }
        cdl::LossTable table;
        cdl::PayoffConfig cfg;
        try {
            table.theta = jl.at("theta").get<std::vector<double>>();
            table.phi = jl.at("phi").get<std::vector<double>>();
            if (jl.contains("tau")) table.tau = jl.at("tau").get<std::vector<double>>();
            cfg.benefit = jp.at("benefit").get<double>();
            const json& c = jp.at("costs");
            cfg.costs.c_plocal = c.value("c_plocal", 0.0);
            cfg.costs.c_pglobal = c.value("c_pglobal", 0.0);
            cfg.costs.c_m = c.value("c_m", 0.0);
            cfg.costs.c_m_prime = c.value("c_m_prime", 0.0);
        } catch (const json::exception& e) {
            throw cdl::DataError(std::string("losses/payoff document: ") + e.what());
        }
        table.validate();
        cfg.validate();

        const std::size_t n = table.players();
        const auto equilibria = cdl::enumerate_nash(table, cfg);
        const auto all_cp = cdl::profile_payoffs(cdl::uniform_profile(n, cdl::Strategy::CP), table, cfg);
        const auto all_df = cdl::profile_payoffs(cdl::uniform_profile(n, cdl::Strategy::DF), table, cfg);

        json eq = json::array();
        for (const auto& profile : equilibria) eq.push_back(cdl::to_string(profile));
        json free_rider = json::array();
        for (std::size_t i = 0; i < n; ++i) free_rider.push_back(cdl::free_rider_condition(i, table, cfg));

        json out = {{"players", n},
                    {"equilibria", eq},
                    {"free_rider", free_rider},
                    {"all_cp_payoffs", all_cp.payoffs},
                    {"all_df_payoffs", all_df.payoffs}};
        if (n <= 6) { // full table only at sizes where it stays readable
            json profiles = json::array();
            cdl::StrategyProfile profile(n, cdl::Strategy::CP);
            for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
                for (std::size_t i = 0; i < n; ++i) {
                    profile[i] = (mask >> (n - 1 - i)) & 1 ? cdl::Strategy::DF : cdl::Strategy::CP;
                }
                const auto outcome = cdl::profile_payoffs(profile, table, cfg);
                profiles.push_back({{"profile", cdl::to_string(profile)},
                                    {"payoffs", outcome.payoffs},
                                    {"is_nash", cdl::is_nash(profile, table, cfg)}});
            }
            out["profiles"] = profiles;
        }
        return emit(out.dump(2), out_json);
    });
}

cdl_status cdl_ingest_aras(const char* const* paths, size_t n_paths, int window_seconds,
                           int resident, char** out_csv) {
    if (!paths || n_paths == 0 || !out_csv) return fail(CDL_ERR_INVALID_ARGUMENT, "null or empty argument");
    return guarded([&] {
        if (window_seconds < 1) throw cdl::ContractViolation("window_seconds must be >= 1");
        std::vector<std::string> sorted_paths(paths, paths + n_paths);
        std::sort(sorted_paths.begin(), sorted_paths.end());
        std::vector<cdl::LabeledDataset> parts;
        for (const auto& path : sorted_paths) {
            const cdl::SensorLog log = cdl::parse_aras(path);
            parts.push_back(cdl::windowize(log, static_cast<std::size_t>(window_seconds), resident));
        }
        const cdl::LabeledDataset merged = cdl::concat(parts);
        if (merged.rows() == 0) throw cdl::DataError("no complete windows in the given files");
        return emit(cdl::to_csv(merged), out_csv);
    });
}

} // extern "C"
