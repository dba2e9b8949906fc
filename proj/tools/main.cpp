// Command-line front end. Talks to the simulator exclusively through the
// C API in cdl.h; file handling and flag parsing live here.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cdl.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitUsage = 64;

int exit_code_for(cdl_status status) {
    switch (status) {
        case CDL_OK: return kExitOk;
        case CDL_ERR_CONFIG: return kExitConfig;
        case CDL_ERR_INVALID_ARGUMENT: return kExitConfig;
        case CDL_ERR_DATA: return kExitData;
        default: return kExitInternal;
    }
}

int report_failure(cdl_status status) {
    std::cerr << "error: " << cdl_last_error() << "\n";
    return exit_code_for(status);
}

bool read_file(const std::string& path, std::string& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::ostringstream buf;
    buf << in.rdbuf();
    out = buf.str();
    return true;
}

bool write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) return false;
    out << content;
    return bool(out);
}

// Shell-style match supporting '*' and '?' on the filename part.
bool wildcard_match(const std::string& pattern, const std::string& name) {
    std::size_t p = 0, n = 0, star = std::string::npos, mark = 0;
    while (n < name.size()) {
        if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == name[n])) {
            ++p;
            ++n;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            mark = n;
        } else if (star != std::string::npos) {
            p = star + 1;
            n = ++mark;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

std::vector<std::string> expand_glob(const std::string& pattern) {
    if (pattern.find('*') == std::string::npos && pattern.find('?') == std::string::npos) {
        return {pattern};
    }
    const fs::path full(pattern);
    const fs::path dir = full.has_parent_path() ? full.parent_path() : fs::path(".");
    const std::string name_pattern = full.filename().string();
    std::vector<std::string> matches;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        if (entry.is_regular_file() && wildcard_match(name_pattern, entry.path().filename().string())) {
            matches.push_back(entry.path().string());
        }
    }
    std::sort(matches.begin(), matches.end());
    return matches;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
    cdl_run* run = nullptr;
    cdl_status status = cdl_run_experiment_file(config_path.c_str(), &run);
    if (status != CDL_OK) return report_failure(status);

    std::error_code ec;
    fs::create_directories(out_dir, ec);

    char* payload = nullptr;
    int rc = kExitOk;
    if ((status = cdl_run_report_json(run, 1, &payload)) == CDL_OK) {
        if (!write_file(out_dir + "/report.json", payload)) {
            std::cerr << "error: cannot write " << out_dir << "/report.json\n";
            rc = kExitInternal;
        }
        cdl_string_free(payload);
    } else {
        rc = report_failure(status);
    }
    if (rc == kExitOk && (status = cdl_run_losses_csv(run, &payload)) == CDL_OK) {
        if (!write_file(out_dir + "/losses.csv", payload)) rc = kExitInternal;
        cdl_string_free(payload);
    }
    if (rc == kExitOk && (status = cdl_run_summary_csv(run, &payload)) == CDL_OK) {
        if (!write_file(out_dir + "/summary.csv", payload)) rc = kExitInternal;
        cdl_string_free(payload);
    }
    if (rc == kExitOk) {
        std::cout << "run complete: cooperation_rate = " << cdl_run_cooperation_rate(run)
                  << "\nreport: " << out_dir << "/report.json\n";
    }
    cdl_run_free(run);
    return rc;
}

int cmd_analyze_game(const std::string& losses_path, const std::string& payoff_path,
                     const std::string& out_path) {
    std::string losses, payoff;
    if (!read_file(losses_path, losses)) {
        std::cerr << "error: cannot open losses file: " << losses_path << "\n";
        return kExitData;
    }
    if (!read_file(payoff_path, payoff)) {
        std::cerr << "error: cannot open payoff file: " << payoff_path << "\n";
        return kExitData;
    }
    char* result = nullptr;
    const cdl_status status = cdl_analyze_game(losses.c_str(), payoff.c_str(), &result);
    if (status != CDL_OK) return report_failure(status);
    if (out_path.empty()) {
        std::cout << result << "\n";
    } else if (!write_file(out_path, result)) {
        std::cerr << "error: cannot write " << out_path << "\n";
        cdl_string_free(result);
        return kExitInternal;
    }
    cdl_string_free(result);
    return kExitOk;
}

int cmd_cluster(const std::string& values_path, int k, const std::string& out_path) {
    std::string values;
    if (!read_file(values_path, values)) {
        std::cerr << "error: cannot open values file: " << values_path << "\n";
        return kExitData;
    }
    char* result = nullptr;
    const cdl_status status = cdl_cluster_values(values.c_str(), k, &result);
    if (status != CDL_OK) return report_failure(status);
    if (out_path.empty()) {
        std::cout << result << "\n";
    } else if (!write_file(out_path, result)) {
        std::cerr << "error: cannot write " << out_path << "\n";
        cdl_string_free(result);
        return kExitInternal;
    }
    cdl_string_free(result);
    return kExitOk;
}

int cmd_ingest(const std::vector<std::string>& globs, const std::string& out_path, int window,
               int resident) {
    std::vector<std::string> paths;
    for (const auto& glob : globs) {
        for (auto& p : expand_glob(glob)) paths.push_back(std::move(p));
    }
    if (paths.empty()) {
        std::cerr << "error: no files match the given pattern(s)\n";
        return kExitData;
    }
    std::vector<const char*> raw;
    raw.reserve(paths.size());
    for (const auto& p : paths) raw.push_back(p.c_str());

    char* csv = nullptr;
    const cdl_status status = cdl_ingest_aras(raw.data(), raw.size(), window, resident, &csv);
    if (status != CDL_OK) return report_failure(status);
    const bool ok = write_file(out_path, csv);
    cdl_string_free(csv);
    if (!ok) {
        std::cerr << "error: cannot write " << out_path << "\n";
        return kExitInternal;
    }
    std::cout << "wrote " << out_path << " from " << paths.size() << " file(s)\n";
    return kExitOk;
}

int cmd_report(const std::string& run_dir, const std::string& format) {
    const std::string path = run_dir + (format == "json" ? "/report.json" : "/summary.csv");
    std::string content;
    if (!read_file(path, content)) {
        std::cerr << "error: cannot open " << path << " (did `simulate --out` point here?)\n";
        return kExitData;
    }
    std::cout << content;
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Collaborative deep learning game simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "run";
    auto* simulate = app.add_subcommand("simulate", "Run the full experiment pipeline from a config file");
    simulate->add_option("--config", config_path, "Experiment config (JSON)")->required();
    simulate->add_option("--out", out_dir, "Output directory for report.json and CSV extracts");

    std::string losses_path, payoff_path, game_out;
    auto* analyze = app.add_subcommand("analyze-game", "Equilibria and free-rider analysis of a loss table");
    analyze->add_option("--losses", losses_path, "Loss table JSON: theta, phi, optional tau")->required();
    analyze->add_option("--payoff", payoff_path, "Payoff config JSON: benefit, costs")->required();
    analyze->add_option("--out", game_out, "Write the analysis here instead of stdout");

    std::string values_path, cluster_out;
    int k = 0;
    auto* cluster = app.add_subcommand("cluster", "Optimal 1-D k-means over loss values");
    cluster->add_option("--values", values_path, "JSON array or id->value object")->required();
    cluster->add_option("--k", k, "Number of clusters (omit to select by silhouette)");
    cluster->add_option("--out", cluster_out, "Write the clustering here instead of stdout");

    std::vector<std::string> aras_globs;
    std::string ingest_out;
    int window = 60, resident = 1;
    auto* ingest = app.add_subcommand("ingest", "Parse ARAS day files into a windowed CSV dataset");
    ingest->add_option("--aras", aras_globs, "ARAS file path or glob (repeatable)")->required();
    ingest->add_option("--out", ingest_out, "Output CSV path")->required();
    ingest->add_option("--window", window, "Window length in seconds (default 60)");
    ingest->add_option("--resident", resident, "Resident whose activities become labels (1 or 2)");

    std::string run_dir, format = "json";
    auto* report = app.add_subcommand("report", "Print a stored run report");
    report->add_option("--run", run_dir, "Directory written by simulate --out")->required();
    report->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    if (simulate->parsed()) return cmd_simulate(config_path, out_dir);
    if (analyze->parsed()) return cmd_analyze_game(losses_path, payoff_path, game_out);
    if (cluster->parsed()) return cmd_cluster(values_path, k, cluster_out);
    if (ingest->parsed()) return cmd_ingest(aras_globs, ingest_out, window, resident);
    if (report->parsed()) return cmd_report(run_dir, format);
    return kExitUsage;
}
