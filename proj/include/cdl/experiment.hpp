#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdl/cluster.hpp"
#include "cdl/dataset.hpp"
#include "cdl/device.hpp"
#include "cdl/game.hpp"
#include "cdl/model.hpp"
#include "cdl/strategy.hpp"

namespace cdl {

struct SyntheticSourceConfig {
    std::size_t num_classes = 27;
    std::size_t rows_per_class = 700;
    std::size_t input_dim = 20;
    double separation = 6.0;
};

struct ArasSourceConfig {
    std::vector<std::string> paths; // parsed and merged in natural path order
    std::size_t window_seconds = 60;
    int resident = 1;
};

struct DataSourceConfig {
    enum class Kind { Synthetic, Aras } kind = Kind::Synthetic;
    SyntheticSourceConfig synthetic;
    ArasSourceConfig aras;
};

struct PhiModeConfig {
    enum class Mode { Measured, Model } mode = Mode::Measured;
    double gain = 0.5; // only for Mode::Model
};

struct KPolicyConfig {
    enum class Policy { Auto, Fixed } policy = Policy::Auto;
    std::size_t k = 3;     // only for Policy::Fixed
    std::size_t k_max = 5; // silhouette search bound (further capped at N-1)
};

// What the fair-strategy clustering consumes: the bootstrap-round tau vector,
// the solo losses, or the model-mode collaborative losses theta * (1 - gain).
enum class TauSource { Bootstrap, Theta, PhiModel };

struct ExperimentConfig {
    std::uint64_t master_seed = 0;
    ModelSpec model;
    TrainingConfig training;
    PayoffConfig payoff;
    bool auto_benefit = true; // B = 10 * c_plocal * median(theta) when set
    DataSourceConfig data_source;
    double aux_fraction = 0.1;
    PartitionPlan partition;
    PhiModeConfig phi_mode;
    KPolicyConfig k_policy;
    TauSource tau_source = TauSource::Bootstrap;

    void validate() const; // throws ConfigError

    static ExperimentConfig from_json(const nlohmann::json& j);
    // base_dir anchors relative data paths (a config file anchors to its directory)
    static ExperimentConfig from_json(const nlohmann::json& j, const std::string& base_dir);
    static ExperimentConfig from_file(const std::string& path);
    nlohmann::json to_json() const; // fully expanded, no silent defaults
};

struct ServerTraceEntry {
    std::string phase; // "bootstrap", "collaboration", "all_cp_reference"
    std::size_t round = 0;
    double global_norm = 0.0;
    std::map<int, double> tau;
};

struct RunReport {
    nlohmann::json config_echo;
    std::size_t num_participants = 0;
    std::size_t total_iot_devices = 0; // n
    std::vector<std::size_t> partition_sizes;

    LossTable losses;            // phi entries are the All-CP collaborative loss
    std::vector<double> phi_played; // per player; cooperators from the played run
    double benefit_used = 0.0;

    ClusterAssignment cluster;
    std::string cluster_source;         // "tau", "theta", or "phi_model"
    std::vector<double> cluster_values; // what was clustered, in id order
    StrategyProfile profile;
    GameOutcome outcome; // payoffs under the played profile (phi_played)
    bool played_is_nash = false;
    std::optional<DeviationWitness> witness;
    std::vector<StrategyProfile> equilibria;
    std::vector<bool> free_rider;
    double cooperation_rate = 0.0;

    std::vector<std::vector<double>> loss_histories; // per device, solo then collaborative
    std::vector<ServerTraceEntry> server_trace;
    std::map<std::string, double> timings_ms;

    nlohmann::json to_json(bool include_timings = true) const;
    std::vector<std::string> equilibria_list() const; // "CP,DF,..." per equilibrium
    std::string losses_csv() const;  // device,round,loss
    std::string summary_csv() const; // device,strategy,theta,phi,tau,payoff
};

// Full pipeline: data -> auxiliary carve -> partition -> solo runs (theta) ->
// bootstrap round (tau) -> clustering + fair strategy -> collaborative runs
// (phi) -> payoffs, equilibria, free-rider analysis. Deterministic per
// (config, master_seed).
RunReport run_experiment(const ExperimentConfig& cfg);

} // namespace cdl
