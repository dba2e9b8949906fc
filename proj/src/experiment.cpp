#include "cdl/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "cdl/error.hpp"
#include "cdl/rng.hpp"

namespace cdl {

namespace {

using nlohmann::json;

// Seed stream tags; every phase draws from mix_seed(master, tag, ...) so the
// full run replays from master_seed alone.
constexpr std::uint64_t kStreamData = 1;
constexpr std::uint64_t kStreamAux = 2;
constexpr std::uint64_t kStreamPartition = 3;
constexpr std::uint64_t kStreamServerInit = 4;
constexpr std::uint64_t kStreamSolo = 5;
constexpr std::uint64_t kStreamBootstrapOrder = 6;
constexpr std::uint64_t kStreamBootstrapRound = 7;
constexpr std::uint64_t kStreamCollabOrder = 8;
constexpr std::uint64_t kStreamCollabRound = 9;

constexpr std::uint64_t kTagPlayedRun = 0;
constexpr std::uint64_t kTagAllCpRun = 1;

class PhaseTimer {
public:
    PhaseTimer(std::map<std::string, double>& sink, std::string name)
        : sink_(sink), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
    ~PhaseTimer() {
        const auto end = std::chrono::steady_clock::now();
        sink_[name_] = std::chrono::duration<double, std::milli>(end - start_).count();
    }

private:
    std::map<std::string, double>& sink_;
    std::string name_;
    std::chrono::steady_clock::time_point start_;
};

void expect_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* key : allowed) ok = ok || it.key() == key;
        if (!ok) throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
    }
}

bool natural_less(const std::string& a, const std::string& b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (std::isdigit(static_cast<unsigned char>(a[i])) && std::isdigit(static_cast<unsigned char>(b[j]))) {
            std::size_t i2 = i, j2 = j;
            while (i2 < a.size() && std::isdigit(static_cast<unsigned char>(a[i2]))) ++i2;
            while (j2 < b.size() && std::isdigit(static_cast<unsigned char>(b[j2]))) ++j2;
            const std::string na = a.substr(i, i2 - i), nb = b.substr(j, j2 - j);
            const unsigned long long va = std::stoull(na), vb = std::stoull(nb);
            if (va != vb) return va < vb;
            i = i2;
            j = j2;
        } else {
            if (a[i] != b[j]) return a[i] < b[j];
            ++i;
            ++j;
        }
    }
    return a.size() - i < b.size() - j;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double l2_norm(const ParameterVector& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

LabeledDataset load_source(const ExperimentConfig& cfg) {
    if (cfg.data_source.kind == DataSourceConfig::Kind::Synthetic) {
        const auto& s = cfg.data_source.synthetic;
        return synth_generate(s.num_classes, s.rows_per_class, s.input_dim, s.separation,
                              mix_seed(cfg.master_seed, kStreamData));
    }
    std::vector<std::string> paths = cfg.data_source.aras.paths;
    std::sort(paths.begin(), paths.end(), natural_less);
    std::vector<LabeledDataset> parts;
    for (const std::string& path : paths) {
        const SensorLog log = parse_aras(path);
        parts.push_back(windowize(log, cfg.data_source.aras.window_seconds, cfg.data_source.aras.resident));
    }
    LabeledDataset merged = concat(parts);
    if (merged.rows() == 0) throw DataError("ARAS source produced no windows");
    return merged;
}

// One collaborative simulation among `members` (pointers into the device
// pool): R rounds, seeded upload order per round, score-then-apply per upload.
// Returns the final global model's auxiliary loss.
double collaborative_run(std::vector<DeviceState*>& members, const ModelSpec& spec,
                         const ParameterVector& w0, const TrainingConfig& training,
                         const LabeledDataset& aux, std::uint64_t master_seed, std::uint64_t tag,
                         const std::string& phase, std::vector<ServerTraceEntry>& trace,
                         bool record_history) {
    ParameterServer server(spec, w0);
    const Minibatch aux_batch = full_batch(aux.features, aux.labels);
    for (std::size_t r = 0; r < training.rounds; ++r) {
        std::mt19937_64 order_rng(mix_seed(master_seed, kStreamCollabOrder, mix_seed(tag, r)));
        const auto order = shuffled_indices(members.size(), order_rng);
        for (std::size_t idx : order) {
            DeviceState& dev = *members[idx];
            participate_round(dev, server, training, aux,
                              mix_seed(master_seed, kStreamCollabRound,
                                       mix_seed(tag, mix_seed(static_cast<std::uint64_t>(dev.id), r))));
            if (record_history) {
                dev.loss_history.push_back(loss(spec, server.global_params(), aux_batch));
            }
        }
        server.advance_round();
        trace.push_back(ServerTraceEntry{phase, r, l2_norm(server.global_params()), server.tau()});
    }
    return loss(spec, server.global_params(), aux_batch);
}

json profile_to_json(const StrategyProfile& profile) {
    json arr = json::array();
    for (Strategy s : profile) arr.push_back(to_string(s));
    return arr;
}

} // namespace

void ExperimentConfig::validate() const {
    try {
        model.validate();
        training.validate();
        payoff.costs.validate();
        if (!auto_benefit) payoff.validate();
    } catch (const ContractViolation& e) {
        throw ConfigError(e.what());
    }
    if (auto_benefit && !(payoff.costs.c_plocal > 0.0)) {
        throw ConfigError("benefit \"auto\" requires c_plocal > 0");
    }
    if (!(aux_fraction > 0.0) || aux_fraction >= 1.0) {
        throw ConfigError("aux_fraction must lie strictly inside (0, 1): the auxiliary set is held out "
                          "before partitioning and cannot absorb the whole dataset");
    }
    try {
        partition.validate(model.num_classes);
    } catch (const ContractViolation& e) {
        throw ConfigError(e.what());
    }
    if (data_source.kind == DataSourceConfig::Kind::Synthetic) {
        const auto& s = data_source.synthetic;
        if (s.num_classes != model.num_classes) {
            throw ConfigError("synthetic num_classes must match model.num_classes");
        }
        if (s.input_dim != model.input_dim) {
            throw ConfigError("synthetic input_dim must match model.input_dim");
        }
        if (s.rows_per_class < 1) throw ConfigError("synthetic rows_per_class must be >= 1");
        if (!(s.separation > 0.0)) throw ConfigError("synthetic separation must be positive");
    } else {
        const auto& a = data_source.aras;
        if (a.paths.empty()) throw ConfigError("aras data source needs at least one path");
        if (a.window_seconds < 1) throw ConfigError("aras window_seconds must be >= 1");
        if (a.resident != 1 && a.resident != 2) throw ConfigError("aras resident must be 1 or 2");
        if (model.input_dim != kSensorCount) {
            throw ConfigError("aras features have dimension 20; model.input_dim must be 20");
        }
        if (model.num_classes != static_cast<std::size_t>(kActivityClasses)) {
            throw ConfigError("aras labels have 27 classes; model.num_classes must be 27");
        }
    }
    if (phi_mode.mode == PhiModeConfig::Mode::Model &&
        (!(phi_mode.gain >= 0.0) || phi_mode.gain >= 1.0)) {
        throw ConfigError("phi_mode.gain must lie in [0, 1)");
    }
    if (k_policy.policy == KPolicyConfig::Policy::Fixed &&
        (k_policy.k < 1 || k_policy.k > partition.num_participants)) {
        throw ConfigError("k_policy.k must lie in [1, num_participants]");
    }
    if (k_policy.policy == KPolicyConfig::Policy::Auto && k_policy.k_max < 2) {
        throw ConfigError("k_policy.k_max must be >= 2");
    }
    if (tau_source == TauSource::PhiModel && phi_mode.mode != PhiModeConfig::Mode::Model) {
        throw ConfigError("tau_source \"phi_model\" needs phi_mode \"model\": measured phi only "
                          "exists after the strategy profile is fixed");
    }
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig cfg;
    try {
        expect_keys(j, "config",
                    {"master_seed", "model", "training", "payoff", "data_source", "aux_fraction",
                     "partition", "phi_mode", "k_policy", "tau_source"});
        cfg.master_seed = j.value("master_seed", std::uint64_t{1});

        if (j.contains("model")) {
            const json& m = j.at("model");
            expect_keys(m, "model", {"input_dim", "hidden_dims", "num_classes", "activation"});
            cfg.model.input_dim = m.value("input_dim", std::size_t{20});
            cfg.model.hidden_dims = m.value("hidden_dims", std::vector<std::size_t>{64});
            cfg.model.num_classes = m.value("num_classes", std::size_t{27});
            const std::string act = m.value("activation", std::string("relu"));
            if (act != "relu") throw ConfigError("model.activation: only \"relu\" is supported");
        } else {
            cfg.model = ModelSpec{20, {64}, 27};
        }

        if (j.contains("training")) {
            const json& t = j.at("training");
            expect_keys(t, "training", {"batch_size", "local_epochs", "learning_rate", "rounds", "loss_tol"});
            cfg.training.batch_size = t.value("batch_size", std::size_t{10});
            cfg.training.local_epochs = t.value("local_epochs", std::size_t{1});
            cfg.training.learning_rate = t.value("learning_rate", 0.01);
            cfg.training.rounds = t.value("rounds", std::size_t{30});
            cfg.training.loss_tol = t.value("loss_tol", 0.0);
        } else {
            cfg.training = TrainingConfig{10, 1, 0.01, 30, 0.0};
        }

        cfg.payoff.costs = CostModel{1.0, 0.2, 0.1, 0.1};
        cfg.auto_benefit = true;
        if (j.contains("payoff")) {
            const json& p = j.at("payoff");
            expect_keys(p, "payoff", {"benefit", "costs"});
            if (p.contains("benefit") && !p.at("benefit").is_string()) {
                cfg.auto_benefit = false;
                cfg.payoff.benefit = p.at("benefit").get<double>();
            } else if (p.contains("benefit") && p.at("benefit").get<std::string>() != "auto") {
                throw ConfigError("payoff.benefit must be a number or \"auto\"");
            }
            if (p.contains("costs")) {
                const json& c = p.at("costs");
                expect_keys(c, "payoff.costs", {"c_plocal", "c_pglobal", "c_m", "c_m_prime"});
                cfg.payoff.costs.c_plocal = c.value("c_plocal", 1.0);
                cfg.payoff.costs.c_pglobal = c.value("c_pglobal", 0.2);
                cfg.payoff.costs.c_m = c.value("c_m", 0.1);
                cfg.payoff.costs.c_m_prime = c.value("c_m_prime", 0.1);
            }
        }

        if (j.contains("data_source")) {
            const json& d = j.at("data_source");
            const std::string type = d.value("type", std::string("synthetic"));
            if (type == "synthetic") {
                expect_keys(d, "data_source", {"type", "num_classes", "rows_per_class", "input_dim", "separation"});
                cfg.data_source.kind = DataSourceConfig::Kind::Synthetic;
                cfg.data_source.synthetic.num_classes = d.value("num_classes", cfg.model.num_classes);
                cfg.data_source.synthetic.rows_per_class = d.value("rows_per_class", std::size_t{700});
                cfg.data_source.synthetic.input_dim = d.value("input_dim", cfg.model.input_dim);
                cfg.data_source.synthetic.separation = d.value("separation", 6.0);
            } else if (type == "aras") {
                expect_keys(d, "data_source", {"type", "paths", "window_seconds", "resident"});
                cfg.data_source.kind = DataSourceConfig::Kind::Aras;
                cfg.data_source.aras.paths = d.value("paths", std::vector<std::string>{});
                cfg.data_source.aras.window_seconds = d.value("window_seconds", std::size_t{60});
                cfg.data_source.aras.resident = d.value("resident", 1);
            } else {
                throw ConfigError("data_source.type must be \"synthetic\" or \"aras\"");
            }
        } else {
            cfg.data_source.kind = DataSourceConfig::Kind::Synthetic;
            cfg.data_source.synthetic.num_classes = cfg.model.num_classes;
            cfg.data_source.synthetic.input_dim = cfg.model.input_dim;
        }

        cfg.aux_fraction = j.value("aux_fraction", 0.1);

        if (!j.contains("partition")) throw ConfigError("config requires a \"partition\" section");
        {
            const json& p = j.at("partition");
            expect_keys(p, "partition",
                        {"num_participants", "classes_per_participant", "unbalanced", "rows_per_participant",
                         "devices_per_participant", "seed"});
            cfg.partition.num_participants = p.at("num_participants").get<std::size_t>();
            const std::size_t n = cfg.partition.num_participants;
            if (n < 1) throw ConfigError("partition.num_participants must be >= 1");

            if (p.contains("classes_per_participant") == p.contains("unbalanced")) {
                throw ConfigError("partition needs exactly one of classes_per_participant or unbalanced");
            }
            if (p.contains("classes_per_participant")) {
                cfg.partition.classes_per_participant =
                    p.at("classes_per_participant").get<std::vector<std::vector<int>>>();
            } else {
                const json& u = p.at("unbalanced");
                expect_keys(u, "partition.unbalanced", {"max_classes", "min_classes"});
                const int max_c = u.value("max_classes", static_cast<int>(cfg.model.num_classes));
                const int min_c = u.value("min_classes", 1);
                if (min_c < 1 || max_c < min_c) {
                    throw ConfigError("partition.unbalanced needs 1 <= min_classes <= max_classes");
                }
                // Participant 0 holds max_classes classes, participant N-1 holds
                // min_classes, class counts interpolate linearly; class subsets
                // are prefixes of [0, count).
                for (std::size_t i = 0; i < n; ++i) {
                    const double t = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
                    const int count = static_cast<int>(std::llround(max_c - t * (max_c - min_c)));
                    std::vector<int> classes(static_cast<std::size_t>(count));
                    for (int c = 0; c < count; ++c) classes[static_cast<std::size_t>(c)] = c;
                    cfg.partition.classes_per_participant.push_back(std::move(classes));
                }
            }

            if (!p.contains("rows_per_participant")) {
                throw ConfigError("partition requires rows_per_participant");
            }
            if (p.at("rows_per_participant").is_number()) {
                cfg.partition.rows_per_participant.assign(n, p.at("rows_per_participant").get<std::size_t>());
            } else {
                cfg.partition.rows_per_participant = p.at("rows_per_participant").get<std::vector<std::size_t>>();
            }

            if (p.contains("devices_per_participant")) {
                cfg.partition.devices_per_participant = p.at("devices_per_participant").get<std::vector<std::size_t>>();
            } else {
                // metadata view of "more IoT devices => richer data": one device per owned class
                for (const auto& classes : cfg.partition.classes_per_participant) {
                    cfg.partition.devices_per_participant.push_back(classes.size());
                }
            }
            cfg.partition.seed = p.value("seed", mix_seed(cfg.master_seed, kStreamPartition));
        }

        if (j.contains("phi_mode")) {
            const json& p = j.at("phi_mode");
            expect_keys(p, "phi_mode", {"mode", "gain"});
            const std::string mode = p.value("mode", std::string("measured"));
            if (mode == "measured") {
                cfg.phi_mode.mode = PhiModeConfig::Mode::Measured;
            } else if (mode == "model") {
                cfg.phi_mode.mode = PhiModeConfig::Mode::Model;
                cfg.phi_mode.gain = p.value("gain", 0.5);
            } else {
                throw ConfigError("phi_mode.mode must be \"measured\" or \"model\"");
            }
        }

        if (j.contains("k_policy")) {
            const json& p = j.at("k_policy");
            expect_keys(p, "k_policy", {"policy", "k", "k_max"});
            const std::string policy = p.value("policy", std::string("auto"));
            if (policy == "auto") {
                cfg.k_policy.policy = KPolicyConfig::Policy::Auto;
                cfg.k_policy.k_max = p.value("k_max", std::size_t{5});
            } else if (policy == "fixed") {
                cfg.k_policy.policy = KPolicyConfig::Policy::Fixed;
                if (!p.contains("k")) throw ConfigError("k_policy fixed requires k");
                cfg.k_policy.k = p.at("k").get<std::size_t>();
            } else {
                throw ConfigError("k_policy.policy must be \"auto\" or \"fixed\"");
            }
        }

        const std::string tau = j.value("tau_source", std::string("bootstrap"));
        if (tau == "bootstrap") {
            cfg.tau_source = TauSource::Bootstrap;
        } else if (tau == "theta") {
            cfg.tau_source = TauSource::Theta;
        } else if (tau == "phi_model") {
            cfg.tau_source = TauSource::PhiModel;
        } else {
            throw ConfigError("tau_source must be \"bootstrap\", \"theta\", or \"phi_model\"");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::string& base_dir) {
    ExperimentConfig cfg = from_json(j);
    // data paths in a config document are relative to it, not the caller's cwd
    for (std::string& p : cfg.data_source.aras.paths) {
        if (!p.empty() && std::filesystem::path(p).is_relative()) {
            p = (std::filesystem::path(base_dir) / p).string();
        }
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": invalid JSON: " + e.what());
    }
    return from_json(j, std::filesystem::path(path).parent_path().string());
}

json ExperimentConfig::to_json() const {
    json j;
    j["master_seed"] = master_seed;
    j["model"] = {{"input_dim", model.input_dim},
                  {"hidden_dims", model.hidden_dims},
                  {"num_classes", model.num_classes},
                  {"activation", "relu"}};
    j["training"] = {{"batch_size", training.batch_size},
                     {"local_epochs", training.local_epochs},
                     {"learning_rate", training.learning_rate},
                     {"rounds", training.rounds},
                     {"loss_tol", training.loss_tol}};
    j["payoff"] = {{"benefit", auto_benefit ? json("auto") : json(payoff.benefit)},
                   {"costs",
                    {{"c_plocal", payoff.costs.c_plocal},
                     {"c_pglobal", payoff.costs.c_pglobal},
                     {"c_m", payoff.costs.c_m},
                     {"c_m_prime", payoff.costs.c_m_prime}}}};
    if (data_source.kind == DataSourceConfig::Kind::Synthetic) {
        j["data_source"] = {{"type", "synthetic"},
                            {"num_classes", data_source.synthetic.num_classes},
                            {"rows_per_class", data_source.synthetic.rows_per_class},
                            {"input_dim", data_source.synthetic.input_dim},
                            {"separation", data_source.synthetic.separation}};
    } else {
        j["data_source"] = {{"type", "aras"},
                            {"paths", data_source.aras.paths},
                            {"window_seconds", data_source.aras.window_seconds},
                            {"resident", data_source.aras.resident}};
    }
    j["aux_fraction"] = aux_fraction;
    j["partition"] = {{"num_participants", partition.num_participants},
                      {"classes_per_participant", partition.classes_per_participant},
                      {"rows_per_participant", partition.rows_per_participant},
                      {"devices_per_participant", partition.devices_per_participant},
                      {"seed", partition.seed}};
    if (phi_mode.mode == PhiModeConfig::Mode::Measured) {
        j["phi_mode"] = {{"mode", "measured"}};
    } else {
        j["phi_mode"] = {{"mode", "model"}, {"gain", phi_mode.gain}};
    }
    if (k_policy.policy == KPolicyConfig::Policy::Auto) {
        j["k_policy"] = {{"policy", "auto"}, {"k_max", k_policy.k_max}};
    } else {
        j["k_policy"] = {{"policy", "fixed"}, {"k", k_policy.k}};
    }
    j["tau_source"] = tau_source == TauSource::Bootstrap ? "bootstrap"
                      : tau_source == TauSource::Theta  ? "theta"
                                                        : "phi_model";
    return j;
}

RunReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    RunReport rep;
    rep.config_echo = cfg.to_json();
    const std::size_t n = cfg.partition.num_participants;
    rep.num_participants = n;
    rep.total_iot_devices = 0;
    for (std::size_t d : cfg.partition.devices_per_participant) rep.total_iot_devices += d;

    // 1. data, auxiliary hold-out, partition
    LabeledDataset aux;
    std::vector<DeviceState> devices(n);
    {
        PhaseTimer timer(rep.timings_ms, "data");
        const LabeledDataset all = load_source(cfg);
        if (all.input_dim() != cfg.model.input_dim || all.num_classes != cfg.model.num_classes) {
            throw ConfigError("data source shape does not match the model spec");
        }
        const auto aux_idx = stratified_sample_indices(all, cfg.aux_fraction, mix_seed(cfg.master_seed, kStreamAux));
        const auto rest_idx = complement_indices(all.rows(), aux_idx);
        {
            // auxiliary-exclusion invariant, checked on source indices
            std::set<std::size_t> seen(aux_idx.begin(), aux_idx.end());
            for (std::size_t idx : rest_idx) {
                if (seen.count(idx)) throw ContractViolation("auxiliary row leaked into the training pool");
            }
            if (aux_idx.size() + rest_idx.size() != all.rows()) {
                throw ContractViolation("auxiliary split lost rows");
            }
        }
        aux = subset(all, aux_idx);
        if (aux.rows() == 0) throw DataError("auxiliary dataset is empty");
        const LabeledDataset rest = subset(all, rest_idx);
        auto parts = partition(rest, cfg.partition);
        for (std::size_t i = 0; i < n; ++i) {
            devices[i].id = static_cast<int>(i);
            devices[i].data = std::move(parts[i]);
            rep.partition_sizes.push_back(devices[i].data.rows());
        }
    }
    const Minibatch aux_batch = full_batch(aux.features, aux.labels);

    // 2. solo runs: theta_i, evaluated on the auxiliary hold-out
    rep.losses.theta.resize(n);
    {
        PhaseTimer timer(rep.timings_ms, "solo");
        for (std::size_t i = 0; i < n; ++i) {
            rep.losses.theta[i] = clamp_loss(
                run_solo(devices[i], cfg.model, cfg.training, aux, mix_seed(cfg.master_seed, kStreamSolo, i)));
        }
    }

    PayoffConfig payoff = cfg.payoff;
    if (cfg.auto_benefit) {
        payoff.benefit = 10.0 * payoff.costs.c_plocal * median(rep.losses.theta);
    }
    rep.benefit_used = payoff.benefit;

    // 3. bootstrap round: every player uploads once, tau from the server
    const ParameterVector w0 = init_params(cfg.model, mix_seed(cfg.master_seed, kStreamServerInit));
    std::map<int, double> tau_map;
    {
        PhaseTimer timer(rep.timings_ms, "bootstrap");
        ParameterServer server(cfg.model, w0);
        std::vector<DeviceState> scratch = devices; // bootstrap must not disturb solo state
        std::mt19937_64 order_rng(mix_seed(cfg.master_seed, kStreamBootstrapOrder));
        for (std::size_t idx : shuffled_indices(n, order_rng)) {
            participate_round(scratch[idx], server, cfg.training, aux,
                              mix_seed(cfg.master_seed, kStreamBootstrapRound, idx));
        }
        server.advance_round();
        rep.server_trace.push_back(
            ServerTraceEntry{"bootstrap", 0, l2_norm(server.global_params()), server.tau()});
        tau_map = server.tau();
    }
    rep.losses.tau.resize(n);
    for (std::size_t i = 0; i < n; ++i) rep.losses.tau[i] = clamp_loss(tau_map.at(static_cast<int>(i)));

    // 4. cluster the pre-game loss vector, fair strategy
    {
        PhaseTimer timer(rep.timings_ms, "cluster");
        std::map<int, double> values;
        for (std::size_t i = 0; i < n; ++i) {
            switch (cfg.tau_source) {
                case TauSource::Bootstrap: values[static_cast<int>(i)] = rep.losses.tau[i]; break;
                case TauSource::Theta: values[static_cast<int>(i)] = rep.losses.theta[i]; break;
                case TauSource::PhiModel:
                    values[static_cast<int>(i)] =
                        clamp_loss(rep.losses.theta[i] * (1.0 - cfg.phi_mode.gain));
                    break;
            }
        }
        rep.cluster_source = cfg.tau_source == TauSource::Bootstrap ? "tau"
                             : cfg.tau_source == TauSource::Theta ? "theta"
                                                                  : "phi_model";
        for (const auto& [id, value] : values) {
            (void)id;
            rep.cluster_values.push_back(value);
        }
        const std::size_t k = cfg.k_policy.policy == KPolicyConfig::Policy::Fixed
                                  ? cfg.k_policy.k
                                  : choose_k(values, cfg.k_policy.k_max);
        rep.cluster = kmeans_1d(values, k);
        rep.profile = fair_strategy(rep.cluster);
    }
    std::vector<DeviceState*> cooperators;
    for (std::size_t i = 0; i < n; ++i) {
        devices[i].strategy = rep.profile[i];
        if (rep.profile[i] == Strategy::CP) cooperators.push_back(&devices[i]);
    }
    rep.cooperation_rate = static_cast<double>(cooperators.size()) / static_cast<double>(n);

    // 5. phi: measured collaborative runs or the scaled model
    rep.losses.phi.resize(n);
    rep.phi_played.resize(n);
    {
        PhaseTimer timer(rep.timings_ms, "collaboration");
        if (cfg.phi_mode.mode == PhiModeConfig::Mode::Measured) {
            double phi_all_cp;
            const bool played_is_all_cp = cooperators.size() == n;
            if (n >= 2) {
                std::vector<DeviceState*> everyone;
                std::vector<DeviceState> scratch;
                if (played_is_all_cp) {
                    for (auto& d : devices) everyone.push_back(&d);
                } else {
                    scratch = devices;
                    for (auto& d : scratch) everyone.push_back(&d);
                }
                phi_all_cp = collaborative_run(everyone, cfg.model, w0, cfg.training, aux, cfg.master_seed,
                                               kTagAllCpRun, "all_cp_reference", rep.server_trace,
                                               /*record_history=*/played_is_all_cp);
            } else {
                phi_all_cp = rep.losses.theta[0]; // lone cooperator has no partners
            }
            for (std::size_t i = 0; i < n; ++i) rep.losses.phi[i] = clamp_loss(phi_all_cp);

            if (cooperators.size() >= 2 && !played_is_all_cp) {
                const double phi_played =
                    collaborative_run(cooperators, cfg.model, w0, cfg.training, aux, cfg.master_seed,
                                      kTagPlayedRun, "collaboration", rep.server_trace,
                                      /*record_history=*/true);
                for (std::size_t i = 0; i < n; ++i) {
                    rep.phi_played[i] = rep.profile[i] == Strategy::CP ? clamp_loss(phi_played)
                                                                       : rep.losses.phi[i];
                }
            } else if (cooperators.size() == 1) {
                for (std::size_t i = 0; i < n; ++i) {
                    rep.phi_played[i] =
                        rep.profile[i] == Strategy::CP ? rep.losses.theta[i] : rep.losses.phi[i];
                }
            } else {
                rep.phi_played = rep.losses.phi;
            }
        } else {
            const double g = cfg.phi_mode.gain;
            const std::size_t c_played = cooperators.size();
            for (std::size_t i = 0; i < n; ++i) {
                const double theta = rep.losses.theta[i];
                const double frac_all = n > 1 ? 1.0 : 0.0;
                rep.losses.phi[i] = clamp_loss(theta * (1.0 - g * frac_all));
                if (rep.profile[i] == Strategy::CP && c_played >= 1) {
                    const double frac =
                        n > 1 ? static_cast<double>(c_played - 1) / static_cast<double>(n - 1) : 0.0;
                    rep.phi_played[i] = clamp_loss(theta * (1.0 - g * frac));
                } else {
                    rep.phi_played[i] = rep.losses.phi[i];
                }
            }
        }
    }

    // 6. payoffs, equilibria, free-rider conditions
    {
        PhaseTimer timer(rep.timings_ms, "game");
        LossTable played_table = rep.losses;
        played_table.phi = rep.phi_played;
        rep.outcome = profile_payoffs(rep.profile, played_table, payoff);
        DeviationWitness w;
        rep.played_is_nash = is_nash(rep.profile, played_table, payoff, &w);
        if (!rep.played_is_nash) rep.witness = w;

        if (n <= kMaxEnumerationPlayers) {
            rep.equilibria = enumerate_nash(rep.losses, payoff);
        }
        rep.free_rider.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            rep.free_rider[i] = n >= 2 && free_rider_condition(i, rep.losses, payoff);
        }
    }

    rep.loss_histories.resize(n);
    for (std::size_t i = 0; i < n; ++i) rep.loss_histories[i] = devices[i].loss_history;
    return rep;
}

json RunReport::to_json(bool include_timings) const {
    json j;
    j["schema_version"] = 1;
    j["config"] = config_echo;

    const auto& costs = config_echo.at("payoff").at("costs");
    j["symbols"] = {{"N", num_participants},
                    {"n", total_iot_devices},
                    {"K", config_echo.at("training").at("batch_size")},
                    {"H", config_echo.at("training").at("local_epochs")},
                    {"alpha", config_echo.at("training").at("learning_rate")},
                    {"D_sizes", partition_sizes},
                    {"B", benefit_used},
                    {"c_plocal", costs.at("c_plocal")},
                    {"c_pglobal", costs.at("c_pglobal")},
                    {"c_m", costs.at("c_m")},
                    {"c_m_prime", costs.at("c_m_prime")},
                    {"c_t", costs.at("c_plocal").get<double>() + costs.at("c_pglobal").get<double>() +
                                costs.at("c_m").get<double>() + costs.at("c_m_prime").get<double>()},
                    {"C", outcome.cooperators},
                    {"N_minus_C", outcome.defectors}};

    j["losses"] = {{"theta", losses.theta},
                   {"phi_all_cp", losses.phi},
                   {"phi_played", phi_played},
                   {"tau", losses.tau}};

    json labels = json::array();
    for (const auto& [id, cluster_idx] : cluster.labels) {
        (void)id;
        labels.push_back(cluster_idx);
    }
    j["cluster"] = {{"source", cluster_source},
                    {"values", cluster_values},
                    {"k", cluster.k},
                    {"labels", labels},
                    {"centers", cluster.centers},
                    {"within_cluster_ss", cluster.within_cluster_ss}};

    j["profile"] = profile_to_json(profile);

    json equilibria = json::array();
    for (const auto& eq : equilibria_list()) equilibria.push_back(eq);
    j["game"] = {{"payoffs", outcome.payoffs},
                 {"cooperators", outcome.cooperators},
                 {"defectors", outcome.defectors},
                 {"cooperation_rate", cooperation_rate},
                 {"played_is_nash", played_is_nash},
                 {"equilibria", equilibria},
                 {"equilibria_enumerated", num_participants <= kMaxEnumerationPlayers},
                 {"free_rider", free_rider}};
    if (witness) {
        j["game"]["deviation_witness"] = {{"player", witness->player},
                                          {"to", to_string(witness->to)},
                                          {"gain", witness->gain}};
    } else {
        j["game"]["deviation_witness"] = nullptr;
    }

    json trace = json::array();
    for (const auto& entry : server_trace) {
        json tau = json::object();
        for (const auto& [id, value] : entry.tau) tau[std::to_string(id)] = value;
        trace.push_back({{"phase", entry.phase},
                         {"round", entry.round},
                         {"global_norm", entry.global_norm},
                         {"tau", tau}});
    }
    j["training_trace"] = {{"loss_histories", loss_histories}, {"server_trace", trace}};

    if (include_timings) {
        j["timings_ms"] = timings_ms;
    }
    return j;
}

std::vector<std::string> RunReport::equilibria_list() const {
    std::vector<std::string> out;
    out.reserve(equilibria.size());
    for (const auto& eq : equilibria) out.push_back(cdl::to_string(eq));
    return out;
}

std::string RunReport::losses_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "device,round,loss\n";
    for (std::size_t i = 0; i < loss_histories.size(); ++i) {
        for (std::size_t r = 0; r < loss_histories[i].size(); ++r) {
            out << i << ',' << r << ',' << loss_histories[i][r] << '\n';
        }
    }
    return out.str();
}

std::string RunReport::summary_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "device,strategy,theta,phi,tau,payoff\n";
    for (std::size_t i = 0; i < num_participants; ++i) {
        out << i << ',' << to_string(profile[i]) << ',' << losses.theta[i] << ',' << phi_played[i] << ','
            << losses.tau[i] << ',' << outcome.payoffs[i] << '\n';
    }
    return out.str();
}

} // namespace cdl
