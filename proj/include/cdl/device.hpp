#pragma once

#include <cstdint>
#include <vector>

#include "cdl/dataset.hpp"
#include "cdl/model.hpp"
#include "cdl/param_server.hpp"
#include "cdl/strategy.hpp"

namespace cdl {

struct TrainingConfig {
    std::size_t batch_size = 10;   // K
    std::size_t local_epochs = 1;  // H
    double learning_rate = 0.01;   // alpha
    std::size_t rounds = 1;        // R
    double loss_tol = 0.0;         // early stop when |loss_t - loss_{t-1}| < loss_tol

    void validate() const;
};

// One mobile edge device: its data partition, its current parameters, and the
// training history behind theta_i / phi_i.
struct DeviceState {
    int id = 0;
    LabeledDataset data;
    ParameterVector params;
    Strategy strategy = Strategy::DF;
    std::vector<double> loss_history;
};

// One communication round of local SGD: delta starts at zero; for each of H
// epochs the data is shuffled (seeded) and split into size-K minibatches (the
// final short batch is kept), and for each minibatch the gradient is taken at
// (base + delta) and folded in as delta -= alpha * grad. Afterwards
// dev.params = base + delta. The epoch order is shuffled_indices() driven by
// mt19937_64(seed), so a trace can be replayed exactly.
GradientDelta local_training_round(DeviceState& dev, const ModelSpec& spec, const ParameterVector& base,
                                   const TrainingConfig& cfg, std::uint64_t seed);

// Train alone for up to cfg.rounds rounds, never touching a server. Parameters
// are self-initialized with init_params(spec, mix_seed(seed, 0)); round r uses
// seed mix_seed(seed, r + 1). Records loss on `eval` after each round and
// returns the final value (theta_i).
double run_solo(DeviceState& dev, const ModelSpec& spec, const TrainingConfig& cfg,
                const LabeledDataset& eval, std::uint64_t seed);

// One cooperative round: snapshot w_global, train one round on it, score the
// upload on the auxiliary set (tau), then apply it. Defectors never call this.
GradientDelta participate_round(DeviceState& dev, ParameterServer& server, const TrainingConfig& cfg,
                                const LabeledDataset& aux, std::uint64_t seed);

} // namespace cdl
