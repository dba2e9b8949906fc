#include "cdl/device.hpp"

#include <cmath>
#include <random>
#include <string>

#include "cdl/error.hpp"
#include "cdl/rng.hpp"

namespace cdl {

void TrainingConfig::validate() const {
    if (batch_size < 1) throw ContractViolation("TrainingConfig: batch_size must be >= 1");
    if (local_epochs < 1) throw ContractViolation("TrainingConfig: local_epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw ContractViolation("TrainingConfig: learning_rate must be positive");
    if (rounds < 1) throw ContractViolation("TrainingConfig: rounds must be >= 1");
    if (loss_tol < 0.0) throw ContractViolation("TrainingConfig: loss_tol must be >= 0");
}

GradientDelta local_training_round(DeviceState& dev, const ModelSpec& spec, const ParameterVector& base,
                                   const TrainingConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (dev.data.rows() == 0) {
        throw ContractViolation("device " + std::to_string(dev.id) + " has no local data");
    }
    const std::size_t n = dev.data.rows();
    GradientDelta delta(base.size(), 0.0);
    std::mt19937_64 rng(seed);

    Minibatch mb;
    for (std::size_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
        const auto perm = shuffled_indices(n, rng);
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, n);
            mb.features = Matrix(end - start, dev.data.input_dim());
            mb.labels.resize(end - start);
            for (std::size_t i = start; i < end; ++i) {
                const std::size_t src = perm[i];
                for (std::size_t c = 0; c < dev.data.input_dim(); ++c) {
                    mb.features(i - start, c) = dev.data.features(src, c);
                }
                mb.labels[i - start] = dev.data.labels[src];
            }
            const GradientDelta grad = gradient(spec, add_delta(base, delta), mb);
            delta = sgd_accumulate(delta, grad, cfg.learning_rate);
        }
    }
    dev.params = add_delta(base, delta);
    return delta;
}

double run_solo(DeviceState& dev, const ModelSpec& spec, const TrainingConfig& cfg,
                const LabeledDataset& eval, std::uint64_t seed) {
    cfg.validate();
    if (dev.data.rows() == 0) {
        throw ContractViolation("device " + std::to_string(dev.id) + " has no local data");
    }
    if (eval.rows() == 0) throw ContractViolation("run_solo: eval dataset is empty");

    dev.params = init_params(spec, mix_seed(seed, 0));
    dev.loss_history.clear();
    const Minibatch eval_batch = full_batch(eval.features, eval.labels);
    for (std::size_t r = 0; r < cfg.rounds; ++r) {
        local_training_round(dev, spec, dev.params, cfg, mix_seed(seed, r + 1));
        const double l = loss(spec, dev.params, eval_batch);
        dev.loss_history.push_back(l);
        if (dev.loss_history.size() >= 2 &&
            std::fabs(l - dev.loss_history[dev.loss_history.size() - 2]) < cfg.loss_tol) {
            break;
        }
    }
    return dev.loss_history.back();
}

GradientDelta participate_round(DeviceState& dev, ParameterServer& server, const TrainingConfig& cfg,
                                const LabeledDataset& aux, std::uint64_t seed) {
    const ServerSnapshot snap = server.snapshot();
    const GradientDelta delta = local_training_round(dev, server.spec(), snap.params, cfg, seed);
    server.score_on_auxiliary(dev.id, delta, aux);
    server.apply_update(dev.id, delta);
    return delta;
}

} // namespace cdl
