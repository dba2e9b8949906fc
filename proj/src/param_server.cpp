#include "cdl/param_server.hpp"

#include <string>

#include "cdl/error.hpp"

namespace cdl {

ParameterServer::ParameterServer(ModelSpec spec, ParameterVector initial)
    : spec_(std::move(spec)), global_(std::move(initial)) {
    spec_.validate();
    if (global_.size() != spec_.param_count()) {
        throw ContractViolation("server initial params have length " + std::to_string(global_.size()) +
                                ", model expects " + std::to_string(spec_.param_count()));
    }
}

void ParameterServer::apply_update(int who, const GradientDelta& delta) {
    if (delta.size() != global_.size()) {
        throw ContractViolation("update from participant " + std::to_string(who) + " has length " +
                                std::to_string(delta.size()) + ", expected " + std::to_string(global_.size()));
    }
    for (std::size_t i = 0; i < global_.size(); ++i) global_[i] += delta[i];
    log_.push_back(UpdateLogEntry{who, round_});
}

double ParameterServer::score_on_auxiliary(int who, const GradientDelta& delta, const LabeledDataset& aux) {
    if (aux.rows() == 0) throw ContractViolation("score_on_auxiliary: auxiliary dataset is empty");
    const ParameterVector candidate = add_delta(global_, delta);
    const double tau = loss(spec_, candidate, full_batch(aux.features, aux.labels));
    tau_[who] = tau;
    return tau;
}

ServerSnapshot ParameterServer::snapshot() const { return ServerSnapshot{global_, tau_}; }

} // namespace cdl
