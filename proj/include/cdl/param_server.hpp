#pragma once

#include <map>
#include <vector>

#include "cdl/dataset.hpp"
#include "cdl/model.hpp"

namespace cdl {

struct UpdateLogEntry {
    int participant = 0;
    std::size_t round = 0;
};

struct ServerSnapshot {
    ParameterVector params;
    std::map<int, double> tau;
};

// Holds w_global, applies uploaded deltas additively, and scores each upload
// on the auxiliary dataset. Mutated by one logical event loop at a time;
// snapshots are plain values and may cross threads freely.
class ParameterServer {
public:
    ParameterServer(ModelSpec spec, ParameterVector initial);

    // w_global += delta, appends to the update log at the current round.
    void apply_update(int who, const GradientDelta& delta);

    // tau_who = loss(w_global + delta, aux), evaluated without applying the
    // delta; stored and returned.
    double score_on_auxiliary(int who, const GradientDelta& delta, const LabeledDataset& aux);

    ServerSnapshot snapshot() const;

    void advance_round() { ++round_; }
    std::size_t round() const { return round_; }

    const ParameterVector& global_params() const { return global_; }
    const std::vector<UpdateLogEntry>& update_log() const { return log_; }
    const std::map<int, double>& tau() const { return tau_; }
    const ModelSpec& spec() const { return spec_; }

private:
    ModelSpec spec_;
    ParameterVector global_;
    std::vector<UpdateLogEntry> log_;
    std::map<int, double> tau_;
    std::size_t round_ = 0;
};

} // namespace cdl
