#pragma once

#include <cstdint>
#include <vector>

#include "cdl/matrix.hpp"

namespace cdl {

// Feed-forward classifier: relu hidden layers, softmax head, cross-entropy
// loss. All parameters live in one flat vector in layer-major order: for each
// layer, a fan_out x fan_in weight block (row-major, one row per output unit)
// followed by fan_out biases. Everything is double precision.
struct ModelSpec {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden_dims; // may be empty (linear softmax model)
    std::size_t num_classes = 0;

    // [input_dim, hidden..., num_classes]
    std::vector<std::size_t> layer_dims() const;
    std::size_t param_count() const; // sum over layers of (fan_in + 1) * fan_out
    void validate() const;           // throws ContractViolation
};

// Flat weight/bias vector in the layout described on ModelSpec.
using ParameterVector = std::vector<double>;

// Accumulated local update, same layout as ParameterVector.
using GradientDelta = std::vector<double>;

struct Minibatch {
    Matrix features;         // rows x input_dim
    std::vector<int> labels; // class indices in [0, num_classes)
};

// Deterministic initialization: weights uniform in +-sqrt(6 / (fan_in + fan_out)),
// biases zero.
ParameterVector init_params(const ModelSpec& spec, std::uint64_t seed);

// Class-probability matrix, one row per batch row; rows sum to 1.
Matrix forward(const ModelSpec& spec, const ParameterVector& params, const Minibatch& batch);

// Mean cross-entropy over the batch. Probabilities are clamped at 1e-12
// before the log, so the result is always finite.
double loss(const ModelSpec& spec, const ParameterVector& params, const Minibatch& batch);

// Analytic gradient of loss() with respect to every parameter.
GradientDelta gradient(const ModelSpec& spec, const ParameterVector& params, const Minibatch& batch);

// delta - alpha * grad, elementwise.
GradientDelta sgd_accumulate(const GradientDelta& delta, const GradientDelta& grad, double alpha);

// params + delta, elementwise.
ParameterVector add_delta(const ParameterVector& params, const GradientDelta& delta);

Minibatch full_batch(const Matrix& features, const std::vector<int>& labels);

} // namespace cdl
