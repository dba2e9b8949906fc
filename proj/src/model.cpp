#include "cdl/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "cdl/error.hpp"

namespace cdl {

namespace {

constexpr double kProbFloor = 1e-12;

struct LayerView {
    std::size_t w_off; // first weight index
    std::size_t b_off; // first bias index
    std::size_t in;
    std::size_t out;
};

std::vector<LayerView> layer_views(const ModelSpec& spec) {
    const auto dims = spec.layer_dims();
    std::vector<LayerView> views;
    views.reserve(dims.size() - 1);
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        LayerView v{off, off + dims[l] * dims[l + 1], dims[l], dims[l + 1]};
        views.push_back(v);
        off = v.b_off + v.out;
    }
    return views;
}

void check_compatible(const ModelSpec& spec, const ParameterVector& params, const Minibatch& batch) {
    spec.validate();
    if (params.size() != spec.param_count()) {
        throw ContractViolation("parameter vector has length " + std::to_string(params.size()) +
                                ", model expects " + std::to_string(spec.param_count()));
    }
    if (batch.features.cols() != spec.input_dim) {
        throw ContractViolation("batch has " + std::to_string(batch.features.cols()) +
                                " features, model expects " + std::to_string(spec.input_dim));
    }
    if (batch.features.rows() != batch.labels.size()) {
        throw ContractViolation("batch has " + std::to_string(batch.features.rows()) +
                                " rows but " + std::to_string(batch.labels.size()) + " labels");
    }
    for (int label : batch.labels) {
        if (label < 0 || static_cast<std::size_t>(label) >= spec.num_classes) {
            throw ContractViolation("label " + std::to_string(label) + " outside [0, " +
                                    std::to_string(spec.num_classes) + ")");
        }
    }
}

// Forward pass for one sample; fills pre-activations z and activations a per
// layer (a[0] is the input row). Softmax is computed max-shifted.
void forward_sample(const std::vector<LayerView>& views, const ParameterVector& params,
                    const Matrix& features, std::size_t row,
                    std::vector<std::vector<double>>& z, std::vector<std::vector<double>>& a) {
    a[0].resize(views.front().in);
    for (std::size_t c = 0; c < views.front().in; ++c) a[0][c] = features(row, c);

    for (std::size_t l = 0; l < views.size(); ++l) {
        const LayerView& v = views[l];
        z[l].assign(v.out, 0.0);
        for (std::size_t j = 0; j < v.out; ++j) {
            double acc = params[v.b_off + j];
            const double* w = params.data() + v.w_off + j * v.in;
            for (std::size_t i = 0; i < v.in; ++i) acc += w[i] * a[l][i];
            z[l][j] = acc;
        }
        const bool last = (l + 1 == views.size());
        a[l + 1].resize(v.out);
        if (last) {
            double zmax = z[l][0];
            for (double v2 : z[l]) zmax = std::max(zmax, v2);
            double sum = 0.0;
            for (std::size_t j = 0; j < v.out; ++j) {
                a[l + 1][j] = std::exp(z[l][j] - zmax);
                sum += a[l + 1][j];
            }
            for (std::size_t j = 0; j < v.out; ++j) a[l + 1][j] /= sum;
        } else {
            for (std::size_t j = 0; j < v.out; ++j) a[l + 1][j] = z[l][j] > 0.0 ? z[l][j] : 0.0;
        }
    }
}

} // namespace

std::vector<std::size_t> ModelSpec::layer_dims() const {
    std::vector<std::size_t> dims;
    dims.reserve(hidden_dims.size() + 2);
    dims.push_back(input_dim);
    dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
    dims.push_back(num_classes);
    return dims;
}

std::size_t ModelSpec::param_count() const {
    const auto dims = layer_dims();
    std::size_t count = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) count += (dims[l] + 1) * dims[l + 1];
    return count;
}

void ModelSpec::validate() const {
    if (input_dim < 1) throw ContractViolation("ModelSpec: input_dim must be >= 1");
    if (num_classes < 2) throw ContractViolation("ModelSpec: num_classes must be >= 2");
    for (std::size_t h : hidden_dims) {
        if (h < 1) throw ContractViolation("ModelSpec: hidden dims must be positive");
    }
}

ParameterVector init_params(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    ParameterVector params(spec.param_count(), 0.0);
    std::mt19937_64 rng(seed);
    for (const LayerView& v : layer_views(spec)) {
        const double limit = std::sqrt(6.0 / static_cast<double>(v.in + v.out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (std::size_t i = 0; i < v.in * v.out; ++i) params[v.w_off + i] = dist(rng);
        // biases stay zero
    }
    return params;
}

Matrix forward(const ModelSpec& spec, const ParameterVector& params, const Minibatch& batch) {
    check_compatible(spec, params, batch);
    const auto views = layer_views(spec);
    Matrix probs(batch.features.rows(), spec.num_classes);
    std::vector<std::vector<double>> z(views.size()), a(views.size() + 1);
    for (std::size_t r = 0; r < batch.features.rows(); ++r) {
        forward_sample(views, params, batch.features, r, z, a);
        for (std::size_t c = 0; c < spec.num_classes; ++c) probs(r, c) = a.back()[c];
    }
    return probs;
}

double loss(const ModelSpec& spec, const ParameterVector& params, const Minibatch& batch) {
    const Matrix probs = forward(spec, params, batch);
    if (probs.rows() == 0) return 0.0;
    double acc = 0.0;
    for (std::size_t r = 0; r < probs.rows(); ++r) {
        const double p = probs(r, static_cast<std::size_t>(batch.labels[r]));
        acc += -std::log(p > kProbFloor ? p : kProbFloor);
    }
    return acc / static_cast<double>(probs.rows());
}

GradientDelta gradient(const ModelSpec& spec, const ParameterVector& params, const Minibatch& batch) {
    check_compatible(spec, params, batch);
    const auto views = layer_views(spec);
    const std::size_t n = batch.features.rows();
    GradientDelta grad(params.size(), 0.0);
    if (n == 0) return grad;

    std::vector<std::vector<double>> z(views.size()), a(views.size() + 1);
    std::vector<double> dz, da;
    for (std::size_t r = 0; r < n; ++r) {
        forward_sample(views, params, batch.features, r, z, a);

        // softmax + cross-entropy head: dL/dz = p - onehot
        dz = a.back();
        dz[static_cast<std::size_t>(batch.labels[r])] -= 1.0;

        for (std::size_t l = views.size(); l-- > 0;) {
            const LayerView& v = views[l];
            for (std::size_t j = 0; j < v.out; ++j) {
                const double g = dz[j];
                double* wgrad = grad.data() + v.w_off + j * v.in;
                for (std::size_t i = 0; i < v.in; ++i) wgrad[i] += g * a[l][i];
                grad[v.b_off + j] += g;
            }
            if (l == 0) break;
            da.assign(v.in, 0.0);
            for (std::size_t j = 0; j < v.out; ++j) {
                const double g = dz[j];
                const double* w = params.data() + v.w_off + j * v.in;
                for (std::size_t i = 0; i < v.in; ++i) da[i] += w[i] * g;
            }
            dz.resize(v.in);
            for (std::size_t i = 0; i < v.in; ++i) dz[i] = z[l - 1][i] > 0.0 ? da[i] : 0.0;
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (double& g : grad) g *= inv_n;
    return grad;
}

GradientDelta sgd_accumulate(const GradientDelta& delta, const GradientDelta& grad, double alpha) {
    if (delta.size() != grad.size()) {
        throw ContractViolation("sgd_accumulate: delta length " + std::to_string(delta.size()) +
                                " != grad length " + std::to_string(grad.size()));
    }
    GradientDelta out(delta.size());
    for (std::size_t i = 0; i < delta.size(); ++i) out[i] = delta[i] - alpha * grad[i];
    return out;
}

ParameterVector add_delta(const ParameterVector& params, const GradientDelta& delta) {
    if (params.size() != delta.size()) {
        throw ContractViolation("add_delta: params length " + std::to_string(params.size()) +
                                " != delta length " + std::to_string(delta.size()));
    }
    ParameterVector out(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) out[i] = params[i] + delta[i];
    return out;
}

Minibatch full_batch(const Matrix& features, const std::vector<int>& labels) {
    return Minibatch{features, labels};
}

} // namespace cdl
