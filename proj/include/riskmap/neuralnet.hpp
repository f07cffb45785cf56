#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "riskmap/errors.hpp"
#include "riskmap/matrix.hpp"
#include "riskmap/rng.hpp"
#include "riskmap/tsne.hpp"

namespace riskmap {

/// Per-column affine transform to zero mean / unit variance. Columns with
/// zero variance standardize to 0 and de-standardize back to their mean.
struct Standardizer {
    std::vector<double> means;
    std::vector<double> stds;

    bool empty() const { return means.empty(); }

    double transform_value(double v, std::size_t col) const {
        const double s = stds[col];
        return s == 0.0 ? 0.0 : (v - means[col]) / s;
    }
    double invert_value(double v, std::size_t col) const {
        return v * stds[col] + means[col];
    }
};

inline Standardizer fit_standardizer(const Matrix& m) {
    if (m.rows == 0) throw ConfigError("fit_standardizer: empty matrix");
    Standardizer s;
    s.means.assign(m.cols, 0.0);
    s.stds.assign(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) s.means[j] += m(i, j);
    }
    for (std::size_t j = 0; j < m.cols; ++j) s.means[j] /= static_cast<double>(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            const double d = m(i, j) - s.means[j];
            s.stds[j] += d * d;
        }
    }
    for (std::size_t j = 0; j < m.cols; ++j) {
        s.stds[j] = std::sqrt(s.stds[j] / static_cast<double>(m.rows));
    }
    return s;
}

struct MlpSpec {
    std::vector<std::size_t> layer_sizes;

    void validate() const {
        if (layer_sizes.size() < 2) throw ConfigError("mlp: need at least 2 layers");
        for (const std::size_t s : layer_sizes) {
            if (s < 1) throw ConfigError("mlp: all layer sizes must be >= 1");
        }
    }
    std::size_t n_weight_layers() const { return layer_sizes.size() - 1; }
};

/// Feed-forward net, tanh hidden layers, linear output. Both standardizers
/// are optional; when present, forward() maps raw inputs to de-standardized
/// outputs so callers never handle standardized units. The input
/// standardizer exists because embedding coordinates span tens of units,
/// which saturates the tanh layer under unit-scale initialization.
struct Mlp {
    MlpSpec spec;
    std::vector<Matrix> weights; // layer l: (layer_sizes[l+1] x layer_sizes[l])
    std::vector<std::vector<double>> biases;
    Standardizer input_standardizer;
    Standardizer target_standardizer;
};

/// Glorot-uniform weights in row-major fill order, zero biases.
inline Mlp init_mlp(const MlpSpec& spec, std::uint64_t seed) {
    spec.validate();
    Mlp mlp;
    mlp.spec = spec;
    Rng rng(seed);
    for (std::size_t l = 0; l < spec.n_weight_layers(); ++l) {
        const std::size_t fan_in = spec.layer_sizes[l];
        const std::size_t fan_out = spec.layer_sizes[l + 1];
        const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_out, fan_in);
        for (double& v : w.data) v = (2.0 * rng.uniform() - 1.0) * a;
        mlp.weights.push_back(std::move(w));
        mlp.biases.emplace_back(fan_out, 0.0);
    }
    return mlp;
}

namespace detail {

inline Matrix standardize_batch(const Standardizer& s, const Matrix& x) {
    if (s.empty()) return x;
    if (x.cols != s.means.size()) {
        throw DataError("mlp: input width " + std::to_string(x.cols) +
                        " does not match standardizer width " +
                        std::to_string(s.means.size()));
    }
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = 0; j < x.cols; ++j) out(i, j) = s.transform_value(x(i, j), j);
    }
    return out;
}

/// Forward pass on an already-standardized batch; returns the per-layer
/// activations, activations[0] being the input and .back() the raw
/// (standardized-space) output.
inline std::vector<Matrix> forward_activations(const Mlp& mlp, const Matrix& x_std) {
    if (x_std.cols != mlp.spec.layer_sizes.front()) {
        throw DataError("mlp: input width " + std::to_string(x_std.cols) +
                        " does not match spec input width " +
                        std::to_string(mlp.spec.layer_sizes.front()));
    }
    std::vector<Matrix> acts;
    acts.reserve(mlp.spec.layer_sizes.size());
    acts.push_back(x_std);
    const std::size_t n_layers = mlp.spec.n_weight_layers();
    for (std::size_t l = 0; l < n_layers; ++l) {
        const Matrix& w = mlp.weights[l];
        const std::vector<double>& b = mlp.biases[l];
        const Matrix& in = acts.back();
        Matrix out(in.rows, w.rows);
        const bool hidden = l + 1 < n_layers;
        for (std::size_t i = 0; i < in.rows; ++i) {
            for (std::size_t o = 0; o < w.rows; ++o) {
                double z = b[o];
                for (std::size_t k = 0; k < w.cols; ++k) z += w(o, k) * in(i, k);
                out(i, o) = hidden ? std::tanh(z) : z;
            }
        }
        acts.push_back(std::move(out));
    }
    return acts;
}

struct LossAndGradients {
    double loss = 0.0;
    std::vector<Matrix> weight_grads;
    std::vector<std::vector<double>> bias_grads;
};

/// Backpropagation of the batch-mean squared error on standardized data.
inline LossAndGradients mse_core(const Mlp& mlp, const Matrix& x_std, const Matrix& t_std) {
    if (x_std.rows != t_std.rows) throw ConfigError("mlp: batch size mismatch");
    if (t_std.cols != mlp.spec.layer_sizes.back()) {
        throw DataError("mlp: target width does not match spec output width");
    }
    const std::vector<Matrix> acts = forward_activations(mlp, x_std);
    const Matrix& pred = acts.back();
    const std::size_t batch = x_std.rows;
    const std::size_t n_out = pred.cols;
    const double inv_bk = 1.0 / (static_cast<double>(batch) * static_cast<double>(n_out));

    LossAndGradients out;
    Matrix delta(batch, n_out);
    for (std::size_t i = 0; i < batch; ++i) {
        for (std::size_t o = 0; o < n_out; ++o) {
            const double d = pred(i, o) - t_std(i, o);
            out.loss += d * d;
            delta(i, o) = 2.0 * d * inv_bk;
        }
    }
    out.loss *= inv_bk;

    const std::size_t n_layers = mlp.spec.n_weight_layers();
    out.weight_grads.resize(n_layers);
    out.bias_grads.resize(n_layers);
    for (std::size_t l = n_layers; l-- > 0;) {
        const Matrix& in = acts[l];
        Matrix& dw = out.weight_grads[l];
        dw = Matrix(mlp.weights[l].rows, mlp.weights[l].cols, 0.0);
        std::vector<double>& db = out.bias_grads[l];
        db.assign(mlp.biases[l].size(), 0.0);
        for (std::size_t i = 0; i < batch; ++i) {
            for (std::size_t o = 0; o < dw.rows; ++o) {
                const double d = delta(i, o);
                db[o] += d;
                for (std::size_t k = 0; k < dw.cols; ++k) dw(o, k) += d * in(i, k);
            }
        }
        if (l > 0) {
            const Matrix& w = mlp.weights[l];
            Matrix prev(batch, w.cols, 0.0);
            for (std::size_t i = 0; i < batch; ++i) {
                for (std::size_t o = 0; o < w.rows; ++o) {
                    const double d = delta(i, o);
                    for (std::size_t k = 0; k < w.cols; ++k) prev(i, k) += d * w(o, k);
                }
                for (std::size_t k = 0; k < w.cols; ++k) {
                    const double a = in(i, k);
                    prev(i, k) *= 1.0 - a * a;
                }
            }
            delta = std::move(prev);
        }
    }
    return out;
}

} // namespace detail

/// Maps raw inputs to de-standardized outputs.
inline Matrix forward(const Mlp& mlp, const Matrix& x) {
    const Matrix x_std = detail::standardize_batch(mlp.input_standardizer, x);
    const std::vector<Matrix> acts = detail::forward_activations(mlp, x_std);
    Matrix out = acts.back();
    if (!mlp.target_standardizer.empty()) {
        for (std::size_t i = 0; i < out.rows; ++i) {
            for (std::size_t j = 0; j < out.cols; ++j) {
                out(i, j) = mlp.target_standardizer.invert_value(out(i, j), j);
            }
        }
    }
    return out;
}

/// Loss and parameter gradients of the batch-mean squared error; targets are
/// compared in standardized space when a target standardizer is present.
inline detail::LossAndGradients mse_loss_and_gradients(const Mlp& mlp, const Matrix& x,
                                                       const Matrix& targets) {
    const Matrix x_std = detail::standardize_batch(mlp.input_standardizer, x);
    const Matrix t_std = detail::standardize_batch(mlp.target_standardizer, targets);
    return detail::mse_core(mlp, x_std, t_std);
}

struct TrainConfig {
    std::size_t epochs = 200;
    std::size_t batch_size = 64;
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::uint64_t seed = 0;
    bool shuffle_each_epoch = true;

    void validate() const {
        if (epochs < 1 || batch_size < 1) {
            throw ConfigError("train: epochs and batch_size must be >= 1");
        }
        if (momentum < 0.0 || momentum >= 1.0) {
            throw ConfigError("train: momentum must lie in [0, 1)");
        }
        if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
            throw ConfigError("train: learning_rate must be finite and >= 0");
        }
    }
};

struct TrainResult {
    Mlp model;
    std::vector<double> epoch_loss;
};

/// Mini-batch gradient descent with momentum. Fits and stores the target
/// standardizer; an input standardizer already present on the model is
/// honored. Epoch loss is the size-weighted mean of batch losses.
inline TrainResult train(Mlp mlp, const Matrix& x, const Matrix& targets,
                         const TrainConfig& cfg) {
    cfg.validate();
    if (x.rows == 0 || x.rows != targets.rows) {
        throw ConfigError("train: need >= 1 sample and matching target rows");
    }
    mlp.target_standardizer = fit_standardizer(targets);
    const Matrix x_std = detail::standardize_batch(mlp.input_standardizer, x);
    const Matrix t_std = detail::standardize_batch(mlp.target_standardizer, targets);

    const std::size_t n = x.rows;
    std::vector<Matrix> w_vel;
    std::vector<std::vector<double>> b_vel;
    for (std::size_t l = 0; l < mlp.spec.n_weight_layers(); ++l) {
        w_vel.emplace_back(mlp.weights[l].rows, mlp.weights[l].cols, 0.0);
        b_vel.emplace_back(mlp.biases[l].size(), 0.0);
    }

    Rng rng(derive_seed(cfg.seed, 2));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    TrainResult result;
    result.epoch_loss.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (cfg.shuffle_each_epoch) rng.shuffle(order);
        double loss_acc = 0.0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t bsize = std::min(cfg.batch_size, n - start);
            Matrix xb(bsize, x_std.cols);
            Matrix tb(bsize, t_std.cols);
            for (std::size_t i = 0; i < bsize; ++i) {
                const std::size_t src = order[start + i];
                for (std::size_t j = 0; j < x_std.cols; ++j) xb(i, j) = x_std(src, j);
                for (std::size_t j = 0; j < t_std.cols; ++j) tb(i, j) = t_std(src, j);
            }
            const detail::LossAndGradients lg = detail::mse_core(mlp, xb, tb);
            if (!std::isfinite(lg.loss)) {
                throw NumericError("train: non-finite loss at epoch " +
                                   std::to_string(epoch));
            }
            loss_acc += lg.loss * static_cast<double>(bsize);
            for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
                Matrix& wv = w_vel[l];
                Matrix& w = mlp.weights[l];
                const Matrix& dw = lg.weight_grads[l];
                for (std::size_t k = 0; k < w.data.size(); ++k) {
                    wv.data[k] = cfg.momentum * wv.data[k] - cfg.learning_rate * dw.data[k];
                    w.data[k] += wv.data[k];
                }
                std::vector<double>& bv = b_vel[l];
                std::vector<double>& b = mlp.biases[l];
                const std::vector<double>& db = lg.bias_grads[l];
                for (std::size_t k = 0; k < b.size(); ++k) {
                    bv[k] = cfg.momentum * bv[k] - cfg.learning_rate * db[k];
                    b[k] += bv[k];
                }
            }
        }
        result.epoch_loss.push_back(loss_acc / static_cast<double>(n));
    }
    result.model = std::move(mlp);
    return result;
}

/// Shared fit path for every net of NN_risk's shape: 2 inputs, one tanh
/// hidden layer, 1 linear output, input standardizer fitted on the
/// embedding coordinates. Used verbatim by both the claim regressor and the
/// insurer-risk surface so the two surfaces are built by the same mechanism.
inline Mlp fit_value_net(const Matrix& coords, const std::vector<double>& values,
                         const TrainConfig& cfg, std::size_t hidden_width = 5) {
    if (coords.cols != 2) throw ConfigError("fit_value_net: coordinates must be 2D");
    if (coords.rows != values.size()) {
        throw ConfigError("fit_value_net: row count mismatch");
    }
    MlpSpec spec{{2, hidden_width, 1}};
    Mlp mlp = init_mlp(spec, derive_seed(cfg.seed, 1));
    mlp.input_standardizer = fit_standardizer(coords);
    Matrix targets(values.size(), 1);
    for (std::size_t i = 0; i < values.size(); ++i) targets(i, 0) = values[i];
    return train(std::move(mlp), coords, targets, cfg).model;
}

/// NN_tsne: learns the feature-to-embedding map so unseen contracts can be
/// placed on the trained embedding plane.
inline Mlp fit_nn_tsne(const Matrix& x_train, const Embedding& embedding,
                       const TrainConfig& cfg) {
    if (x_train.rows != embedding.y.rows) {
        throw ConfigError("fit_nn_tsne: row count mismatch");
    }
    MlpSpec spec{{x_train.cols, 100, 2}};
    Mlp mlp = init_mlp(spec, derive_seed(cfg.seed, 1));
    mlp.input_standardizer = fit_standardizer(x_train);
    return train(std::move(mlp), x_train, embedding.y, cfg).model;
}

/// NN_risk: regresses the 0/1 claim indicator on embedding coordinates. The
/// raw output is unbounded; surface construction min-max normalizes it.
inline Mlp fit_nn_risk(const Embedding& embedding, const std::vector<int>& claims,
                       const TrainConfig& cfg, std::size_t hidden_width = 5) {
    if (embedding.y.rows != claims.size()) {
        throw ConfigError("fit_nn_risk: row count mismatch");
    }
    std::vector<double> values(claims.size());
    for (std::size_t i = 0; i < claims.size(); ++i) {
        if (claims[i] != 0 && claims[i] != 1) {
            throw DataError("fit_nn_risk: claims must be 0 or 1");
        }
        values[i] = static_cast<double>(claims[i]);
    }
    return fit_value_net(embedding.y, values, cfg, hidden_width);
}

} // namespace riskmap
