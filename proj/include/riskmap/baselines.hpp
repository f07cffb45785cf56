#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "riskmap/dataset.hpp"
#include "riskmap/errors.hpp"
#include "riskmap/format.hpp"
#include "riskmap/matrix.hpp"
#include "riskmap/metrics.hpp"
#include "riskmap/neuralnet.hpp"
#include "riskmap/rng.hpp"

namespace riskmap {

enum class ModelKind { linear, logistic, tree, forest, boost, mlp };

inline std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::linear: return "Linear Regression";
        case ModelKind::logistic: return "Logistic Regression";
        case ModelKind::tree: return "Decision Tree";
        case ModelKind::forest: return "Random Forest";
        case ModelKind::boost: return "Gradient Boost";
        case ModelKind::mlp: return "Neural Network";
    }
    throw ConfigError("unknown model kind");
}

inline ModelKind parse_model_kind(const std::string& id) {
    if (id == "linear") return ModelKind::linear;
    if (id == "logistic") return ModelKind::logistic;
    if (id == "tree") return ModelKind::tree;
    if (id == "forest") return ModelKind::forest;
    if (id == "boost") return ModelKind::boost;
    if (id == "nn" || id == "mlp") return ModelKind::mlp;
    throw ConfigError("unknown model kind '" + id +
                      "' (expected linear|logistic|tree|forest|boost|nn)");
}

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes; // root at index 0
};

/// One trained comparison model of any kind. Unbounded-output kinds carry a
/// min-max normalizer over their training predictions; logistic outputs are
/// probabilities and stay untouched.
struct BaselineModel {
    ModelKind kind = ModelKind::linear;
    std::vector<double> coefficients;
    double intercept = 0.0;
    Standardizer input_standardizer; // logistic only
    std::vector<Tree> trees;
    double boost_base = 0.0;
    double shrinkage = 0.0;
    Mlp mlp;
    bool has_output_normalizer = false;
    double out_min = 0.0;
    double out_max = 1.0;
    std::string hyperparameters = "none";
};

namespace detail {

inline double tree_predict(const Tree& tree, const double* x) {
    int node = 0;
    while (tree.nodes[node].feature >= 0) {
        const TreeNode& n = tree.nodes[node];
        node = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
    }
    return tree.nodes[node].value;
}

struct SplitChoice {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double children_sse = 0.0;
};

/// Exhaustive CART split search over the given features: candidates are
/// midpoints between consecutive distinct sorted values, children must keep
/// min_leaf samples, ties resolved toward the lowest feature then the lowest
/// threshold by scan order with strict improvement.
inline SplitChoice best_split(const Matrix& x, const std::vector<double>& y,
                              const std::vector<std::size_t>& items,
                              const std::vector<std::size_t>& features,
                              std::size_t min_leaf) {
    const std::size_t n = items.size();
    SplitChoice best;
    std::vector<std::size_t> order(n);
    std::vector<double> pre_sum(n + 1), pre_sumsq(n + 1);
    for (const std::size_t f : features) {
        for (std::size_t i = 0; i < n; ++i) order[i] = items[i];
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double va = x(a, f), vb = x(b, f);
            if (va != vb) return va < vb;
            return a < b;
        });
        pre_sum[0] = 0.0;
        pre_sumsq[0] = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = y[order[i]];
            pre_sum[i + 1] = pre_sum[i] + t;
            pre_sumsq[i + 1] = pre_sumsq[i] + t * t;
        }
        for (std::size_t m = min_leaf; m + min_leaf <= n; ++m) {
            const double lo = x(order[m - 1], f);
            const double hi = x(order[m], f);
            if (lo == hi) continue;
            const double left_sse = pre_sumsq[m] - pre_sum[m] * pre_sum[m] / static_cast<double>(m);
            const double rs = pre_sum[n] - pre_sum[m];
            const double right_sse = (pre_sumsq[n] - pre_sumsq[m]) -
                                     rs * rs / static_cast<double>(n - m);
            const double total = left_sse + right_sse;
            if (!best.found || total < best.children_sse) {
                best.found = true;
                best.feature = f;
                best.threshold = (lo + hi) / 2.0;
                best.children_sse = total;
            }
        }
    }
    return best;
}

struct TreeGrower {
    const Matrix& x;
    const std::vector<double>& y;
    std::size_t max_depth;
    std::size_t min_leaf;
    Rng* rng = nullptr;             // feature subsampling when set
    std::size_t n_sub_features = 0; // features drawn per split when rng set
    Tree tree;
    std::vector<std::size_t> all_features;

    int grow(std::vector<std::size_t> items, std::size_t depth) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        const std::size_t n = items.size();
        double sum = 0.0;
        for (const std::size_t i : items) sum += y[i];
        const double mean = sum / static_cast<double>(n);
        tree.nodes[id].value = mean;

        bool constant = true;
        for (const std::size_t i : items) {
            if (y[i] != y[items[0]]) {
                constant = false;
                break;
            }
        }
        if (depth >= max_depth || n < 2 * min_leaf || constant) return id;

        std::vector<std::size_t> features = all_features;
        if (rng && n_sub_features < all_features.size()) {
            for (std::size_t i = 0; i < n_sub_features; ++i) {
                const std::size_t j = i + rng->uniform_index(features.size() - i);
                std::swap(features[i], features[j]);
            }
            features.resize(n_sub_features);
            std::sort(features.begin(), features.end());
        }

        const SplitChoice split = best_split(x, y, items, features, min_leaf);
        if (!split.found) return id;
        double parent_sse = 0.0;
        for (const std::size_t i : items) {
            const double d = y[i] - mean;
            parent_sse += d * d;
        }
        if (!(split.children_sse < parent_sse)) return id;

        std::vector<std::size_t> left_items, right_items;
        for (const std::size_t i : items) {
            (x(i, split.feature) < split.threshold ? left_items : right_items).push_back(i);
        }
        items.clear();
        items.shrink_to_fit();
        tree.nodes[id].feature = static_cast<int>(split.feature);
        tree.nodes[id].threshold = split.threshold;
        tree.nodes[id].left = grow(std::move(left_items), depth + 1);
        tree.nodes[id].right = grow(std::move(right_items), depth + 1);
        return id;
    }
};

inline Tree grow_tree(const Matrix& x, const std::vector<double>& y,
                      const std::vector<std::size_t>& items, std::size_t max_depth,
                      std::size_t min_leaf, Rng* rng, std::size_t n_sub_features) {
    TreeGrower grower{x, y, max_depth, min_leaf, rng, n_sub_features, {}, {}};
    grower.all_features.resize(x.cols);
    std::iota(grower.all_features.begin(), grower.all_features.end(), 0);
    grower.tree.nodes.reserve(64);
    grower.grow(items, 0);
    return std::move(grower.tree);
}

inline void fit_output_normalizer(BaselineModel& model, const std::vector<double>& train_pred) {
    model.has_output_normalizer = true;
    model.out_min = train_pred[0];
    model.out_max = train_pred[0];
    for (const double v : train_pred) {
        model.out_min = std::min(model.out_min, v);
        model.out_max = std::max(model.out_max, v);
    }
}

inline std::vector<int> validate_binary(const std::vector<int>& y, const char* op) {
    for (const int v : y) {
        if (v != 0 && v != 1) throw DataError(std::string(op) + ": labels must be 0 or 1");
    }
    return y;
}

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

} // namespace detail

inline double predict_raw(const BaselineModel& model, const double* x, std::size_t n_features) {
    switch (model.kind) {
        case ModelKind::linear: {
            double z = model.intercept;
            for (std::size_t j = 0; j < n_features; ++j) z += model.coefficients[j] * x[j];
            return z;
        }
        case ModelKind::logistic: {
            double z = model.intercept;
            for (std::size_t j = 0; j < n_features; ++j) {
                z += model.coefficients[j] * model.input_standardizer.transform_value(x[j], j);
            }
            return detail::sigmoid(z);
        }
        case ModelKind::tree:
            return detail::tree_predict(model.trees[0], x);
        case ModelKind::forest: {
            double sum = 0.0;
            for (const Tree& t : model.trees) sum += detail::tree_predict(t, x);
            return sum / static_cast<double>(model.trees.size());
        }
        case ModelKind::boost: {
            double f = model.boost_base;
            for (const Tree& t : model.trees) {
                f += model.shrinkage * detail::tree_predict(t, x);
            }
            return f;
        }
        case ModelKind::mlp: {
            Matrix row(1, n_features);
            for (std::size_t j = 0; j < n_features; ++j) row(0, j) = x[j];
            return forward(model.mlp, row)(0, 0);
        }
    }
    throw ConfigError("predict_raw: unknown model kind");
}

inline std::vector<double> predict_raw(const BaselineModel& model, const Matrix& x) {
    std::vector<double> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) out[i] = predict_raw(model, x.row(i), x.cols);
    return out;
}

/// Model scores in [0,1]: min-max over training predictions for unbounded
/// kinds (degenerate training range yields the constant 0.5), probabilities
/// passed through for logistic.
inline std::vector<double> predict(const BaselineModel& model, const Matrix& x) {
    std::vector<double> out = predict_raw(model, x);
    if (!model.has_output_normalizer) return out;
    if (model.out_max == model.out_min) {
        std::fill(out.begin(), out.end(), 0.5);
        return out;
    }
    const double inv = 1.0 / (model.out_max - model.out_min);
    for (double& v : out) v = std::clamp((v - model.out_min) * inv, 0.0, 1.0);
    return out;
}

/// Ordinary least squares on [x | 1] via normal equations with a 1e-8 ridge
/// jitter on the Gram diagonal.
inline BaselineModel fit_linear(const Matrix& x, const std::vector<int>& y) {
    detail::validate_binary(y, "fit_linear");
    if (x.rows != y.size()) throw ConfigError("fit_linear: row count mismatch");
    const std::size_t p = x.cols + 1;
    if (x.rows <= x.cols) throw ConfigError("fit_linear: need more rows than features");

    std::vector<double> gram(p * p, 0.0), rhs(p, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t a = 0; a < p; ++a) {
            const double va = a < x.cols ? x(i, a) : 1.0;
            rhs[a] += va * static_cast<double>(y[i]);
            for (std::size_t b = 0; b < p; ++b) {
                const double vb = b < x.cols ? x(i, b) : 1.0;
                gram[a * p + b] += va * vb;
            }
        }
    }
    for (std::size_t a = 0; a < p; ++a) gram[a * p + a] += 1e-8;

    // Gaussian elimination with partial pivoting
    for (std::size_t col = 0; col < p; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < p; ++r) {
            if (std::abs(gram[r * p + col]) > std::abs(gram[pivot * p + col])) pivot = r;
        }
        if (std::abs(gram[pivot * p + col]) < 1e-12) {
            throw NumericError("fit_linear: singular normal equations");
        }
        if (pivot != col) {
            for (std::size_t c = 0; c < p; ++c) std::swap(gram[col * p + c], gram[pivot * p + c]);
            std::swap(rhs[col], rhs[pivot]);
        }
        const double inv = 1.0 / gram[col * p + col];
        for (std::size_t r = col + 1; r < p; ++r) {
            const double factor = gram[r * p + col] * inv;
            if (factor == 0.0) continue;
            for (std::size_t c = col; c < p; ++c) gram[r * p + c] -= factor * gram[col * p + c];
            rhs[r] -= factor * rhs[col];
        }
    }
    std::vector<double> w(p);
    for (std::size_t r = p; r-- > 0;) {
        double v = rhs[r];
        for (std::size_t c = r + 1; c < p; ++c) v -= gram[r * p + c] * w[c];
        w[r] = v / gram[r * p + r];
    }

    BaselineModel model;
    model.kind = ModelKind::linear;
    model.coefficients.assign(w.begin(), w.end() - 1);
    model.intercept = w.back();
    detail::fit_output_normalizer(model, predict_raw(model, x));
    return model;
}

/// Maximum likelihood by full-batch gradient descent: 500 iterations at rate
/// 0.1 on standardized inputs.
inline BaselineModel fit_logistic(const Matrix& x, const std::vector<int>& y) {
    detail::validate_binary(y, "fit_logistic");
    if (x.rows != y.size() || x.rows == 0) throw ConfigError("fit_logistic: row count mismatch");

    BaselineModel model;
    model.kind = ModelKind::logistic;
    model.input_standardizer = fit_standardizer(x);
    model.coefficients.assign(x.cols, 0.0);
    model.intercept = 0.0;
    model.hyperparameters = "lr 0.1, 500 iterations";

    Matrix xs = detail::standardize_batch(model.input_standardizer, x);
    const double inv_n = 1.0 / static_cast<double>(x.rows);
    std::vector<double> grad(x.cols);
    for (std::size_t iter = 0; iter < 500; ++iter) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_b = 0.0;
        double nll = 0.0;
        for (std::size_t i = 0; i < xs.rows; ++i) {
            double z = model.intercept;
            for (std::size_t j = 0; j < xs.cols; ++j) z += model.coefficients[j] * xs(i, j);
            const double p = detail::sigmoid(z);
            const double r = p - static_cast<double>(y[i]);
            for (std::size_t j = 0; j < xs.cols; ++j) grad[j] += r * xs(i, j);
            grad_b += r;
            nll += z >= 0.0 ? (1.0 - static_cast<double>(y[i])) * z + std::log1p(std::exp(-z))
                            : -static_cast<double>(y[i]) * z + std::log1p(std::exp(z));
        }
        if (!std::isfinite(nll)) {
            throw NumericError("fit_logistic: non-finite loss at iteration " +
                               std::to_string(iter));
        }
        for (std::size_t j = 0; j < xs.cols; ++j) {
            model.coefficients[j] -= 0.1 * grad[j] * inv_n;
        }
        model.intercept -= 0.1 * grad_b * inv_n;
    }
    return model;
}

/// CART regression tree: greedy variance-minimizing splits, leaves predict
/// the mean target.
inline BaselineModel fit_tree(const Matrix& x, const std::vector<double>& y,
                              std::size_t max_depth, std::size_t min_leaf = 5) {
    if (x.rows != y.size()) throw ConfigError("fit_tree: row count mismatch");
    if (x.rows < 2 * min_leaf) throw ConfigError("fit_tree: need at least 2*min_leaf rows");
    std::vector<std::size_t> items(x.rows);
    std::iota(items.begin(), items.end(), 0);
    BaselineModel model;
    model.kind = ModelKind::tree;
    model.trees.push_back(detail::grow_tree(x, y, items, max_depth, min_leaf, nullptr, 0));
    model.hyperparameters =
        "depth " + std::to_string(max_depth) + ", min_leaf " + std::to_string(min_leaf);
    detail::fit_output_normalizer(model, predict_raw(model, x));
    return model;
}

struct ForestOptions {
    std::size_t min_leaf = 5;
    bool bootstrap = true;           // test hook
    bool subsample_features = true;  // test hook
};

/// Random forest: bootstrap resamples of size N, ceil(sqrt(p)) features per
/// split, per-tree seeds derived from the master seed, mean aggregation.
inline BaselineModel fit_forest(const Matrix& x, const std::vector<int>& y,
                                std::size_t n_trees, std::size_t max_depth,
                                std::uint64_t seed, const ForestOptions& opt = {}) {
    detail::validate_binary(y, "fit_forest");
    if (x.rows != y.size()) throw ConfigError("fit_forest: row count mismatch");
    if (x.rows < 2 * opt.min_leaf) throw ConfigError("fit_forest: need at least 2*min_leaf rows");
    if (n_trees < 1) throw ConfigError("fit_forest: need >= 1 tree");

    std::vector<double> targets(y.begin(), y.end());
    const std::size_t n_sub = opt.subsample_features
                                  ? static_cast<std::size_t>(
                                        std::ceil(std::sqrt(static_cast<double>(x.cols))))
                                  : x.cols;
    BaselineModel model;
    model.kind = ModelKind::forest;
    for (std::size_t t = 0; t < n_trees; ++t) {
        Rng rng(derive_seed(seed, t));
        std::vector<std::size_t> items(x.rows);
        if (opt.bootstrap) {
            for (std::size_t i = 0; i < x.rows; ++i) items[i] = rng.uniform_index(x.rows);
        } else {
            std::iota(items.begin(), items.end(), 0);
        }
        Rng* feature_rng = n_sub < x.cols ? &rng : nullptr;
        model.trees.push_back(
            detail::grow_tree(x, targets, items, max_depth, opt.min_leaf, feature_rng, n_sub));
    }
    model.hyperparameters =
        std::to_string(n_trees) + " trees, depth " + std::to_string(max_depth);
    detail::fit_output_normalizer(model, predict_raw(model, x));
    return model;
}

/// Least-squares gradient boosting: constant mean start, trees fitted to
/// residuals, shrinkage-scaled accumulation.
inline BaselineModel fit_boost(const Matrix& x, const std::vector<int>& y,
                               std::size_t n_trees, std::size_t max_depth,
                               double shrinkage = 0.1, std::size_t min_leaf = 5) {
    detail::validate_binary(y, "fit_boost");
    if (x.rows != y.size() || x.rows == 0) throw ConfigError("fit_boost: row count mismatch");
    if (x.rows < 2 * min_leaf) throw ConfigError("fit_boost: need at least 2*min_leaf rows");
    if (!(shrinkage > 0.0)) throw ConfigError("fit_boost: shrinkage must be > 0");

    BaselineModel model;
    model.kind = ModelKind::boost;
    model.shrinkage = shrinkage;
    double mean = 0.0;
    for (const int v : y) mean += static_cast<double>(v);
    mean /= static_cast<double>(y.size());
    model.boost_base = mean;

    std::vector<std::size_t> items(x.rows);
    std::iota(items.begin(), items.end(), 0);
    std::vector<double> f(x.rows, mean), residual(x.rows);
    for (std::size_t t = 0; t < n_trees; ++t) {
        for (std::size_t i = 0; i < x.rows; ++i) {
            residual[i] = static_cast<double>(y[i]) - f[i];
        }
        Tree tree = detail::grow_tree(x, residual, items, max_depth, min_leaf, nullptr, 0);
        for (std::size_t i = 0; i < x.rows; ++i) {
            f[i] += shrinkage * detail::tree_predict(tree, x.row(i));
        }
        model.trees.push_back(std::move(tree));
    }
    model.hyperparameters = std::to_string(n_trees) + " trees, depth " +
                            std::to_string(max_depth) + ", shrinkage " +
                            format_double(shrinkage);
    detail::fit_output_normalizer(model, predict_raw(model, x));
    return model;
}

struct BaselineHyperparameters {
    std::size_t n_trees = 0;
    std::size_t max_depth = 0;
    std::size_t hidden_width = 0;
    double shrinkage = 0.1;

    std::string describe(ModelKind kind) const {
        switch (kind) {
            case ModelKind::linear: return "none";
            case ModelKind::logistic: return "lr 0.1, 500 iterations";
            case ModelKind::tree: return "depth " + std::to_string(max_depth);
            case ModelKind::forest:
                return std::to_string(n_trees) + " trees, depth " + std::to_string(max_depth);
            case ModelKind::boost:
                return std::to_string(n_trees) + " trees, depth " +
                       std::to_string(max_depth) + ", shrinkage " + format_double(shrinkage);
            case ModelKind::mlp: return "hidden " + std::to_string(hidden_width);
        }
        throw ConfigError("unknown model kind");
    }
};

/// Documented default candidate grids per kind.
inline std::vector<BaselineHyperparameters> default_grid(ModelKind kind) {
    std::vector<BaselineHyperparameters> grid;
    switch (kind) {
        case ModelKind::linear:
        case ModelKind::logistic:
            grid.push_back({});
            break;
        case ModelKind::tree:
            for (const std::size_t d : {3, 5, 7}) grid.push_back({0, d, 0, 0.1});
            break;
        case ModelKind::forest:
            for (const std::size_t t : {10, 20}) {
                for (const std::size_t d : {3, 5}) grid.push_back({t, d, 0, 0.1});
            }
            break;
        case ModelKind::boost:
            for (const std::size_t t : {10, 15, 20}) {
                for (const std::size_t d : {3, 5}) grid.push_back({t, d, 0, 0.1});
            }
            break;
        case ModelKind::mlp:
            for (const std::size_t h : {5, 10, 100}) grid.push_back({0, 0, h, 0.1});
            break;
    }
    return grid;
}

inline BaselineModel fit_baseline(ModelKind kind, const Matrix& x, const std::vector<int>& y,
                                  const BaselineHyperparameters& hp, std::uint64_t seed) {
    switch (kind) {
        case ModelKind::linear: return fit_linear(x, y);
        case ModelKind::logistic: return fit_logistic(x, y);
        case ModelKind::tree: {
            std::vector<double> targets(y.begin(), y.end());
            BaselineModel m = fit_tree(x, targets, hp.max_depth);
            m.hyperparameters = hp.describe(kind);
            return m;
        }
        case ModelKind::forest: return fit_forest(x, y, hp.n_trees, hp.max_depth, seed);
        case ModelKind::boost:
            return fit_boost(x, y, hp.n_trees, hp.max_depth, hp.shrinkage);
        case ModelKind::mlp: {
            detail::validate_binary(y, "fit_baseline(mlp)");
            MlpSpec spec{{x.cols, hp.hidden_width, 1}};
            Mlp mlp = init_mlp(spec, derive_seed(seed, 1));
            mlp.input_standardizer = fit_standardizer(x);
            Matrix targets(y.size(), 1);
            for (std::size_t i = 0; i < y.size(); ++i) {
                targets(i, 0) = static_cast<double>(y[i]);
            }
            TrainConfig cfg;
            cfg.seed = seed;
            BaselineModel model;
            model.kind = ModelKind::mlp;
            model.mlp = train(std::move(mlp), x, targets, cfg).model;
            model.hyperparameters = hp.describe(kind);
            detail::fit_output_normalizer(model, predict_raw(model, x));
            return model;
        }
    }
    throw ConfigError("fit_baseline: unknown model kind");
}

struct GridSearchSpec {
    std::vector<BaselineHyperparameters> grid;
    double validation_fraction = 0.2;
    std::uint64_t seed = 0;

    void validate() const {
        if (grid.empty()) throw ConfigError("grid_search: empty grid");
        if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
            throw ConfigError("grid_search: validation_fraction must lie in (0,1)");
        }
    }
};

struct GridSearchResult {
    BaselineHyperparameters best;
    double best_auc = 0.0;
    std::vector<std::pair<BaselineHyperparameters, double>> table;
};

namespace detail {

inline Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), m.cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) out(i, j) = m(rows[i], j);
    }
    return out;
}

inline std::vector<int> take_rows(const std::vector<int>& v,
                                  const std::vector<std::size_t>& rows) {
    std::vector<int> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = v[rows[i]];
    return out;
}

} // namespace detail

/// Single-holdout model selection: train each grid point on the holdout
/// train part, pick the maximum validation AUC, first-listed point wins ties.
inline GridSearchResult grid_search(ModelKind kind, const Matrix& x,
                                    const std::vector<int>& y, const GridSearchSpec& spec) {
    spec.validate();
    if (x.rows != y.size()) throw ConfigError("grid_search: row count mismatch");
    const DataSplit holdout = split(x.rows, 1.0 - spec.validation_fraction, spec.seed);
    const Matrix x_fit = detail::take_rows(x, holdout.train_indices);
    const Matrix x_val = detail::take_rows(x, holdout.test_indices);
    const std::vector<int> y_fit = detail::take_rows(y, holdout.train_indices);
    const std::vector<int> y_val = detail::take_rows(y, holdout.test_indices);

    GridSearchResult result;
    bool have_best = false;
    for (const BaselineHyperparameters& hp : spec.grid) {
        const BaselineModel model =
            fit_baseline(kind, x_fit, y_fit, hp, derive_seed(spec.seed, 3));
        const double auc = roc_auc(predict(model, x_val), y_val);
        result.table.emplace_back(hp, auc);
        if (!have_best || auc > result.best_auc) {
            have_best = true;
            result.best = hp;
            result.best_auc = auc;
        }
    }
    return result;
}

struct SpaceComparisonRow {
    ModelKind kind = ModelKind::linear;
    std::string space; // "2d" or "14d"
    double auc = 0.0;
    std::string hyperparameters;
};

struct CompareOptions {
    std::vector<ModelKind> kinds = {ModelKind::linear, ModelKind::logistic, ModelKind::mlp,
                                    ModelKind::forest, ModelKind::boost};
    double validation_fraction = 0.2;
    std::uint64_t seed = 0;
};

/// Trains every kind in both spaces: grid search on the training rows, refit
/// with the selected hyperparameters, report test AUC. Rows are grouped by
/// space (all 2D rows first), kinds in the requested order.
inline std::vector<SpaceComparisonRow> compare_spaces(
    const Matrix& x2_train, const Matrix& x2_test, const Matrix& x14_train,
    const Matrix& x14_test, const std::vector<int>& y_train,
    const std::vector<int>& y_test, const CompareOptions& opt = {}) {
    if (x2_train.rows != y_train.size() || x14_train.rows != y_train.size() ||
        x2_test.rows != y_test.size() || x14_test.rows != y_test.size()) {
        throw ConfigError("compare_spaces: row count mismatch");
    }
    std::vector<SpaceComparisonRow> rows;
    const struct {
        const char* name;
        const Matrix& train;
        const Matrix& test;
    } spaces[] = {{"2d", x2_train, x2_test}, {"14d", x14_train, x14_test}};
    for (std::size_t s = 0; s < 2; ++s) {
        for (std::size_t k = 0; k < opt.kinds.size(); ++k) {
            const ModelKind kind = opt.kinds[k];
            GridSearchSpec spec;
            spec.grid = default_grid(kind);
            spec.validation_fraction = opt.validation_fraction;
            spec.seed = derive_seed(opt.seed, 101 + s * 32 + k);
            const GridSearchResult search =
                grid_search(kind, spaces[s].train, y_train, spec);
            const BaselineModel model = fit_baseline(kind, spaces[s].train, y_train,
                                                     search.best, derive_seed(spec.seed, 7));
            SpaceComparisonRow row;
            row.kind = kind;
            row.space = spaces[s].name;
            row.auc = roc_auc(predict(model, spaces[s].test), y_test);
            row.hyperparameters = search.best.describe(kind);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

} // namespace riskmap
