#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "riskmap/errors.hpp"
#include "riskmap/matrix.hpp"
#include "riskmap/rng.hpp"

namespace riskmap {

/// Optimizer settings for the exact embedding. Perplexity is the data-facing
/// knob; the remaining constants are standard defaults and rarely need
/// changing.
struct TsneConfig {
    double perplexity = 500.0;
    std::size_t n_iterations = 1000;
    double learning_rate = 200.0;
    double early_exaggeration_factor = 12.0;
    std::size_t exaggeration_iterations = 250;
    double momentum_initial = 0.5;
    double momentum_final = 0.8;
    std::size_t momentum_switch_iteration = 250;
    double init_scale = 1e-4;
    std::uint64_t seed = 0;
    double sigma_search_tolerance = 1e-5; // on log2-perplexity
    std::size_t sigma_search_max_iterations = 50;

    void validate(std::size_t n_points) const {
        if (!(perplexity > 0.0)) throw ConfigError("tsne: perplexity must be > 0");
        if (perplexity >= static_cast<double>(n_points) - 1.0) {
            throw ConfigError("tsne: perplexity must be < n_points - 1 (got " +
                              std::to_string(perplexity) + " for " +
                              std::to_string(n_points) + " points)");
        }
        if (n_iterations < 1 || exaggeration_iterations < 1 ||
            momentum_switch_iteration < 1 || sigma_search_max_iterations < 1) {
            throw ConfigError("tsne: iteration counts must be >= 1");
        }
        if (!(learning_rate > 0.0) || !(early_exaggeration_factor > 0.0) ||
            !(init_scale > 0.0) || !(sigma_search_tolerance > 0.0)) {
            throw ConfigError("tsne: rates, factors and tolerances must be > 0");
        }
        if (momentum_initial < 0.0 || momentum_initial >= 1.0 ||
            momentum_final < 0.0 || momentum_final >= 1.0) {
            throw ConfigError("tsne: momenta must lie in [0, 1)");
        }
    }
};

/// 2D coordinates plus the KL trace of the optimization that produced them.
struct Embedding {
    Matrix y;
    std::vector<double> kl_history;
};

namespace detail {

inline double sq_distance(const double* a, const double* b, std::size_t dim) {
    double s = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

constexpr double kSigmaMin = 1e-20;
constexpr double kSigmaMax = 1e20;
constexpr double kLog2E = 1.4426950408889634074; // 1/ln 2

struct RowCalibration {
    double sigma = 1.0;
    double achieved_log2_perplexity = 0.0;
    bool converged = false;
};

/// Evaluates the Gaussian row at bandwidth sigma. Distances are shifted by
/// the row minimum before exponentiation; the conditional distribution and
/// its entropy are invariant under the shift, and the largest term is
/// exactly 1, so the sum cannot underflow. Writes unnormalized weights into
/// scratch and returns {sum, entropy in bits}.
inline std::pair<double, double> eval_gaussian_row(const double* d_row, std::size_t n,
                                                   std::size_t self, double d_min,
                                                   double sigma, double* scratch) {
    const double beta = 1.0 / (2.0 * sigma * sigma);
    double sum = 0.0;
    double weighted_d = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (j == self) {
            scratch[j] = 0.0;
            continue;
        }
        const double shifted = d_row[j] - d_min;
        const double w = std::exp(-shifted * beta);
        scratch[j] = w;
        sum += w;
        weighted_d += shifted * w;
    }
    const double entropy_nats = std::log(sum) + beta * weighted_d / sum;
    return {sum, entropy_nats * kLog2E};
}

/// Bandwidth search for one row: geometric bracketing from sigma = 1, then
/// geometric bisection, stopping when the achieved log2-perplexity is within
/// tol of the target. Fills p_row with the normalized conditional
/// distribution at the best sigma visited.
inline RowCalibration calibrate_row(const double* d_row, std::size_t n, std::size_t self,
                                    double perplexity, double tol, std::size_t max_iter,
                                    double* p_row) {
    double d_min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
        if (j != self) d_min = std::min(d_min, d_row[j]);
    }
    const double target = std::log2(perplexity);

    RowCalibration result;
    double sigma = 1.0;
    double lo = 0.0, hi = 0.0; // 0 = side not bracketed yet
    double best_sigma = sigma;
    double best_err = std::numeric_limits<double>::infinity();
    double sum = 0.0;

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        const auto [s, h_bits] = eval_gaussian_row(d_row, n, self, d_min, sigma, p_row);
        sum = s;
        const double err = h_bits - target;
        if (std::abs(err) < best_err) {
            best_err = std::abs(err);
            best_sigma = sigma;
            result.achieved_log2_perplexity = h_bits;
        }
        if (std::abs(err) <= tol) {
            result.converged = true;
            break;
        }
        if (err > 0.0) { // entropy too high: shrink sigma
            hi = sigma;
            sigma = (lo > 0.0) ? std::sqrt(lo * hi) : sigma * 0.5;
        } else {
            lo = sigma;
            sigma = (hi > 0.0) ? std::sqrt(lo * hi) : sigma * 2.0;
        }
        sigma = std::min(std::max(sigma, kSigmaMin), kSigmaMax);
        if (sigma == lo || sigma == hi) break; // bracket exhausted
    }

    if (sigma != best_sigma) {
        const auto [s, h_bits] = eval_gaussian_row(d_row, n, self, d_min, best_sigma, p_row);
        sum = s;
        result.achieved_log2_perplexity = h_bits;
    }
    result.sigma = best_sigma;
    const double inv_sum = 1.0 / sum;
    for (std::size_t j = 0; j < n; ++j) p_row[j] *= inv_sum;
    p_row[self] = 0.0;
    return result;
}

/// Upper-triangular storage for a symmetric zero-diagonal N x N matrix.
struct PackedSymmetric {
    std::size_t n = 0;
    std::vector<double> values; // pair (i, j), i < j

    explicit PackedSymmetric(std::size_t n_points = 0)
        : n(n_points), values(n_points * (n_points - 1) / 2, 0.0) {}

    std::size_t index(std::size_t i, std::size_t j) const {
        // requires i < j
        return i * n - i * (i + 1) / 2 + (j - i - 1);
    }
    double at(std::size_t i, std::size_t j) const {
        if (i == j) return 0.0;
        return i < j ? values[index(i, j)] : values[index(j, i)];
    }
};

struct PackedAffinities {
    PackedSymmetric p;
    std::vector<double> sigmas;
    std::size_t warning_count = 0;
};

/// Joint input affinities in packed form, built one conditional row at a
/// time so the N x N conditional matrix is never materialized.
inline PackedAffinities build_input_affinities(const Matrix& x, const TsneConfig& cfg) {
    const std::size_t n = x.rows;
    PackedAffinities out;
    out.p = PackedSymmetric(n);
    out.sigmas.resize(n);
    std::vector<double> d_row(n), p_row(n);
    const double inv_2n = 1.0 / (2.0 * static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            d_row[j] = (j == i) ? 0.0 : sq_distance(x.row(i), x.row(j), x.cols);
            if (!std::isfinite(d_row[j])) {
                throw NumericError("tsne: non-finite distance between points " +
                                   std::to_string(i) + " and " + std::to_string(j));
            }
        }
        const RowCalibration cal =
            calibrate_row(d_row.data(), n, i, cfg.perplexity, cfg.sigma_search_tolerance,
                          cfg.sigma_search_max_iterations, p_row.data());
        out.sigmas[i] = cal.sigma;
        if (!cal.converged) ++out.warning_count;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const std::size_t k = i < j ? out.p.index(i, j) : out.p.index(j, i);
            out.p.values[k] += p_row[j] * inv_2n;
        }
    }
    return out;
}

struct StepEval {
    Matrix gradient; // N x 2
    double kl = 0.0;
};

/// One cost/gradient evaluation over all pairs. `sum_p_log_p` is the
/// constant entropy term of the input affinities; `exaggeration` scales P in
/// the gradient only, never in the reported KL. When `w_cache` is non-null
/// it must have pair capacity and is used to avoid recomputing the Student-t
/// weights in the second pass.
inline StepEval eval_kl_and_gradient(const PackedSymmetric& p, const Matrix& y,
                                     double exaggeration, double sum_p_log_p,
                                     std::vector<double>* w_cache) {
    const std::size_t n = p.n;
    StepEval out;
    out.gradient = Matrix(n, 2, 0.0);

    double half_sum_w = 0.0;
    if (w_cache) {
        std::size_t k = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double yi0 = y(i, 0), yi1 = y(i, 1);
            double row_sum = 0.0;
            for (std::size_t j = i + 1; j < n; ++j, ++k) {
                const double dx = yi0 - y(j, 0);
                const double dy = yi1 - y(j, 1);
                const double w = 1.0 / (1.0 + dx * dx + dy * dy);
                (*w_cache)[k] = w;
                row_sum += w;
            }
            half_sum_w += row_sum;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const double yi0 = y(i, 0), yi1 = y(i, 1);
            double row_sum = 0.0;
            for (std::size_t j = i + 1; j < n; ++j) {
                const double dx = yi0 - y(j, 0);
                const double dy = yi1 - y(j, 1);
                row_sum += 1.0 / (1.0 + dx * dx + dy * dy);
            }
            half_sum_w += row_sum;
        }
    }
    const double inv_total_w = 1.0 / (2.0 * half_sum_w);

    double p_log_q = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double yi0 = y(i, 0), yi1 = y(i, 1);
        double gx = 0.0, gy = 0.0;
        double row_p_log_q = 0.0;
        for (std::size_t j = i + 1; j < n; ++j, ++k) {
            const double dx = yi0 - y(j, 0);
            const double dy = yi1 - y(j, 1);
            const double w =
                w_cache ? (*w_cache)[k] : 1.0 / (1.0 + dx * dx + dy * dy);
            const double pv = p.values[k];
            const double q = w * inv_total_w;
            const double coef = 4.0 * (exaggeration * pv - q) * w;
            gx += coef * dx;
            gy += coef * dy;
            out.gradient(j, 0) -= coef * dx;
            out.gradient(j, 1) -= coef * dy;
            if (pv > 0.0) {
                row_p_log_q += 2.0 * pv * std::log(std::max(q, 1e-12));
            }
        }
        out.gradient(i, 0) += gx;
        out.gradient(i, 1) += gy;
        p_log_q += row_p_log_q;
    }
    out.kl = sum_p_log_p - p_log_q;
    return out;
}

// Above this size the per-iteration Student-t weights are recomputed instead
// of cached, keeping peak memory near the packed affinities alone.
constexpr std::size_t kWeightCacheMaxPoints = 12000;

} // namespace detail

/// d_ij = squared Euclidean distance between rows i and j.
inline Matrix pairwise_sq_distances(const Matrix& x) {
    if (x.rows < 2) throw ConfigError("pairwise_sq_distances: need at least 2 rows");
    Matrix d(x.rows, x.rows, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = i + 1; j < x.rows; ++j) {
            const double v = detail::sq_distance(x.row(i), x.row(j), x.cols);
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return d;
}

/// Row-stochastic Gaussian affinities with per-row bandwidths calibrated to
/// the target perplexity. Rows that cannot reach the tolerance within
/// max_iter are kept at their best bandwidth and counted in warning_count.
struct ConditionalAffinities {
    Matrix p;
    std::vector<double> sigmas;
    std::size_t warning_count = 0;
};

inline ConditionalAffinities conditional_affinities(const Matrix& d, double perplexity,
                                                    double tol = 1e-5,
                                                    std::size_t max_iter = 50) {
    const std::size_t n = d.rows;
    if (perplexity >= static_cast<double>(n) - 1.0) {
        throw ConfigError("conditional_affinities: perplexity must be < N - 1");
    }
    for (const double v : d.data) {
        if (!std::isfinite(v)) {
            throw NumericError("conditional_affinities: non-finite distance");
        }
    }
    ConditionalAffinities out;
    out.p = Matrix(n, n, 0.0);
    out.sigmas.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const detail::RowCalibration cal =
            detail::calibrate_row(d.row(i), n, i, perplexity, tol, max_iter, out.p.row(i));
        out.sigmas[i] = cal.sigma;
        if (!cal.converged) ++out.warning_count;
    }
    return out;
}

/// Joint affinities p_ij = (p_j|i + p_i|j) / 2N; symmetric with total mass 1.
inline Matrix symmetrize(const Matrix& p_cond) {
    const std::size_t n = p_cond.rows;
    Matrix p(n, n, 0.0);
    const double inv_2n = 1.0 / (2.0 * static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = (p_cond(i, j) + p_cond(j, i)) * inv_2n;
            p(i, j) = v;
            p(j, i) = v;
        }
    }
    return p;
}

/// Student-t kernel weights w_ij = (1 + |y_i - y_j|^2)^-1 and their
/// normalization q over all ordered pairs.
struct LowDimAffinities {
    Matrix q;
    Matrix w;
    double weight_sum = 0.0; // over ordered pairs
};

inline LowDimAffinities low_dim_affinities(const Matrix& y) {
    if (y.rows < 2) throw ConfigError("low_dim_affinities: need at least 2 rows");
    const std::size_t n = y.rows;
    LowDimAffinities out;
    out.q = Matrix(n, n, 0.0);
    out.w = Matrix(n, n, 0.0);
    double half_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double w = 1.0 / (1.0 + detail::sq_distance(y.row(i), y.row(j), y.cols));
            out.w(i, j) = w;
            out.w(j, i) = w;
            half_sum += w;
        }
    }
    out.weight_sum = 2.0 * half_sum;
    const double inv = 1.0 / out.weight_sum;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) out.q(i, j) = out.w(i, j) * inv;
        }
    }
    return out;
}

/// KL divergence sum_ij p log(p/q); p = 0 terms vanish, q floored at 1e-12.
inline double kl_divergence(const Matrix& p, const Matrix& q) {
    if (p.rows != q.rows || p.cols != q.cols) {
        throw ConfigError("kl_divergence: shape mismatch");
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < p.rows; ++i) {
        for (std::size_t j = 0; j < p.cols; ++j) {
            if (i == j) continue;
            const double pv = p(i, j);
            if (pv > 0.0) {
                kl += pv * std::log(pv / std::max(q(i, j), 1e-12));
            }
        }
    }
    return kl;
}

/// Gradient of kl_divergence(p, Q(y)) with respect to y:
/// dC/dy_i = 4 sum_j (p_ij - q_ij) w_ij (y_i - y_j). Weights enter unclamped.
inline Matrix kl_gradient(const Matrix& p, const Matrix& y) {
    if (p.rows != y.rows) throw ConfigError("kl_gradient: shape mismatch");
    const LowDimAffinities low = low_dim_affinities(y);
    const std::size_t n = y.rows;
    Matrix grad(n, y.cols, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double coef = 4.0 * (p(i, j) - low.q(i, j)) * low.w(i, j);
            for (std::size_t c = 0; c < y.cols; ++c) {
                grad(i, c) += coef * (y(i, c) - y(j, c));
            }
        }
    }
    return grad;
}

/// Exact embedding by momentum gradient descent on the KL divergence, with
/// early exaggeration. O(N^2) per iteration; affinities are held in packed
/// triangular form so N = 20000 at perplexity 500 stays within desk-scale
/// memory.
inline Embedding run_tsne(const Matrix& x, const TsneConfig& cfg) {
    cfg.validate(x.rows);
    const std::size_t n = x.rows;

    detail::PackedAffinities aff = detail::build_input_affinities(x, cfg);

    double sum_p_log_p = 0.0;
    for (const double pv : aff.p.values) {
        if (pv > 0.0) sum_p_log_p += 2.0 * pv * std::log(pv);
    }

    Rng rng(cfg.seed);
    Embedding emb;
    emb.y = Matrix(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < 2; ++c) emb.y(i, c) = rng.normal(0.0, cfg.init_scale);
    }
    emb.kl_history.reserve(cfg.n_iterations);

    std::vector<double> w_cache;
    std::vector<double>* cache_ptr = nullptr;
    if (n <= detail::kWeightCacheMaxPoints) {
        w_cache.resize(n * (n - 1) / 2);
        cache_ptr = &w_cache;
    }

    Matrix velocity(n, 2, 0.0);
    for (std::size_t iter = 0; iter < cfg.n_iterations; ++iter) {
        const double exag =
            iter < cfg.exaggeration_iterations ? cfg.early_exaggeration_factor : 1.0;
        detail::StepEval step =
            detail::eval_kl_and_gradient(aff.p, emb.y, exag, sum_p_log_p, cache_ptr);
        if (!std::isfinite(step.kl)) {
            throw NumericError("tsne: KL divergence became non-finite at iteration " +
                               std::to_string(iter));
        }
        emb.kl_history.push_back(step.kl);
        const double momentum = iter < cfg.momentum_switch_iteration ? cfg.momentum_initial
                                                                     : cfg.momentum_final;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < 2; ++c) {
                velocity(i, c) =
                    momentum * velocity(i, c) - cfg.learning_rate * step.gradient(i, c);
                emb.y(i, c) += velocity(i, c);
            }
        }
    }
    return emb;
}

} // namespace riskmap
