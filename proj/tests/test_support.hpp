#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "riskmap/dataset.hpp"
#include "riskmap/matrix.hpp"
#include "riskmap/pipeline.hpp"
#include "riskmap/rng.hpp"

namespace test_support {

struct PlantedClusters {
    riskmap::Matrix x;
    std::vector<int> labels;
};

/// Three well-separated Gaussian blobs in `dim` dimensions, centered on
/// scaled axis directions, unit spread per coordinate.
inline PlantedClusters make_planted_clusters(std::size_t per_cluster, std::size_t dim,
                                             double separation, std::uint64_t seed) {
    const std::size_t n = 3 * per_cluster;
    PlantedClusters out{riskmap::Matrix(n, dim), std::vector<int>(n)};
    riskmap::Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = i / per_cluster;
        out.labels[i] = static_cast<int>(k);
        for (std::size_t d = 0; d < dim; ++d) {
            const double center = (d == k) ? separation : 0.0;
            out.x(i, d) = rng.normal(center, 1.0);
        }
    }
    return out;
}

/// Mean fraction of each point's k nearest neighbours (self excluded)
/// sharing its label.
inline double knn_purity(const riskmap::Matrix& points, const std::vector<int>& labels,
                         std::size_t k) {
    const std::size_t n = points.rows;
    double purity_sum = 0.0;
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double d = 0.0;
            for (std::size_t c = 0; c < points.cols; ++c) {
                const double diff = points(i, c) - points(j, c);
                d += diff * diff;
            }
            dist[j] = {d, j};
        }
        dist[i].first = std::numeric_limits<double>::infinity();
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k),
                          dist.end());
        std::size_t same = 0;
        for (std::size_t m = 0; m < k; ++m) {
            same += static_cast<std::size_t>(labels[dist[m].second] == labels[i]);
        }
        purity_sum += static_cast<double>(same) / static_cast<double>(k);
    }
    return purity_sum / static_cast<double>(n);
}

/// Mean fraction of each query's k nearest base points sharing the
/// query's label.
inline double knn_purity_against(const riskmap::Matrix& queries,
                                 const std::vector<int>& query_labels,
                                 const riskmap::Matrix& base,
                                 const std::vector<int>& base_labels, std::size_t k) {
    double purity_sum = 0.0;
    std::vector<std::pair<double, std::size_t>> dist(base.rows);
    for (std::size_t i = 0; i < queries.rows; ++i) {
        for (std::size_t j = 0; j < base.rows; ++j) {
            double d = 0.0;
            for (std::size_t c = 0; c < queries.cols; ++c) {
                const double diff = queries(i, c) - base(j, c);
                d += diff * diff;
            }
            dist[j] = {d, j};
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k),
                          dist.end());
        std::size_t same = 0;
        for (std::size_t m = 0; m < k; ++m) {
            same += static_cast<std::size_t>(base_labels[dist[m].second] == query_labels[i]);
        }
        purity_sum += static_cast<double>(same) / static_cast<double>(k);
    }
    return purity_sum / static_cast<double>(queries.rows);
}

struct SmallFixture {
    std::vector<riskmap::ContractRecord> records;
    riskmap::PipelineConfig config;
    riskmap::TrainOutcome outcome;
};

/// One small trained pipeline shared across test files; built on first use.
inline const SmallFixture& small_fixture() {
    static const SmallFixture fixture = [] {
        riskmap::SyntheticConfig synth;
        synth.n_contracts = 240;
        synth.cluster_weights = {0.5, 0.25, 0.25};
        synth.seed = 17;
        const riskmap::SyntheticPortfolio portfolio = riskmap::generate_synthetic(synth);
        riskmap::PipelineConfig cfg;
        cfg.seed = 11;
        cfg.tsne.perplexity = 12.0;
        cfg.tsne.n_iterations = 160;
        cfg.nn_tsne_train.epochs = 60;
        cfg.nn_risk_train.epochs = 60;
        SmallFixture f{portfolio.records, cfg, riskmap::train_pipeline(portfolio.records, cfg)};
        return f;
    }();
    return fixture;
}

} // namespace test_support
