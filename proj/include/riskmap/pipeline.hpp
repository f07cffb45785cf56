#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "riskmap/baselines.hpp"
#include "riskmap/dataset.hpp"
#include "riskmap/errors.hpp"
#include "riskmap/matrix.hpp"
#include "riskmap/metrics.hpp"
#include "riskmap/neuralnet.hpp"
#include "riskmap/surface.hpp"
#include "riskmap/tsne.hpp"

namespace riskmap {

constexpr int kArtifactFormatVersion = 1;

/// Master settings for one training run. Per-stage seeds are derived from
/// the master seed; seed fields inside the nested stage configs are ignored.
struct PipelineConfig {
    std::uint64_t seed = 0;
    double train_fraction = 2.0 / 3.0;
    TsneConfig tsne;
    TrainConfig nn_tsne_train;
    TrainConfig nn_risk_train;
    std::size_t risk_hidden_width = 5;
    double margin_fraction = 0.02;
    // Build the insurer surface when premium/vehicle_value are present.
    bool insurer_surface_when_available = true;
};

/// Everything a trained run persists. The embedding, claims and split
/// parameters of the training rows are retained so scoring, comparison and
/// rendering can reproduce the training lineage exactly.
struct PipelineArtifact {
    int format_version = kArtifactFormatVersion;
    std::uint64_t seed = 0;
    double train_fraction = 2.0 / 3.0;
    Normalizer normalizer;
    TsneConfig tsne_config;
    Embedding embedding;
    std::vector<int> train_claims;
    Mlp nn_tsne;
    Mlp nn_risk;
    TrainConfig nn_tsne_train;
    TrainConfig nn_risk_train;
    std::size_t risk_hidden_width = 5;
    double margin_fraction = 0.02;
    RiskSurface surface;
    std::optional<RiskSurface> insurer_surface;
};

struct TrainOutcome {
    PipelineArtifact artifact;
    std::vector<std::pair<std::string, double>> stage_seconds;
};

namespace detail {

// Stream ids for deriving per-stage seeds from the pipeline master seed.
constexpr std::uint64_t kSeedSplit = 10;
constexpr std::uint64_t kSeedTsne = 11;
constexpr std::uint64_t kSeedNnTsne = 12;
constexpr std::uint64_t kSeedNnRisk = 13;
constexpr std::uint64_t kSeedInsurerNet = 14;

inline std::vector<ContractRecord> take_records(const std::vector<ContractRecord>& records,
                                                const std::vector<std::size_t>& rows) {
    std::vector<ContractRecord> out;
    out.reserve(rows.size());
    for (const std::size_t i : rows) out.push_back(records[i]);
    return out;
}

class StageClock {
  public:
    explicit StageClock(std::vector<std::pair<std::string, double>>& sink) : sink_(sink) {}
    template <typename F>
    auto run(const std::string& name, F&& f) {
        const auto start = std::chrono::steady_clock::now();
        try {
            if constexpr (std::is_void_v<decltype(f())>) {
                f();
                record(name, start);
            } else {
                auto result = f();
                record(name, start);
                return result;
            }
        } catch (const ConfigError& e) {
            throw ConfigError("stage " + name + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError("stage " + name + ": " + e.what());
        } catch (const NumericError& e) {
            throw NumericError("stage " + name + ": " + e.what());
        }
    }

  private:
    void record(const std::string& name,
                std::chrono::steady_clock::time_point start) {
        const std::chrono::duration<double> elapsed =
            std::chrono::steady_clock::now() - start;
        sink_.emplace_back(name, elapsed.count());
    }
    std::vector<std::pair<std::string, double>>& sink_;
};

} // namespace detail

inline bool has_insurer_columns(const std::vector<ContractRecord>& records) {
    if (records.empty()) return false;
    for (const ContractRecord& r : records) {
        if (!r.premium || !r.vehicle_value) return false;
    }
    return true;
}

/// Full training run: split, normalize, embed, fit both nets, build the
/// surface(s). Stage timings are returned for logging and never persisted.
inline TrainOutcome train_pipeline(const std::vector<ContractRecord>& records,
                                   const PipelineConfig& cfg) {
    TrainOutcome outcome;
    detail::StageClock clock(outcome.stage_seconds);
    PipelineArtifact& art = outcome.artifact;
    art.seed = cfg.seed;
    art.train_fraction = cfg.train_fraction;
    art.tsne_config = cfg.tsne;
    art.tsne_config.seed = derive_seed(cfg.seed, detail::kSeedTsne);
    art.nn_tsne_train = cfg.nn_tsne_train;
    art.nn_tsne_train.seed = derive_seed(cfg.seed, detail::kSeedNnTsne);
    art.nn_risk_train = cfg.nn_risk_train;
    art.nn_risk_train.seed = derive_seed(cfg.seed, detail::kSeedNnRisk);
    art.risk_hidden_width = cfg.risk_hidden_width;
    art.margin_fraction = cfg.margin_fraction;

    const DataSplit parts =
        split(records.size(), cfg.train_fraction, derive_seed(cfg.seed, detail::kSeedSplit));

    const Matrix x_train = clock.run("normalize", [&] {
        const Matrix features = encode_features(records);
        art.normalizer = fit_normalizer(features, parts.train_indices);
        const Matrix train_features = detail::take_rows(features, parts.train_indices);
        return apply_normalizer(art.normalizer, train_features);
    });

    art.train_claims.reserve(parts.train_indices.size());
    for (const std::size_t i : parts.train_indices) {
        art.train_claims.push_back(records[i].claim);
    }

    art.embedding = clock.run("tsne", [&] { return run_tsne(x_train, art.tsne_config); });
    art.nn_tsne = clock.run("nn_tsne",
                            [&] { return fit_nn_tsne(x_train, art.embedding, art.nn_tsne_train); });
    art.nn_risk = clock.run("nn_risk", [&] {
        return fit_nn_risk(art.embedding, art.train_claims, art.nn_risk_train,
                           cfg.risk_hidden_width);
    });
    clock.run("surface", [&] {
        const GridGeometry geometry = grid_geometry(art.embedding, cfg.margin_fraction);
        art.surface = build_surface(art.nn_risk, art.embedding, geometry);
    });

    if (cfg.insurer_surface_when_available && has_insurer_columns(records)) {
        clock.run("insurer_surface", [&] {
            const std::vector<ContractRecord> train_records =
                detail::take_records(records, parts.train_indices);
            TrainConfig insurer_cfg = cfg.nn_risk_train;
            insurer_cfg.seed = derive_seed(cfg.seed, detail::kSeedInsurerNet);
            art.insurer_surface =
                build_value_surface(insurer_risk(train_records), art.embedding,
                                    art.surface.geometry, insurer_cfg, cfg.risk_hidden_width);
        });
    }
    return outcome;
}

struct EvaluateOptions {
    bool insurer = false;
    std::vector<double> group_boundaries = {0.3, 0.5};
    std::vector<double> top_fractions = {1.0, 0.5, 0.2, 0.1};
};

struct EvaluateOutcome {
    EvalReport report;
    BatchScores scores;
    std::vector<double> retained_risk;
    std::vector<int> retained_labels;
};

/// Scores the given records through the trained chain and assembles the
/// report over retained (in-surface) contracts.
inline EvaluateOutcome evaluate_pipeline(const PipelineArtifact& artifact,
                                         const std::vector<ContractRecord>& records,
                                         const EvaluateOptions& opt = {}) {
    EvaluateOutcome out;
    out.scores = score_batch(artifact.surface, artifact.nn_tsne, artifact.normalizer, records);
    out.retained_risk.reserve(out.scores.retained.size());
    out.retained_labels.reserve(out.scores.retained.size());
    for (const std::size_t i : out.scores.retained) {
        out.retained_risk.push_back(out.scores.scores[i].value);
        out.retained_labels.push_back(records[i].claim);
    }
    std::optional<std::vector<double>> insurer_scores;
    if (opt.insurer) {
        const std::vector<ContractRecord> retained_records =
            detail::take_records(records, out.scores.retained);
        insurer_scores = insurer_risk(retained_records);
    }
    out.report = build_report(out.retained_risk, out.retained_labels,
                              out.scores.out_of_surface_count, insurer_scores,
                              opt.group_boundaries, opt.top_fractions);
    return out;
}

/// Space-comparison entry point over raw records: reconstructs the training
/// split from the artifact's seed, embeds everything through NN_tsne, and
/// runs the baseline comparison in both spaces.
inline std::vector<SpaceComparisonRow> compare_pipeline(
    const PipelineArtifact& artifact, const std::vector<ContractRecord>& records,
    const CompareOptions& opt_in = {}) {
    const DataSplit parts = split(records.size(), artifact.train_fraction,
                                  derive_seed(artifact.seed, detail::kSeedSplit));
    const Matrix features = apply_normalizer(artifact.normalizer, encode_features(records));
    const Matrix coords = forward(artifact.nn_tsne, features);

    const Matrix x14_train = detail::take_rows(features, parts.train_indices);
    const Matrix x14_test = detail::take_rows(features, parts.test_indices);
    const Matrix x2_train = detail::take_rows(coords, parts.train_indices);
    const Matrix x2_test = detail::take_rows(coords, parts.test_indices);
    std::vector<int> y_train, y_test;
    for (const std::size_t i : parts.train_indices) y_train.push_back(records[i].claim);
    for (const std::size_t i : parts.test_indices) y_test.push_back(records[i].claim);

    CompareOptions opt = opt_in;
    if (opt.seed == 0) opt.seed = derive_seed(artifact.seed, 20);
    return compare_spaces(x2_train, x2_test, x14_train, x14_test, y_train, y_test, opt);
}

} // namespace riskmap
