#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "riskmap/baselines.hpp"
#include "riskmap/errors.hpp"
#include "riskmap/format.hpp"
#include "riskmap/matrix.hpp"
#include "riskmap/metrics.hpp"
#include "riskmap/pipeline.hpp"
#include "riskmap/surface.hpp"

namespace riskmap {

using json = nlohmann::json;

namespace detail {

inline std::uint64_t fnv1a64(const void* bytes, std::size_t len, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

template <typename T>
std::uint64_t fnv1a64_pod(const T& v, std::uint64_t h) {
    return fnv1a64(&v, sizeof(T), h);
}

/// Consistency token over the training lineage: the embedding bytes, the
/// training claims, and the surface's raw range. Loading verifies it so
/// components from different runs cannot be mixed.
inline std::string lineage_hash(const PipelineArtifact& art) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    h = fnv1a64_pod(art.seed, h);
    h = fnv1a64_pod(art.embedding.y.rows, h);
    h = fnv1a64_pod(art.embedding.y.cols, h);
    if (!art.embedding.y.data.empty()) {
        h = fnv1a64(art.embedding.y.data.data(),
                    art.embedding.y.data.size() * sizeof(double), h);
    }
    if (!art.train_claims.empty()) {
        h = fnv1a64(art.train_claims.data(), art.train_claims.size() * sizeof(int), h);
    }
    h = fnv1a64_pod(art.surface.raw_min, h);
    h = fnv1a64_pod(art.surface.raw_max, h);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

inline json rle_encode(const std::vector<std::uint8_t>& mask) {
    json runs = json::array();
    std::size_t i = 0;
    std::uint8_t current = 0; // runs alternate starting from 0
    while (i < mask.size()) {
        std::size_t len = 0;
        while (i + len < mask.size() && mask[i + len] == current) ++len;
        runs.push_back(len);
        i += len;
        current = static_cast<std::uint8_t>(1 - current);
    }
    return runs;
}

inline std::vector<std::uint8_t> rle_decode(const json& runs, std::size_t expected) {
    std::vector<std::uint8_t> mask;
    mask.reserve(expected);
    std::uint8_t current = 0;
    for (const auto& r : runs) {
        const std::size_t len = r.get<std::size_t>();
        mask.insert(mask.end(), len, current);
        current = static_cast<std::uint8_t>(1 - current);
    }
    if (mask.size() != expected) {
        throw DataError("artifact: mask run-length data has wrong total size");
    }
    return mask;
}

inline json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

inline Matrix matrix_from_json(const json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    m.data = j.at("data").get<std::vector<double>>();
    if (m.data.size() != m.rows * m.cols) {
        throw DataError("artifact: matrix data size does not match its shape");
    }
    return m;
}

inline json standardizer_to_json(const Standardizer& s) {
    return json{{"means", s.means}, {"stds", s.stds}};
}

inline Standardizer standardizer_from_json(const json& j) {
    Standardizer s;
    s.means = j.at("means").get<std::vector<double>>();
    s.stds = j.at("stds").get<std::vector<double>>();
    if (s.means.size() != s.stds.size()) {
        throw DataError("artifact: standardizer mean/std lengths disagree");
    }
    return s;
}

inline json mlp_to_json(const Mlp& m) {
    json weights = json::array();
    for (const Matrix& w : m.weights) weights.push_back(matrix_to_json(w));
    return json{{"layer_sizes", m.spec.layer_sizes},
                {"weights", weights},
                {"biases", m.biases},
                {"input_standardizer", standardizer_to_json(m.input_standardizer)},
                {"target_standardizer", standardizer_to_json(m.target_standardizer)}};
}

inline Mlp mlp_from_json(const json& j) {
    Mlp m;
    m.spec.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    m.spec.validate();
    for (const auto& w : j.at("weights")) m.weights.push_back(matrix_from_json(w));
    m.biases = j.at("biases").get<std::vector<std::vector<double>>>();
    m.input_standardizer = standardizer_from_json(j.at("input_standardizer"));
    m.target_standardizer = standardizer_from_json(j.at("target_standardizer"));
    if (m.weights.size() != m.spec.n_weight_layers() ||
        m.biases.size() != m.spec.n_weight_layers()) {
        throw DataError("artifact: network layer count does not match its spec");
    }
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        if (m.weights[l].rows != m.spec.layer_sizes[l + 1] ||
            m.weights[l].cols != m.spec.layer_sizes[l] ||
            m.biases[l].size() != m.spec.layer_sizes[l + 1]) {
            throw DataError("artifact: network layer shapes do not match its spec");
        }
    }
    return m;
}

inline json tsne_config_to_json(const TsneConfig& c) {
    return json{{"perplexity", c.perplexity},
                {"n_iterations", c.n_iterations},
                {"learning_rate", c.learning_rate},
                {"early_exaggeration_factor", c.early_exaggeration_factor},
                {"exaggeration_iterations", c.exaggeration_iterations},
                {"momentum_initial", c.momentum_initial},
                {"momentum_final", c.momentum_final},
                {"momentum_switch_iteration", c.momentum_switch_iteration},
                {"init_scale", c.init_scale},
                {"seed", c.seed},
                {"sigma_search_tolerance", c.sigma_search_tolerance},
                {"sigma_search_max_iterations", c.sigma_search_max_iterations}};
}

inline TsneConfig tsne_config_from_json(const json& j) {
    TsneConfig c;
    c.perplexity = j.at("perplexity").get<double>();
    c.n_iterations = j.at("n_iterations").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.early_exaggeration_factor = j.at("early_exaggeration_factor").get<double>();
    c.exaggeration_iterations = j.at("exaggeration_iterations").get<std::size_t>();
    c.momentum_initial = j.at("momentum_initial").get<double>();
    c.momentum_final = j.at("momentum_final").get<double>();
    c.momentum_switch_iteration = j.at("momentum_switch_iteration").get<std::size_t>();
    c.init_scale = j.at("init_scale").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.sigma_search_tolerance = j.at("sigma_search_tolerance").get<double>();
    c.sigma_search_max_iterations = j.at("sigma_search_max_iterations").get<std::size_t>();
    return c;
}

inline json train_config_to_json(const TrainConfig& c) {
    return json{{"epochs", c.epochs},
                {"batch_size", c.batch_size},
                {"learning_rate", c.learning_rate},
                {"momentum", c.momentum},
                {"seed", c.seed},
                {"shuffle_each_epoch", c.shuffle_each_epoch}};
}

inline TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    c.epochs = j.at("epochs").get<std::size_t>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.momentum = j.at("momentum").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.shuffle_each_epoch = j.at("shuffle_each_epoch").get<bool>();
    return c;
}

inline json surface_to_json(const RiskSurface& s) {
    return json{{"geometry",
                 json{{"cells", s.geometry.cells},
                      {"x_min", s.geometry.x_min},
                      {"x_max", s.geometry.x_max},
                      {"y_min", s.geometry.y_min},
                      {"y_max", s.geometry.y_max}}},
                {"grid", s.grid},
                {"occupancy_rle", rle_encode(s.occupancy)},
                {"valid_rle", rle_encode(s.valid)},
                {"raw_min", s.raw_min},
                {"raw_max", s.raw_max}};
}

inline RiskSurface surface_from_json(const json& j) {
    RiskSurface s;
    const json& g = j.at("geometry");
    s.geometry.cells = g.at("cells").get<std::size_t>();
    s.geometry.x_min = g.at("x_min").get<double>();
    s.geometry.x_max = g.at("x_max").get<double>();
    s.geometry.y_min = g.at("y_min").get<double>();
    s.geometry.y_max = g.at("y_max").get<double>();
    s.grid = j.at("grid").get<std::vector<double>>();
    const std::size_t expected = s.geometry.cells * s.geometry.cells;
    if (s.grid.size() != expected) {
        throw DataError("artifact: surface grid size does not match its geometry");
    }
    s.occupancy = rle_decode(j.at("occupancy_rle"), expected);
    s.valid = rle_decode(j.at("valid_rle"), expected);
    s.raw_min = j.at("raw_min").get<double>();
    s.raw_max = j.at("raw_max").get<double>();
    return s;
}

} // namespace detail

inline std::string save_artifact(const PipelineArtifact& art) {
    json j{{"format_version", art.format_version},
           {"lineage", detail::lineage_hash(art)},
           {"seed", art.seed},
           {"train_fraction", art.train_fraction},
           {"normalizer",
            json{{"means", art.normalizer.means},
                 {"stds", art.normalizer.stds},
                 {"zero_variance", art.normalizer.zero_variance}}},
           {"tsne_config", detail::tsne_config_to_json(art.tsne_config)},
           {"embedding",
            json{{"y", detail::matrix_to_json(art.embedding.y)},
                 {"kl_history", art.embedding.kl_history}}},
           {"train_claims", art.train_claims},
           {"nn_tsne", detail::mlp_to_json(art.nn_tsne)},
           {"nn_risk", detail::mlp_to_json(art.nn_risk)},
           {"nn_tsne_train", detail::train_config_to_json(art.nn_tsne_train)},
           {"nn_risk_train", detail::train_config_to_json(art.nn_risk_train)},
           {"risk_hidden_width", art.risk_hidden_width},
           {"margin_fraction", art.margin_fraction},
           {"surface", detail::surface_to_json(art.surface)}};
    if (art.insurer_surface) {
        j["insurer_surface"] = detail::surface_to_json(*art.insurer_surface);
    }
    return j.dump();
}

inline PipelineArtifact load_artifact(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("artifact: JSON parse failure: ") + e.what());
    }
    try {
        const int version = j.at("format_version").get<int>();
        if (version != kArtifactFormatVersion) {
            throw DataError("artifact: unsupported format_version " +
                            std::to_string(version) + " (expected " +
                            std::to_string(kArtifactFormatVersion) + ")");
        }
        PipelineArtifact art;
        art.format_version = version;
        art.seed = j.at("seed").get<std::uint64_t>();
        art.train_fraction = j.at("train_fraction").get<double>();
        art.normalizer.means = j.at("normalizer").at("means").get<std::vector<double>>();
        art.normalizer.stds = j.at("normalizer").at("stds").get<std::vector<double>>();
        art.normalizer.zero_variance =
            j.at("normalizer").at("zero_variance").get<std::vector<std::uint8_t>>();
        art.tsne_config = detail::tsne_config_from_json(j.at("tsne_config"));
        art.embedding.y = detail::matrix_from_json(j.at("embedding").at("y"));
        art.embedding.kl_history =
            j.at("embedding").at("kl_history").get<std::vector<double>>();
        art.train_claims = j.at("train_claims").get<std::vector<int>>();
        art.nn_tsne = detail::mlp_from_json(j.at("nn_tsne"));
        art.nn_risk = detail::mlp_from_json(j.at("nn_risk"));
        art.nn_tsne_train = detail::train_config_from_json(j.at("nn_tsne_train"));
        art.nn_risk_train = detail::train_config_from_json(j.at("nn_risk_train"));
        art.risk_hidden_width = j.at("risk_hidden_width").get<std::size_t>();
        art.margin_fraction = j.at("margin_fraction").get<double>();
        art.surface = detail::surface_from_json(j.at("surface"));
        if (j.contains("insurer_surface")) {
            art.insurer_surface = detail::surface_from_json(j.at("insurer_surface"));
        }
        if (art.embedding.y.cols != 2) {
            throw DataError("artifact: embedding must be 2D");
        }
        if (art.train_claims.size() != art.embedding.y.rows) {
            throw DataError("artifact: train_claims length does not match the embedding");
        }
        if (art.nn_tsne.spec.layer_sizes.front() != art.normalizer.means.size()) {
            throw DataError("artifact: nn_tsne input width does not match the normalizer");
        }
        if (j.at("lineage").get<std::string>() != detail::lineage_hash(art)) {
            throw DataError("artifact: lineage hash mismatch (components from different runs)");
        }
        return art;
    } catch (const json::exception& e) {
        throw DataError(std::string("artifact: malformed content: ") + e.what());
    }
}

// ----- report / table emission -----

inline json report_to_json(const EvalReport& r) {
    auto nan_to_null = [](const std::vector<double>& v) {
        json arr = json::array();
        for (const double x : v) {
            if (std::isnan(x)) {
                arr.push_back(nullptr);
            } else {
                arr.push_back(x);
            }
        }
        return arr;
    };
    auto top_rows = [](const std::vector<TopFractionRow>& rows) {
        json arr = json::array();
        for (const TopFractionRow& row : rows) {
            arr.push_back(json{{"fraction", row.fraction},
                               {"contracts", row.contracts},
                               {"claims", row.claims},
                               {"claim_ratio", row.claim_ratio}});
        }
        return arr;
    };
    json j{{"n_retained", r.n_retained},
           {"n_out_of_surface", r.n_out_of_surface},
           {"claim_ratio", r.claim_ratio},
           {"pearson", r.pearson},
           {"auc", r.auc},
           {"groups",
            json{{"boundaries", r.groups.boundaries},
                 {"contracts", r.groups.contracts},
                 {"claims", r.groups.claims},
                 {"claim_ratio", nan_to_null(r.groups.claim_ratio)}}},
           {"threshold_curve",
            json{{"thresholds", r.curve.thresholds},
                 {"contract_fraction", r.curve.contract_fraction},
                 {"claim_ratio", nan_to_null(r.curve.claim_ratio)}}},
           {"top_fractions", top_rows(r.top_fractions)}};
    if (r.insurer) {
        j["insurer"] = json{{"pearson", r.insurer->pearson},
                            {"auc", r.insurer->auc},
                            {"top_fractions", top_rows(r.insurer->top_fractions)}};
    }
    return j;
}

inline std::string group_label(const std::vector<double>& boundaries, std::size_t k) {
    const double lo = k == 0 ? 0.0 : boundaries[k - 1];
    const bool last = k == boundaries.size();
    const double hi = last ? 1.0 : boundaries[k];
    return "[" + format_fixed(lo, 2) + "," + format_fixed(hi, 2) + (last ? "]" : ")");
}

inline std::string report_to_text(const EvalReport& r) {
    std::string out;
    out += "Evaluation report\n";
    out += "  contracts retained:   " + std::to_string(r.n_retained) + "\n";
    out += "  out of surface:       " + std::to_string(r.n_out_of_surface) + "\n";
    out += "  claim ratio:          " + format_fixed(100.0 * r.claim_ratio, 2) + "%\n";
    out += "  pearson(risk,claim):  " + format_fixed(r.pearson, 4) + "\n";
    out += "  auc:                  " + format_fixed(r.auc, 4) + "\n";
    out += "\nRisk groups\n";
    out += "  group        contracts  claims  claim_ratio\n";
    for (std::size_t k = 0; k < r.groups.contracts.size(); ++k) {
        const std::string ratio = r.groups.contracts[k] == 0
                                      ? "n/a"
                                      : format_fixed(100.0 * r.groups.claim_ratio[k], 2) + "%";
        out += "  " + group_label(r.groups.boundaries, k) + "  " +
               std::to_string(r.groups.contracts[k]) + "  " +
               std::to_string(r.groups.claims[k]) + "  " + ratio + "\n";
    }
    out += "\nTop fractions\n";
    out += "  fraction  contracts  claims  claim_ratio\n";
    for (const TopFractionRow& row : r.top_fractions) {
        out += "  " + format_fixed(100.0 * row.fraction, 0) + "%  " +
               std::to_string(row.contracts) + "  " + std::to_string(row.claims) + "  " +
               format_fixed(100.0 * row.claim_ratio, 2) + "%\n";
    }
    if (r.insurer) {
        out += "\nInsurer comparison\n";
        out += "  pearson: ours " + format_fixed(r.pearson, 4) + " vs insurer " +
               format_fixed(r.insurer->pearson, 4) + "\n";
        out += "  auc:     ours " + format_fixed(r.auc, 4) + " vs insurer " +
               format_fixed(r.insurer->auc, 4) + "\n";
        out += "  insurer top fractions\n";
        for (const TopFractionRow& row : r.insurer->top_fractions) {
            out += "    " + format_fixed(100.0 * row.fraction, 0) + "%  " +
                   std::to_string(row.contracts) + "  " + std::to_string(row.claims) +
                   "  " + format_fixed(100.0 * row.claim_ratio, 2) + "%\n";
        }
    }
    return out;
}

inline std::string threshold_curve_csv(const ThresholdCurve& c) {
    std::string out = "threshold,contract_fraction,claim_ratio\n";
    for (std::size_t i = 0; i < c.thresholds.size(); ++i) {
        out += format_fixed(c.thresholds[i], 2) + "," + format_double(c.contract_fraction[i]) +
               "," + format_double(c.claim_ratio[i]) + "\n";
    }
    return out;
}

inline std::string scores_csv(const BatchScores& scores) {
    std::string out = "row,y1,y2,risk,status\n";
    for (std::size_t i = 0; i < scores.scores.size(); ++i) {
        const RiskScore& s = scores.scores[i];
        out += std::to_string(i) + "," + format_double(scores.coords(i, 0)) + "," +
               format_double(scores.coords(i, 1)) + ",";
        out += s.out_of_surface ? "nan,out_of_surface" : format_double(s.value) + ",ok";
        out += "\n";
    }
    return out;
}

inline std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string quoted = "\"";
    for (const char c : field) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

inline std::string comparison_csv(const std::vector<SpaceComparisonRow>& rows) {
    std::string out = "model,space,auc,hyperparameters\n";
    for (const SpaceComparisonRow& row : rows) {
        out += csv_quote(to_string(row.kind)) + "," + row.space + "," +
               format_double(row.auc) + "," + csv_quote(row.hyperparameters) + "\n";
    }
    return out;
}

inline std::string comparison_text(const std::vector<SpaceComparisonRow>& rows) {
    std::string out;
    for (const char* space : {"2d", "14d"}) {
        out += std::string("Risk estimation, ") + space + " space\n";
        out += "  model                auc     hyperparameters\n";
        for (const SpaceComparisonRow& row : rows) {
            if (row.space != space) continue;
            std::string name = to_string(row.kind);
            name.resize(20, ' ');
            out += "  " + name + " " + format_fixed(row.auc, 4) + "  " +
                   row.hyperparameters + "\n";
        }
        out += "\n";
    }
    return out;
}

// ----- config ingestion -----

inline SyntheticConfig synthetic_config_from_json(const json& j) {
    SyntheticConfig cfg;
    try {
        if (j.contains("n_contracts")) cfg.n_contracts = j.at("n_contracts").get<std::size_t>();
        if (j.contains("cluster_weights")) {
            cfg.cluster_weights = j.at("cluster_weights").get<std::vector<double>>();
        }
        if (j.contains("cluster_claim_probs")) {
            cfg.cluster_claim_probs = j.at("cluster_claim_probs").get<std::vector<double>>();
        }
        if (j.contains("cluster_centers")) {
            cfg.cluster_centers =
                j.at("cluster_centers")
                    .get<std::vector<std::array<double, kContinuousFeatures>>>();
        }
        if (j.contains("cluster_spreads")) {
            cfg.cluster_spreads =
                j.at("cluster_spreads")
                    .get<std::vector<std::array<double, kContinuousFeatures>>>();
        }
        if (j.contains("vehicle_type_probs")) {
            cfg.vehicle_type_probs =
                j.at("vehicle_type_probs")
                    .get<std::vector<std::array<double, kVehicleTypes>>>();
        }
        if (j.contains("base_rates")) {
            cfg.base_rates = j.at("base_rates").get<std::vector<double>>();
        }
        if (j.contains("premium_loading_noise")) {
            cfg.premium_loading_noise = j.at("premium_loading_noise").get<double>();
        }
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("synthetic config: ") + e.what());
    }
    return cfg;
}

/// Applies the keys present in `j` on top of `base`. Nested stage configs
/// accept partial objects.
inline PipelineConfig pipeline_config_from_json(const json& j, PipelineConfig base) {
    auto merge_train = [](const json& tj, TrainConfig& c) {
        if (tj.contains("epochs")) c.epochs = tj.at("epochs").get<std::size_t>();
        if (tj.contains("batch_size")) c.batch_size = tj.at("batch_size").get<std::size_t>();
        if (tj.contains("learning_rate")) c.learning_rate = tj.at("learning_rate").get<double>();
        if (tj.contains("momentum")) c.momentum = tj.at("momentum").get<double>();
        if (tj.contains("shuffle_each_epoch")) {
            c.shuffle_each_epoch = tj.at("shuffle_each_epoch").get<bool>();
        }
    };
    try {
        if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("train_fraction")) {
            base.train_fraction = j.at("train_fraction").get<double>();
        }
        if (j.contains("risk_hidden_width")) {
            base.risk_hidden_width = j.at("risk_hidden_width").get<std::size_t>();
        }
        if (j.contains("margin_fraction")) {
            base.margin_fraction = j.at("margin_fraction").get<double>();
        }
        if (j.contains("insurer_surface_when_available")) {
            base.insurer_surface_when_available =
                j.at("insurer_surface_when_available").get<bool>();
        }
        if (j.contains("tsne")) {
            const json& tj = j.at("tsne");
            TsneConfig& c = base.tsne;
            if (tj.contains("perplexity")) c.perplexity = tj.at("perplexity").get<double>();
            if (tj.contains("n_iterations")) {
                c.n_iterations = tj.at("n_iterations").get<std::size_t>();
            }
            if (tj.contains("learning_rate")) {
                c.learning_rate = tj.at("learning_rate").get<double>();
            }
            if (tj.contains("early_exaggeration_factor")) {
                c.early_exaggeration_factor = tj.at("early_exaggeration_factor").get<double>();
            }
            if (tj.contains("exaggeration_iterations")) {
                c.exaggeration_iterations = tj.at("exaggeration_iterations").get<std::size_t>();
            }
            if (tj.contains("momentum_initial")) {
                c.momentum_initial = tj.at("momentum_initial").get<double>();
            }
            if (tj.contains("momentum_final")) {
                c.momentum_final = tj.at("momentum_final").get<double>();
            }
            if (tj.contains("momentum_switch_iteration")) {
                c.momentum_switch_iteration =
                    tj.at("momentum_switch_iteration").get<std::size_t>();
            }
            if (tj.contains("init_scale")) c.init_scale = tj.at("init_scale").get<double>();
            if (tj.contains("sigma_search_tolerance")) {
                c.sigma_search_tolerance = tj.at("sigma_search_tolerance").get<double>();
            }
            if (tj.contains("sigma_search_max_iterations")) {
                c.sigma_search_max_iterations =
                    tj.at("sigma_search_max_iterations").get<std::size_t>();
            }
        }
        if (j.contains("nn_tsne_train")) merge_train(j.at("nn_tsne_train"), base.nn_tsne_train);
        if (j.contains("nn_risk_train")) merge_train(j.at("nn_risk_train"), base.nn_risk_train);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("pipeline config: ") + e.what());
    }
    return base;
}

} // namespace riskmap
