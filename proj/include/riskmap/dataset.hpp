#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "riskmap/errors.hpp"
#include "riskmap/format.hpp"
#include "riskmap/matrix.hpp"
#include "riskmap/rng.hpp"

namespace riskmap {

inline constexpr std::size_t kContinuousFeatures = 7;
inline constexpr std::size_t kVehicleTypes = 7;
inline constexpr std::size_t kFeatureCount = kContinuousFeatures + kVehicleTypes;

/// Vehicle categories are opaque labels T1..T7; index = ordinal - 1.
enum class VehicleType : int { T1 = 0, T2, T3, T4, T5, T6, T7 };

inline std::string to_string(VehicleType t) {
    return "T" + std::to_string(static_cast<int>(t) + 1);
}

inline std::optional<VehicleType> parse_vehicle_type(std::string_view s) {
    if (s.size() == 2 && s[0] == 'T' && s[1] >= '1' && s[1] <= '7') {
        return static_cast<VehicleType>(s[1] - '1');
    }
    return std::nullopt;
}

/// One insurance policy.
struct ContractRecord {
    double home_lat = 0.0;
    double home_lon = 0.0;
    double car_price = 0.0;
    double engine_power = 0.0;
    double policyholder_age = 0.0;
    double license_age = 0.0;
    double vehicle_age = 0.0;
    VehicleType vehicle_type = VehicleType::T1;
    int claim = 0;
    std::optional<double> premium;
    std::optional<double> vehicle_value;
};

/// Parsed CSV contents. `clusters` is non-empty only when the file carries
/// the synthetic sidecar's trailing cluster column.
struct Portfolio {
    std::vector<ContractRecord> records;
    std::vector<int> clusters;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline double parse_number(const std::string& field, std::size_t line_no,
                           const std::string& column) {
    try {
        std::size_t consumed = 0;
        const double v = std::stod(field, &consumed);
        if (consumed != field.size() || !std::isfinite(v)) {
            throw std::invalid_argument(field);
        }
        return v;
    } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_no) + ": column '" + column +
                        "' is not a number: '" + field + "'");
    }
}

} // namespace detail

inline const std::vector<std::string>& csv_required_columns() {
    static const std::vector<std::string> cols = {
        "lat",         "lon",         "car_price", "engine_power", "ph_age",
        "license_age", "vehicle_age", "vehicle_type", "claim"};
    return cols;
}

/// Parses the documented portfolio CSV. Optional trailing columns, in order:
/// premium, vehicle_value, cluster. Throws DataError with the offending line
/// number on malformed rows.
inline Portfolio parse_portfolio(std::string_view csv_text) {
    std::istringstream in{std::string(csv_text)};
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty input: missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = detail::split_csv_line(line);
    const auto& required = csv_required_columns();
    if (header.size() < required.size()) {
        throw DataError("header has " + std::to_string(header.size()) +
                        " columns, expected at least " + std::to_string(required.size()));
    }
    for (std::size_t i = 0; i < required.size(); ++i) {
        if (header[i] != required[i]) {
            throw DataError("missing required column '" + required[i] +
                            "' (found '" + header[i] + "' at position " +
                            std::to_string(i) + ")");
        }
    }
    bool has_premium = false, has_value = false, has_cluster = false;
    std::size_t next = required.size();
    if (next < header.size() && header[next] == "premium") {
        has_premium = true;
        ++next;
    }
    if (next < header.size() && header[next] == "vehicle_value") {
        has_value = true;
        ++next;
    }
    if (next < header.size() && header[next] == "cluster") {
        has_cluster = true;
        ++next;
    }
    if (next != header.size()) {
        throw DataError("unrecognized column '" + header[next] + "'");
    }
    if (has_premium != has_value) {
        throw DataError("premium and vehicle_value columns must appear together");
    }

    Portfolio out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size()) {
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
        }
        ContractRecord r;
        r.home_lat = detail::parse_number(fields[0], line_no, "lat");
        r.home_lon = detail::parse_number(fields[1], line_no, "lon");
        r.car_price = detail::parse_number(fields[2], line_no, "car_price");
        r.engine_power = detail::parse_number(fields[3], line_no, "engine_power");
        r.policyholder_age = detail::parse_number(fields[4], line_no, "ph_age");
        r.license_age = detail::parse_number(fields[5], line_no, "license_age");
        r.vehicle_age = detail::parse_number(fields[6], line_no, "vehicle_age");
        const auto vt = parse_vehicle_type(fields[7]);
        if (!vt) {
            throw DataError("line " + std::to_string(line_no) +
                            ": unknown vehicle type '" + fields[7] + "'");
        }
        r.vehicle_type = *vt;
        if (fields[8] == "0") {
            r.claim = 0;
        } else if (fields[8] == "1") {
            r.claim = 1;
        } else {
            throw DataError("line " + std::to_string(line_no) + ": claim must be 0 or 1");
        }
        std::size_t f = 9;
        if (has_premium) {
            const double p = detail::parse_number(fields[f], line_no, "premium");
            const double v = detail::parse_number(fields[f + 1], line_no, "vehicle_value");
            if (p <= 0.0 || v <= 0.0) {
                throw DataError("line " + std::to_string(line_no) +
                                ": premium and vehicle_value must be > 0");
            }
            r.premium = p;
            r.vehicle_value = v;
            f += 2;
        }
        if (has_cluster) {
            out.clusters.push_back(
                static_cast<int>(detail::parse_number(fields[f], line_no, "cluster")));
        }
        out.records.push_back(r);
    }
    return out;
}

inline std::vector<ContractRecord> parse_contracts(std::string_view csv_text) {
    return parse_portfolio(csv_text).records;
}

/// Serializes records to the documented CSV schema. Premium/vehicle_value
/// columns are present when every record carries them; `clusters`, when
/// non-empty, appends the sidecar column.
inline std::string write_portfolio_csv(const std::vector<ContractRecord>& records,
                                       const std::vector<int>& clusters = {}) {
    const bool with_premium = !records.empty() &&
        std::all_of(records.begin(), records.end(),
                    [](const ContractRecord& r) { return r.premium && r.vehicle_value; });
    std::string out = "lat,lon,car_price,engine_power,ph_age,license_age,vehicle_age,"
                      "vehicle_type,claim";
    if (with_premium) out += ",premium,vehicle_value";
    if (!clusters.empty()) out += ",cluster";
    out += "\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
        const ContractRecord& r = records[i];
        out += format_double(r.home_lat) + ',' + format_double(r.home_lon) + ',' +
               format_double(r.car_price) + ',' + format_double(r.engine_power) + ',' +
               format_double(r.policyholder_age) + ',' + format_double(r.license_age) + ',' +
               format_double(r.vehicle_age) + ',' + to_string(r.vehicle_type) + ',' +
               std::to_string(r.claim);
        if (with_premium) {
            out += ',' + format_double(*r.premium) + ',' + format_double(*r.vehicle_value);
        }
        if (!clusters.empty()) out += ',' + std::to_string(clusters[i]);
        out += '\n';
    }
    return out;
}

/// N x 14 design matrix: 7 continuous columns then the 7-way one-hot block.
inline Matrix encode_features(const std::vector<ContractRecord>& records) {
    if (records.empty()) throw DataError("cannot encode an empty record list");
    Matrix m(records.size(), kFeatureCount, 0.0);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const ContractRecord& r = records[i];
        double* row = m.row(i);
        row[0] = r.home_lat;
        row[1] = r.home_lon;
        row[2] = r.car_price;
        row[3] = r.engine_power;
        row[4] = r.policyholder_age;
        row[5] = r.license_age;
        row[6] = r.vehicle_age;
        row[kContinuousFeatures + static_cast<std::size_t>(r.vehicle_type)] = 1.0;
    }
    return m;
}

/// Per-column z-score parameters, population standard deviation.
/// Zero-variance columns are flagged and map to 0 on apply.
struct Normalizer {
    std::vector<double> means;
    std::vector<double> stds;
    std::vector<std::uint8_t> zero_variance;
};

inline Normalizer fit_normalizer(const Matrix& m, const std::vector<std::size_t>& rows) {
    if (rows.empty()) throw DataError("fit_normalizer: empty row list");
    Normalizer n;
    n.means.assign(m.cols, 0.0);
    n.stds.assign(m.cols, 0.0);
    n.zero_variance.assign(m.cols, 0);
    const double inv_n = 1.0 / static_cast<double>(rows.size());
    for (std::size_t j = 0; j < m.cols; ++j) {
        double sum = 0.0;
        for (const std::size_t i : rows) sum += m(i, j);
        const double mean = sum * inv_n;
        double ss = 0.0;
        for (const std::size_t i : rows) {
            const double d = m(i, j) - mean;
            ss += d * d;
        }
        n.means[j] = mean;
        n.stds[j] = std::sqrt(ss * inv_n);
        if (n.stds[j] == 0.0) n.zero_variance[j] = 1;
    }
    return n;
}

inline Matrix apply_normalizer(const Normalizer& n, const Matrix& m) {
    if (m.cols != n.means.size()) {
        throw DataError("apply_normalizer: column count mismatch (" +
                        std::to_string(m.cols) + " vs " + std::to_string(n.means.size()) + ")");
    }
    Matrix out(m.rows, m.cols);
    for (std::size_t j = 0; j < m.cols; ++j) {
        if (n.zero_variance[j]) continue; // stays 0
        const double mean = n.means[j];
        const double inv_std = 1.0 / n.stds[j];
        for (std::size_t i = 0; i < m.rows; ++i) {
            out(i, j) = (m(i, j) - mean) * inv_std;
        }
    }
    return out;
}

/// Seeded train/test partition of 0..n_rows-1.
struct DataSplit {
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
    std::uint64_t seed = 0;
};

inline DataSplit split(std::size_t n_rows, double train_fraction, std::uint64_t seed) {
    if (n_rows < 2) throw ConfigError("split: need at least 2 rows");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("split: train_fraction must be in (0, 1)");
    }
    std::vector<std::size_t> order(n_rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);
    const auto n_train = static_cast<std::size_t>(
        std::floor(static_cast<double>(n_rows) * train_fraction));
    DataSplit s;
    s.seed = seed;
    s.train_indices.assign(order.begin(), order.begin() + n_train);
    s.test_indices.assign(order.begin() + n_train, order.end());
    return s;
}

/// premium / vehicle_value per record, min-max rescaled over the given set.
inline std::vector<double> insurer_risk(const std::vector<ContractRecord>& records) {
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!records[i].premium || !records[i].vehicle_value) missing.push_back(i);
    }
    if (!missing.empty()) {
        std::string rows;
        for (std::size_t k = 0; k < missing.size() && k < 10; ++k) {
            rows += (k ? "," : "") + std::to_string(missing[k]);
        }
        if (missing.size() > 10) rows += ",...";
        throw DataError("insurer_risk: premium/vehicle_value missing on rows " + rows);
    }
    if (records.empty()) return {};
    std::vector<double> r(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        r[i] = *records[i].premium / *records[i].vehicle_value;
    }
    const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
    if (*lo == *hi) throw NumericError("degenerate insurer risk");
    const double scale = 1.0 / (*hi - *lo);
    const double min = *lo;
    for (double& v : r) v = (v - min) * scale;
    return r;
}

/// Mixture-of-clusters portfolio generator with planted claim risk.
struct SyntheticConfig {
    std::size_t n_contracts = 30000;
    std::vector<double> cluster_weights = {0.864, 0.030, 0.106};
    std::vector<double> cluster_claim_probs = {0.054, 0.126, 0.224};
    std::vector<std::array<double, kContinuousFeatures>> cluster_centers = {{
        {47.0, 8.0, 20000.0, 80.0, 45.0, 20.0, 8.0},
        {52.0, 13.0, 60000.0, 200.0, 30.0, 5.0, 1.0},
        {41.0, 2.0, 35000.0, 140.0, 22.0, 2.0, 15.0},
    }};
    std::vector<std::array<double, kContinuousFeatures>> cluster_spreads = {{
        {0.5, 0.5, 2000.0, 8.0, 5.0, 4.0, 2.0},
        {0.5, 0.5, 4000.0, 15.0, 4.0, 2.0, 0.8},
        {0.5, 0.5, 3000.0, 12.0, 2.5, 1.0, 3.0},
    }};
    std::vector<std::array<double, kVehicleTypes>> vehicle_type_probs = {{
        {0.40, 0.35, 0.10, 0.05, 0.05, 0.03, 0.02},
        {0.02, 0.03, 0.05, 0.05, 0.45, 0.35, 0.05},
        {0.05, 0.05, 0.40, 0.30, 0.05, 0.05, 0.10},
    }};
    // Per-cluster premium rates. Deliberately not ordered like the claim
    // probabilities: the planted "insurer" misprices the riskiest cluster.
    std::vector<double> base_rates = {0.040, 0.065, 0.052};
    double premium_loading_noise = 0.20;
    std::uint64_t seed = 0;

    std::size_t n_clusters() const { return cluster_weights.size(); }
    void validate() const;
};

inline void SyntheticConfig::validate() const {
    const std::size_t k = cluster_weights.size();
    if (n_contracts == 0) throw ConfigError("synthetic config: n_contracts must be > 0");
    if (k == 0) throw ConfigError("synthetic config: need at least one cluster");
    if (cluster_claim_probs.size() != k || cluster_centers.size() != k ||
        cluster_spreads.size() != k || vehicle_type_probs.size() != k ||
        base_rates.size() != k) {
        throw ConfigError("synthetic config: per-cluster field sizes disagree");
    }
    const double wsum = std::accumulate(cluster_weights.begin(), cluster_weights.end(), 0.0);
    if (std::abs(wsum - 1.0) > 1e-9) {
        throw ConfigError("synthetic config: cluster_weights must sum to 1");
    }
    for (const double w : cluster_weights) {
        if (w < 0.0) throw ConfigError("synthetic config: negative cluster weight");
    }
    for (const double p : cluster_claim_probs) {
        if (p < 0.0 || p > 1.0) {
            throw ConfigError("synthetic config: claim probabilities must be in [0, 1]");
        }
    }
    for (const auto& probs : vehicle_type_probs) {
        const double s = std::accumulate(probs.begin(), probs.end(), 0.0);
        if (std::abs(s - 1.0) > 1e-9) {
            throw ConfigError("synthetic config: each vehicle_type_probs row must sum to 1");
        }
        for (const double p : probs) {
            if (p < 0.0) throw ConfigError("synthetic config: negative vehicle type probability");
        }
    }
    for (const auto& spreads : cluster_spreads) {
        for (const double s : spreads) {
            if (s < 0.0) throw ConfigError("synthetic config: negative spread");
        }
    }
    if (premium_loading_noise < 0.0) {
        throw ConfigError("synthetic config: premium_loading_noise must be >= 0");
    }
    for (std::size_t a = 0; a < k; ++a) {
        if (base_rates[a] <= 0.0) throw ConfigError("synthetic config: base rates must be > 0");
    }
}

struct SyntheticPortfolio {
    std::vector<ContractRecord> records;
    std::vector<int> clusters; // provenance tag, sidecar-only
};

inline SyntheticPortfolio generate_synthetic(const SyntheticConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    SyntheticPortfolio out;
    out.records.reserve(cfg.n_contracts);
    out.clusters.reserve(cfg.n_contracts);
    for (std::size_t i = 0; i < cfg.n_contracts; ++i) {
        const std::size_t k = rng.categorical(cfg.cluster_weights);
        std::array<double, kContinuousFeatures> f;
        for (std::size_t c = 0; c < kContinuousFeatures; ++c) {
            f[c] = rng.normal(cfg.cluster_centers[k][c], cfg.cluster_spreads[k][c]);
        }
        ContractRecord r;
        r.home_lat = f[0];
        r.home_lon = f[1];
        r.car_price = std::max(f[2], 1.0);
        r.engine_power = f[3];
        r.policyholder_age = f[4];
        r.license_age = f[5];
        r.vehicle_age = f[6];
        const std::vector<double> vt_probs(cfg.vehicle_type_probs[k].begin(),
                                           cfg.vehicle_type_probs[k].end());
        r.vehicle_type = static_cast<VehicleType>(rng.categorical(vt_probs));
        r.claim = rng.bernoulli(cfg.cluster_claim_probs[k]) ? 1 : 0;
        r.vehicle_value = r.car_price;
        const double loading = 1.0 + rng.normal(0.0, cfg.premium_loading_noise);
        r.premium = *r.vehicle_value * cfg.base_rates[k] * std::max(loading, 0.01);
        out.records.push_back(r);
        out.clusters.push_back(static_cast<int>(k));
    }
    return out;
}

} // namespace riskmap
