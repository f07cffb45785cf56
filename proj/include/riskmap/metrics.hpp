#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "riskmap/errors.hpp"

namespace riskmap {

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw ConfigError("pearson: need equal lengths >= 2");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw NumericError("pearson: undefined correlation");
    return sxy / std::sqrt(sxx * syy);
}

/// Probability that a random positive outranks a random negative, ties
/// counted 1/2. Computed via midranks; the numerator is an exact sum of
/// halves, so the result matches pair counting bit for bit.
inline double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty()) {
        throw ConfigError("roc_auc: need equal non-empty lengths");
    }
    std::size_t n_pos = 0;
    for (const int l : labels) {
        if (l != 0 && l != 1) throw DataError("roc_auc: labels must be 0 or 1");
        n_pos += static_cast<std::size_t>(l);
    }
    const std::size_t n = scores.size();
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw DataError("roc_auc: need both classes");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] == 1) pos_rank_sum += midrank;
        }
        i = j;
    }
    const double numerator =
        pos_rank_sum - static_cast<double>(n_pos) * static_cast<double>(n_pos + 1) / 2.0;
    return numerator / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

/// Contract/claim counts per risk band. Bands are half-open: [0, b1), ...,
/// [b_last, 1]; a score equal to a boundary belongs to the upper band.
struct GroupStats {
    std::vector<double> boundaries;
    std::vector<std::size_t> contracts;
    std::vector<std::size_t> claims;
    std::vector<double> claim_ratio; // NaN for empty groups
};

inline GroupStats group_stats(const std::vector<double>& scores,
                              const std::vector<int>& labels,
                              const std::vector<double>& boundaries = {0.3, 0.5}) {
    if (scores.size() != labels.size()) throw ConfigError("group_stats: length mismatch");
    if (boundaries.empty()) throw ConfigError("group_stats: need >= 1 boundary");
    for (std::size_t i = 0; i < boundaries.size(); ++i) {
        if (!(boundaries[i] > 0.0 && boundaries[i] < 1.0)) {
            throw ConfigError("group_stats: boundaries must lie inside (0,1)");
        }
        if (i > 0 && !(boundaries[i] > boundaries[i - 1])) {
            throw ConfigError("group_stats: boundaries must be strictly increasing");
        }
    }
    GroupStats g;
    g.boundaries = boundaries;
    const std::size_t n_groups = boundaries.size() + 1;
    g.contracts.assign(n_groups, 0);
    g.claims.assign(n_groups, 0);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double s = scores[i];
        if (!(s >= 0.0 && s <= 1.0)) throw DataError("group_stats: scores must lie in [0,1]");
        std::size_t group = n_groups - 1;
        for (std::size_t b = 0; b < boundaries.size(); ++b) {
            if (s < boundaries[b]) {
                group = b;
                break;
            }
        }
        ++g.contracts[group];
        if (labels[i] == 1) ++g.claims[group];
    }
    g.claim_ratio.resize(n_groups);
    for (std::size_t k = 0; k < n_groups; ++k) {
        g.claim_ratio[k] = g.contracts[k] == 0
                               ? std::numeric_limits<double>::quiet_NaN()
                               : static_cast<double>(g.claims[k]) /
                                     static_cast<double>(g.contracts[k]);
    }
    return g;
}

/// Statistics of the subset {score >= t} for t on the 0.00..1.00 grid with
/// step 0.01. claim_ratio is NaN where the subset is empty.
struct ThresholdCurve {
    std::vector<double> thresholds;
    std::vector<double> contract_fraction;
    std::vector<double> claim_ratio;
};

inline ThresholdCurve threshold_curve(const std::vector<double>& scores,
                                      const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty()) {
        throw ConfigError("threshold_curve: need equal non-empty lengths");
    }
    for (const double s : scores) {
        if (!(s >= 0.0 && s <= 1.0)) {
            throw DataError("threshold_curve: scores must lie in [0,1]");
        }
    }
    ThresholdCurve curve;
    const std::size_t n = scores.size();
    for (std::size_t k = 0; k <= 100; ++k) {
        const double t = static_cast<double>(k) / 100.0;
        std::size_t count = 0, claims = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (scores[i] >= t) {
                ++count;
                claims += static_cast<std::size_t>(labels[i] == 1);
            }
        }
        curve.thresholds.push_back(t);
        curve.contract_fraction.push_back(static_cast<double>(count) /
                                          static_cast<double>(n));
        curve.claim_ratio.push_back(count == 0
                                        ? std::numeric_limits<double>::quiet_NaN()
                                        : static_cast<double>(claims) /
                                              static_cast<double>(count));
    }
    return curve;
}

struct TopFractionRow {
    double fraction = 0.0;
    std::size_t contracts = 0;
    std::size_t claims = 0;
    double claim_ratio = 0.0;
};

/// Claim ratio among the ceil(f*N) highest-scored contracts per fraction;
/// equal scores are taken in index order.
inline std::vector<TopFractionRow> top_fraction_table(
    const std::vector<double>& scores, const std::vector<int>& labels,
    const std::vector<double>& fractions = {1.0, 0.5, 0.2, 0.1}) {
    if (scores.size() != labels.size() || scores.empty()) {
        throw ConfigError("top_fraction_table: need equal non-empty lengths");
    }
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    std::vector<TopFractionRow> rows;
    for (const double f : fractions) {
        if (!(f > 0.0 && f <= 1.0)) {
            throw ConfigError("top_fraction_table: fractions must lie in (0,1]");
        }
        // The 1e-9 nudge keeps an exact product like 0.2*3000 from rounding
        // up to 601 under binary representation of the fraction.
        const double product = f * static_cast<double>(n);
        std::size_t m = static_cast<std::size_t>(std::ceil(product - 1e-9));
        m = std::max<std::size_t>(1, std::min(m, n));
        TopFractionRow row;
        row.fraction = f;
        row.contracts = m;
        for (std::size_t k = 0; k < m; ++k) {
            row.claims += static_cast<std::size_t>(labels[order[k]] == 1);
        }
        row.claim_ratio = static_cast<double>(row.claims) / static_cast<double>(m);
        rows.push_back(row);
    }
    return rows;
}

struct InsurerComparison {
    double pearson = 0.0;
    double auc = 0.0;
    std::vector<TopFractionRow> top_fractions;
};

/// Everything the evaluation emits, computed over retained (in-surface)
/// contracts only.
struct EvalReport {
    std::size_t n_retained = 0;
    std::size_t n_out_of_surface = 0;
    double claim_ratio = 0.0;
    double pearson = 0.0;
    double auc = 0.0;
    GroupStats groups;
    ThresholdCurve curve;
    std::vector<TopFractionRow> top_fractions;
    std::optional<InsurerComparison> insurer;
};

inline EvalReport build_report(const std::vector<double>& risk, const std::vector<int>& labels,
                               std::size_t n_out_of_surface,
                               const std::optional<std::vector<double>>& insurer_scores = {},
                               const std::vector<double>& boundaries = {0.3, 0.5},
                               const std::vector<double>& fractions = {1.0, 0.5, 0.2, 0.1}) {
    if (risk.size() != labels.size() || risk.empty()) {
        throw ConfigError("build_report: need equal non-empty lengths");
    }
    if (insurer_scores && insurer_scores->size() != risk.size()) {
        throw ConfigError("build_report: insurer score length mismatch");
    }
    EvalReport report;
    report.n_retained = risk.size();
    report.n_out_of_surface = n_out_of_surface;
    std::size_t total_claims = 0;
    for (const int l : labels) total_claims += static_cast<std::size_t>(l == 1);
    report.claim_ratio = static_cast<double>(total_claims) / static_cast<double>(risk.size());
    std::vector<double> label_values(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        label_values[i] = static_cast<double>(labels[i]);
    }
    report.pearson = pearson(risk, label_values);
    report.auc = roc_auc(risk, labels);
    report.groups = group_stats(risk, labels, boundaries);
    report.curve = threshold_curve(risk, labels);
    report.top_fractions = top_fraction_table(risk, labels, fractions);
    if (insurer_scores) {
        InsurerComparison cmp;
        cmp.pearson = pearson(*insurer_scores, label_values);
        cmp.auc = roc_auc(*insurer_scores, labels);
        cmp.top_fractions = top_fraction_table(*insurer_scores, labels, fractions);
        report.insurer = std::move(cmp);
    }
    return report;
}

} // namespace riskmap
