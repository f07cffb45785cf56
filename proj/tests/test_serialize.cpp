#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "riskmap/serialize.hpp"
#include "test_support.hpp"

using namespace riskmap;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("artifact save/load round trip is byte identical", "[serialize]") {
    const PipelineArtifact& art = test_support::small_fixture().outcome.artifact;
    const std::string saved = save_artifact(art);
    const PipelineArtifact loaded = load_artifact(saved);
    CHECK(save_artifact(loaded) == saved);

    CHECK(loaded.seed == art.seed);
    CHECK(loaded.train_fraction == art.train_fraction);
    CHECK(loaded.normalizer.means == art.normalizer.means);
    CHECK(loaded.normalizer.zero_variance == art.normalizer.zero_variance);
    CHECK(loaded.embedding.y == art.embedding.y);
    CHECK(loaded.embedding.kl_history == art.embedding.kl_history);
    CHECK(loaded.train_claims == art.train_claims);
    CHECK(loaded.nn_tsne.weights[0] == art.nn_tsne.weights[0]);
    CHECK(loaded.nn_risk.weights[1] == art.nn_risk.weights[1]);
    CHECK(loaded.nn_risk.target_standardizer.means == art.nn_risk.target_standardizer.means);
    CHECK(loaded.surface.grid == art.surface.grid);
    CHECK(loaded.surface.valid == art.surface.valid);
    CHECK(loaded.surface.raw_min == art.surface.raw_min);
    REQUIRE(loaded.insurer_surface.has_value());
    CHECK(loaded.insurer_surface->grid == art.insurer_surface->grid);
}

TEST_CASE("artifact loading rejects tampered or inconsistent content", "[serialize]") {
    const PipelineArtifact& art = test_support::small_fixture().outcome.artifact;
    const std::string saved = save_artifact(art);

    SECTION("tampered embedding breaks the lineage hash") {
        json j = json::parse(saved);
        const double v = j["embedding"]["y"]["data"][0].get<double>();
        j["embedding"]["y"]["data"][0] = v + 0.5;
        CHECK_THROWS_MATCHES(load_artifact(j.dump()), DataError,
                             Catch::Matchers::MessageMatches(
                                 ContainsSubstring("lineage hash mismatch")));
    }
    SECTION("unknown format version") {
        json j = json::parse(saved);
        j["format_version"] = 999;
        CHECK_THROWS_MATCHES(load_artifact(j.dump()), DataError,
                             Catch::Matchers::MessageMatches(
                                 ContainsSubstring("unsupported format_version")));
    }
    SECTION("truncated JSON") {
        CHECK_THROWS_MATCHES(load_artifact(saved.substr(0, saved.size() / 2)), DataError,
                             Catch::Matchers::MessageMatches(
                                 ContainsSubstring("JSON parse failure")));
    }
    SECTION("missing component") {
        json j = json::parse(saved);
        j.erase("nn_risk");
        CHECK_THROWS_MATCHES(load_artifact(j.dump()), DataError,
                             Catch::Matchers::MessageMatches(
                                 ContainsSubstring("malformed content")));
    }
    SECTION("wrong matrix payload size") {
        json j = json::parse(saved);
        j["nn_risk"]["weights"][0]["data"].push_back(0.0);
        CHECK_THROWS_AS(load_artifact(j.dump()), DataError);
    }
    SECTION("non-2D embedding") {
        PipelineArtifact bad = art;
        bad.embedding.y = Matrix(4, 3);
        bad.train_claims.assign(4, 0);
        CHECK_THROWS_MATCHES(load_artifact(save_artifact(bad)), DataError,
                             Catch::Matchers::MessageMatches(
                                 ContainsSubstring("embedding must be 2D")));
    }
    SECTION("claims length mismatch") {
        PipelineArtifact bad = art;
        bad.train_claims.push_back(0);
        CHECK_THROWS_MATCHES(load_artifact(save_artifact(bad)), DataError,
                             Catch::Matchers::MessageMatches(
                                 ContainsSubstring("train_claims length")));
    }
    SECTION("insurer surface is optional") {
        json j = json::parse(saved);
        j.erase("insurer_surface");
        const PipelineArtifact loaded = load_artifact(j.dump());
        CHECK_FALSE(loaded.insurer_surface.has_value());
    }
}

TEST_CASE("mask run lengths round trip", "[serialize]") {
    Rng rng(404);
    for (int instance = 0; instance < 10; ++instance) {
        std::vector<std::uint8_t> mask(rng.uniform_index(40));
        for (auto& m : mask) m = static_cast<std::uint8_t>(rng.uniform() < 0.5);
        const json runs = detail::rle_encode(mask);
        CHECK(detail::rle_decode(runs, mask.size()) == mask);
    }
    const std::vector<std::uint8_t> zeros(7, 0), ones(4, 1), empty;
    CHECK(detail::rle_decode(detail::rle_encode(zeros), 7) == zeros);
    CHECK(detail::rle_decode(detail::rle_encode(ones), 4) == ones);
    CHECK(detail::rle_encode(ones) == json::array({0, 4}));
    CHECK(detail::rle_decode(detail::rle_encode(empty), 0) == empty);
    CHECK_THROWS_AS(detail::rle_decode(json::array({3, 2}), 6), DataError);
}

namespace {

EvalReport sample_report() {
    const std::vector<double> risk = {0.1, 0.2, 0.15, 0.05, 0.6, 0.55};
    const std::vector<int> labels = {0, 1, 0, 0, 1, 1};
    const std::vector<double> insurer = {0.2, 0.3, 0.1, 0.4, 0.5, 0.6};
    return build_report(risk, labels, 2, insurer);
}

} // namespace

TEST_CASE("report JSON maps NaN ratios to null", "[serialize]") {
    const json j = report_to_json(sample_report());
    CHECK(j["n_retained"] == 6);
    CHECK(j["n_out_of_surface"] == 2);
    CHECK(j["groups"]["claim_ratio"][0] == 0.25);
    CHECK(j["groups"]["claim_ratio"][1].is_null());
    CHECK(j["groups"]["claim_ratio"][2] == 1.0);
    CHECK(j["top_fractions"].size() == 4);
    CHECK(j["top_fractions"][0]["fraction"] == 1.0);
    REQUIRE(j.contains("insurer"));
    CHECK(j["insurer"]["top_fractions"].size() == 4);

    const json bare = report_to_json(build_report({0.1, 0.6}, {0, 1}, 0));
    CHECK_FALSE(bare.contains("insurer"));
}

TEST_CASE("report text covers groups, fractions and the insurer block", "[serialize]") {
    const std::string text = report_to_text(sample_report());
    CHECK_THAT(text, ContainsSubstring("Evaluation report"));
    CHECK_THAT(text, ContainsSubstring("contracts retained:   6"));
    CHECK_THAT(text, ContainsSubstring("Risk groups"));
    CHECK_THAT(text, ContainsSubstring("[0.00,0.30)"));
    CHECK_THAT(text, ContainsSubstring("[0.30,0.50)"));
    CHECK_THAT(text, ContainsSubstring("[0.50,1.00]"));
    CHECK_THAT(text, ContainsSubstring("n/a"));
    CHECK_THAT(text, ContainsSubstring("Top fractions"));
    CHECK_THAT(text, ContainsSubstring("Insurer comparison"));

    const std::string bare = report_to_text(build_report({0.1, 0.6}, {0, 1}, 0));
    CHECK_THAT(bare, !ContainsSubstring("Insurer comparison"));
}

TEST_CASE("threshold curve CSV uses fixed thresholds and nan markers", "[serialize]") {
    ThresholdCurve curve;
    curve.thresholds = {0.0, 0.5};
    curve.contract_fraction = {1.0, 0.25};
    curve.claim_ratio = {0.5, std::numeric_limits<double>::quiet_NaN()};
    CHECK(threshold_curve_csv(curve) ==
          "threshold,contract_fraction,claim_ratio\n"
          "0.00,1,0.5\n"
          "0.50,0.25,nan\n");
}

TEST_CASE("score CSV marks out-of-surface rows", "[serialize]") {
    BatchScores batch;
    batch.coords = Matrix(2, 2);
    batch.coords(0, 0) = 1.5;
    batch.coords(0, 1) = -2.25;
    batch.coords(1, 0) = 0.0;
    batch.coords(1, 1) = 3.0;
    RiskScore ok;
    ok.value = 0.5;
    RiskScore outside;
    outside.out_of_surface = true;
    batch.scores = {ok, outside};
    CHECK(scores_csv(batch) ==
          "row,y1,y2,risk,status\n"
          "0,1.5,-2.25,0.5,ok\n"
          "1,0,3,nan,out_of_surface\n");
}

TEST_CASE("CSV quoting escapes separators and quotes", "[serialize]") {
    CHECK(csv_quote("plain") == "plain");
    CHECK(csv_quote("a,b") == "\"a,b\"");
    CHECK(csv_quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_quote("line\nbreak") == "\"line\nbreak\"");

    std::vector<SpaceComparisonRow> rows(2);
    rows[0].kind = ModelKind::linear;
    rows[0].space = "2d";
    rows[0].auc = 0.75;
    rows[0].hyperparameters = "none";
    rows[1].kind = ModelKind::forest;
    rows[1].space = "14d";
    rows[1].auc = 0.5;
    rows[1].hyperparameters = "10 trees, depth 3";
    CHECK(comparison_csv(rows) ==
          "model,space,auc,hyperparameters\n"
          "Linear Regression,2d,0.75,none\n"
          "Random Forest,14d,0.5,\"10 trees, depth 3\"\n");

    const std::string text = comparison_text(rows);
    CHECK_THAT(text, ContainsSubstring("Risk estimation, 2d space"));
    CHECK_THAT(text, ContainsSubstring("Risk estimation, 14d space"));
    CHECK_THAT(text, ContainsSubstring("Linear Regression    0.7500  none"));
    CHECK_THAT(text, ContainsSubstring("Random Forest        0.5000  10 trees, depth 3"));
}

TEST_CASE("synthetic config JSON applies overrides onto defaults", "[serialize]") {
    const json j{{"n_contracts", 5000},
                 {"seed", 3},
                 {"base_rates", {0.01, 0.02, 0.03}}};
    const SyntheticConfig cfg = synthetic_config_from_json(j);
    CHECK(cfg.n_contracts == 5000);
    CHECK(cfg.seed == 3);
    CHECK(cfg.base_rates == std::vector<double>{0.01, 0.02, 0.03});
    CHECK(cfg.cluster_weights == std::vector<double>{0.864, 0.030, 0.106});
    CHECK(cfg.premium_loading_noise == 0.20);

    CHECK_THROWS_AS(synthetic_config_from_json(json{{"n_contracts", "many"}}), ConfigError);
}

TEST_CASE("pipeline config JSON merges nested stage settings", "[serialize]") {
    PipelineConfig base;
    base.seed = 1;
    base.tsne.perplexity = 12.5;
    base.nn_risk_train.epochs = 60;
    const json j{{"seed", 99},
                 {"tsne", {{"n_iterations", 777}}},
                 {"nn_risk_train", {{"learning_rate", 0.5}}}};
    const PipelineConfig merged = pipeline_config_from_json(j, base);
    CHECK(merged.seed == 99);
    CHECK(merged.tsne.perplexity == 12.5);
    CHECK(merged.tsne.n_iterations == 777);
    CHECK(merged.nn_risk_train.learning_rate == 0.5);
    CHECK(merged.nn_risk_train.epochs == 60);
    CHECK(merged.train_fraction == base.train_fraction);

    CHECK_THROWS_AS(pipeline_config_from_json(json{{"tsne", {{"perplexity", "high"}}}}, base),
                    ConfigError);
}
