#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "riskmap/dataset.hpp"
#include "riskmap/errors.hpp"
#include "riskmap/format.hpp"
#include "riskmap/pipeline.hpp"
#include "riskmap/render.hpp"
#include "riskmap/serialize.hpp"

namespace fs = std::filesystem;
using namespace riskmap;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open input file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file: " + path.string());
    out << content;
    if (!out) throw ConfigError("failed writing output file: " + path.string());
}

fs::path prepare_out_dir(const std::string& out_dir) {
    fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory: " + out_dir);
    return dir;
}

std::vector<double> parse_double_list(const std::string& text, const char* flag) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            values.push_back(std::stod(item, &pos));
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(std::string(flag) + ": cannot parse number '" + item + "'");
        }
    }
    if (values.empty()) throw ConfigError(std::string(flag) + ": empty list");
    return values;
}

std::vector<std::size_t> parse_index_list(const std::string& text, const char* flag) {
    std::vector<std::size_t> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            const unsigned long long v = std::stoull(item, &pos);
            if (pos != item.size()) throw std::invalid_argument(item);
            values.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw ConfigError(std::string(flag) + ": cannot parse index '" + item + "'");
        }
    }
    if (values.empty()) throw ConfigError(std::string(flag) + ": empty list");
    return values;
}

json parse_json_file(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
}

void print_kl_trace(const std::vector<double>& kl) {
    if (kl.empty()) return;
    std::cout << "tsne kl trace:";
    for (std::size_t i = 0; i < kl.size(); i += 100) {
        std::cout << " [" << i << "] " << format_fixed(kl[i], 4);
    }
    std::cout << " [" << kl.size() - 1 << "] " << format_fixed(kl.back(), 4) << "\n";
}

struct SynthArgs {
    std::string config_path, out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
};

int run_synth(const SynthArgs& a) {
    SyntheticConfig cfg;
    if (!a.config_path.empty()) {
        cfg = synthetic_config_from_json(parse_json_file(a.config_path));
    }
    if (a.seed_set) cfg.seed = a.seed;
    cfg.validate();
    const SyntheticPortfolio portfolio = generate_synthetic(cfg);
    const fs::path dir = prepare_out_dir(a.out_dir);
    const fs::path path = dir / "portfolio.csv";
    write_file(path, write_portfolio_csv(portfolio.records, portfolio.clusters));
    std::size_t claims = 0;
    for (const ContractRecord& r : portfolio.records) claims += static_cast<std::size_t>(r.claim);
    const double ratio =
        100.0 * static_cast<double>(claims) / static_cast<double>(portfolio.records.size());
    std::cout << "wrote " << path.string() << ": n=" << portfolio.records.size()
              << " claim_ratio=" << format_fixed(ratio, 2) << "%\n";
    return 0;
}

struct TrainArgs {
    std::string data_path, config_path, out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
    double perplexity = 0.0;
    bool perplexity_set = false;
    std::string sweep;
    double train_fraction = 0.0;
    bool train_fraction_set = false;
};

int run_train(const TrainArgs& a) {
    const Portfolio portfolio = parse_portfolio(read_file(a.data_path));
    const std::vector<ContractRecord>& records = portfolio.records;
    if (records.size() < 100) {
        throw DataError("train: need at least 100 records, got " +
                        std::to_string(records.size()));
    }
    PipelineConfig cfg;
    if (!a.config_path.empty()) {
        cfg = pipeline_config_from_json(parse_json_file(a.config_path), cfg);
    }
    if (a.seed_set) cfg.seed = a.seed;
    if (a.train_fraction_set) cfg.train_fraction = a.train_fraction;
    if (a.perplexity_set && !a.sweep.empty()) {
        throw ConfigError("train: --perplexity and --perplexity-sweep are exclusive");
    }
    if (a.perplexity_set) cfg.tsne.perplexity = a.perplexity;

    const fs::path dir = prepare_out_dir(a.out_dir);

    if (!a.sweep.empty()) {
        // Sweep mode: one embedding scatter per perplexity, no artifact.
        const std::vector<double> values = parse_double_list(a.sweep, "--perplexity-sweep");
        const DataSplit parts = split(records.size(), cfg.train_fraction,
                                      derive_seed(cfg.seed, detail::kSeedSplit));
        const Matrix features = encode_features(records);
        const Normalizer normalizer = fit_normalizer(features, parts.train_indices);
        const Matrix x_train =
            apply_normalizer(normalizer, detail::take_rows(features, parts.train_indices));
        std::vector<int> claims;
        claims.reserve(parts.train_indices.size());
        for (const std::size_t i : parts.train_indices) claims.push_back(records[i].claim);
        for (const double p : values) {
            TsneConfig tc = cfg.tsne;
            tc.perplexity = p;
            tc.seed = derive_seed(cfg.seed, detail::kSeedTsne);
            const Embedding emb = run_tsne(x_train, tc);
            const fs::path path = dir / ("embedding_perplexity_" + format_double(p) + ".svg");
            write_file(path, embedding_svg(emb.y, claims));
            std::cout << "perplexity " << format_double(p) << ": kl "
                      << format_fixed(emb.kl_history.front(), 4) << " -> "
                      << format_fixed(emb.kl_history.back(), 4) << ", wrote " << path.string()
                      << "\n";
        }
        return 0;
    }

    const TrainOutcome outcome = train_pipeline(records, cfg);
    const fs::path path = dir / "artifact.json";
    write_file(path, save_artifact(outcome.artifact));
    for (const auto& [stage, seconds] : outcome.stage_seconds) {
        std::cout << "stage " << stage << ": " << format_fixed(seconds, 3) << " s\n";
    }
    print_kl_trace(outcome.artifact.embedding.kl_history);
    std::cout << "wrote " << path.string() << "\n";
    return 0;
}

struct ScoreArgs {
    std::string artifact_path, data_path, out_dir = ".";
};

int run_score(const ScoreArgs& a) {
    const PipelineArtifact artifact = load_artifact(read_file(a.artifact_path));
    const Portfolio portfolio = parse_portfolio(read_file(a.data_path));
    const BatchScores scores = score_batch(artifact.surface, artifact.nn_tsne,
                                           artifact.normalizer, portfolio.records);
    const fs::path dir = prepare_out_dir(a.out_dir);
    const fs::path path = dir / "scores.csv";
    write_file(path, scores_csv(scores));
    std::cout << "scored " << portfolio.records.size() << " contracts: retained "
              << scores.retained.size() << ", out_of_surface " << scores.out_of_surface_count
              << "\n";
    std::cout << "wrote " << path.string() << "\n";
    return 0;
}

struct EvaluateArgs {
    std::string artifact_path, data_path, out_dir = ".";
    bool insurer = false;
    std::string groups;
};

int run_evaluate(const EvaluateArgs& a) {
    const PipelineArtifact artifact = load_artifact(read_file(a.artifact_path));
    const Portfolio portfolio = parse_portfolio(read_file(a.data_path));
    EvaluateOptions opt;
    opt.insurer = a.insurer;
    if (!a.groups.empty()) opt.group_boundaries = parse_double_list(a.groups, "--groups");
    const EvaluateOutcome outcome = evaluate_pipeline(artifact, portfolio.records, opt);

    const fs::path dir = prepare_out_dir(a.out_dir);
    write_file(dir / "report.json", report_to_json(outcome.report).dump(2) + "\n");
    write_file(dir / "report.txt", report_to_text(outcome.report));
    write_file(dir / "threshold.csv", threshold_curve_csv(outcome.report.curve));
    if (a.insurer) {
        if (!artifact.insurer_surface) {
            throw DataError("evaluate: artifact has no insurer surface");
        }
        write_file(dir / "insurer_surface.pgm", write_pgm(*artifact.insurer_surface));
        write_file(dir / "insurer_surface.svg", surface_svg(*artifact.insurer_surface));
    }
    std::cout << report_to_text(outcome.report);
    std::cout << "wrote " << (dir / "report.json").string() << ", report.txt, threshold.csv\n";
    return 0;
}

struct CompareArgs {
    std::string artifact_path, data_path, out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string kinds;
};

int run_compare(const CompareArgs& a) {
    const PipelineArtifact artifact = load_artifact(read_file(a.artifact_path));
    const Portfolio portfolio = parse_portfolio(read_file(a.data_path));
    CompareOptions opt;
    if (a.seed_set) opt.seed = a.seed;
    if (!a.kinds.empty()) {
        opt.kinds.clear();
        std::stringstream ss(a.kinds);
        std::string item;
        while (std::getline(ss, item, ',')) opt.kinds.push_back(parse_model_kind(item));
        if (opt.kinds.empty()) throw ConfigError("--kinds: empty list");
    }
    const std::vector<SpaceComparisonRow> rows =
        compare_pipeline(artifact, portfolio.records, opt);
    const fs::path dir = prepare_out_dir(a.out_dir);
    write_file(dir / "comparison.csv", comparison_csv(rows));
    std::cout << comparison_text(rows);
    std::cout << "wrote " << (dir / "comparison.csv").string() << "\n";
    return 0;
}

struct PlotArgs {
    std::string artifact_path, out_dir = ".";
    std::string mark;
};

int run_plot(const PlotArgs& a) {
    const PipelineArtifact artifact = load_artifact(read_file(a.artifact_path));
    std::vector<MarkerPoint> markers;
    if (!a.mark.empty()) {
        const std::vector<std::size_t> ids = parse_index_list(a.mark, "--mark");
        std::string unknown;
        for (const std::size_t id : ids) {
            if (id >= artifact.embedding.y.rows) {
                unknown += (unknown.empty() ? "" : ",") + std::to_string(id);
            }
        }
        if (!unknown.empty()) {
            throw ConfigError("plot: unknown contract ids (training rows): " + unknown);
        }
        for (const std::size_t id : ids) {
            markers.push_back(
                {artifact.embedding.y(id, 0), artifact.embedding.y(id, 1), id});
        }
    }
    const fs::path dir = prepare_out_dir(a.out_dir);
    write_file(dir / "surface.pgm", write_pgm(artifact.surface));
    write_file(dir / "surface.svg", surface_svg(artifact.surface, markers));
    write_file(dir / "embedding.svg",
               embedding_svg(artifact.embedding.y, artifact.train_claims));
    std::cout << "wrote surface.pgm, surface.svg, embedding.svg";
    if (artifact.insurer_surface) {
        write_file(dir / "insurer_surface.pgm", write_pgm(*artifact.insurer_surface));
        write_file(dir / "insurer_surface.svg", surface_svg(*artifact.insurer_surface, markers));
        std::cout << ", insurer_surface.pgm, insurer_surface.svg";
    }
    std::cout << " in " << dir.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"auto insurance risk mapping pipeline"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic portfolio CSV");
    synth->add_option("--config", synth_args.config_path, "synthetic config JSON");
    synth->add_option("--out", synth_args.out_dir, "output directory");
    CLI::Option* synth_seed = synth->add_option("--seed", synth_args.seed, "generator seed");

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "train the full pipeline");
    train->add_option("data", train_args.data_path, "portfolio CSV")->required();
    train->add_option("--config", train_args.config_path, "pipeline config JSON");
    train->add_option("--out", train_args.out_dir, "output directory");
    CLI::Option* train_seed = train->add_option("--seed", train_args.seed, "master seed");
    CLI::Option* train_perp =
        train->add_option("--perplexity", train_args.perplexity, "t-SNE perplexity");
    train->add_option("--perplexity-sweep", train_args.sweep,
                      "comma list of perplexities; emits one scatter per value, no artifact");
    CLI::Option* train_frac =
        train->add_option("--train-fraction", train_args.train_fraction, "train split fraction");

    ScoreArgs score_args;
    CLI::App* score = app.add_subcommand("score", "score contracts with a trained artifact");
    score->add_option("artifact", score_args.artifact_path, "artifact JSON")->required();
    score->add_option("data", score_args.data_path, "portfolio CSV")->required();
    score->add_option("--out", score_args.out_dir, "output directory");

    EvaluateArgs eval_args;
    CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate a trained artifact");
    evaluate->add_option("artifact", eval_args.artifact_path, "artifact JSON")->required();
    evaluate->add_option("data", eval_args.data_path, "portfolio CSV with claims")->required();
    evaluate->add_option("--out", eval_args.out_dir, "output directory");
    evaluate->add_flag("--insurer", eval_args.insurer,
                       "compare against the insurer risk (needs premium/vehicle_value)");
    evaluate->add_option("--groups", eval_args.groups, "group boundaries, e.g. 0.3,0.5");

    CompareArgs compare_args;
    CLI::App* compare = app.add_subcommand("compare", "baseline comparison in 2D and 14D");
    compare->add_option("artifact", compare_args.artifact_path, "artifact JSON")->required();
    compare->add_option("data", compare_args.data_path, "portfolio CSV")->required();
    compare->add_option("--out", compare_args.out_dir, "output directory");
    CLI::Option* compare_seed =
        compare->add_option("--seed", compare_args.seed, "grid search seed");
    compare->add_option("--kinds", compare_args.kinds,
                        "comma list: linear,logistic,nn,forest,boost");

    PlotArgs plot_args;
    CLI::App* plot = app.add_subcommand("plot", "export surface and embedding images");
    plot->add_option("artifact", plot_args.artifact_path, "artifact JSON")->required();
    plot->add_option("--out", plot_args.out_dir, "output directory");
    plot->add_option("--mark", plot_args.mark, "training row ids to mark on the surfaces");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        synth_args.seed_set = synth_seed->count() > 0;
        train_args.seed_set = train_seed->count() > 0;
        train_args.perplexity_set = train_perp->count() > 0;
        train_args.train_fraction_set = train_frac->count() > 0;
        compare_args.seed_set = compare_seed->count() > 0;
        if (synth->parsed()) return run_synth(synth_args);
        if (train->parsed()) return run_train(train_args);
        if (score->parsed()) return run_score(score_args);
        if (evaluate->parsed()) return run_evaluate(eval_args);
        if (compare->parsed()) return run_compare(compare_args);
        if (plot->parsed()) return run_plot(plot_args);
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
