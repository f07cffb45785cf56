#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "riskmap/matrix.hpp"
#include "riskmap/rng.hpp"
#include "riskmap/tsne.hpp"

using namespace riskmap;

namespace {

Matrix random_points(std::size_t n, std::size_t dim, std::uint64_t seed, double scale = 1.0) {
    Matrix x(n, dim);
    Rng rng(seed);
    for (double& v : x.data) v = rng.normal(0.0, scale);
    return x;
}

double row_log2_perplexity(const Matrix& p, std::size_t i) {
    double h = 0.0;
    for (std::size_t j = 0; j < p.cols; ++j) {
        const double v = p(i, j);
        if (v > 0.0) h -= v * std::log2(v);
    }
    return h;
}

} // namespace

TEST_CASE("pairwise squared distances match the hand computation", "[tsne]") {
    Matrix x(3, 2);
    x(0, 0) = 0.0;
    x(0, 1) = 0.0;
    x(1, 0) = 3.0;
    x(1, 1) = 4.0;
    x(2, 0) = 0.0;
    x(2, 1) = 1.0;
    const Matrix d = pairwise_sq_distances(x);
    CHECK(d(0, 0) == 0.0);
    CHECK(d(0, 1) == 25.0);
    CHECK(d(1, 0) == 25.0);
    CHECK(d(0, 2) == 1.0);
    CHECK(d(1, 2) == 18.0);
}

TEST_CASE("bandwidth search hits the target perplexity", "[tsne]") {
    const Matrix x = random_points(50, 4, 11);
    const Matrix d = pairwise_sq_distances(x);
    for (const double target : {5.0, 15.0, 30.0}) {
        const ConditionalAffinities aff = conditional_affinities(d, target, 1e-5, 50);
        CHECK(aff.warning_count == 0);
        for (std::size_t i = 0; i < 50; ++i) {
            double row_sum = 0.0;
            for (std::size_t j = 0; j < 50; ++j) row_sum += aff.p(i, j);
            CHECK(row_sum == Catch::Approx(1.0).epsilon(1e-12));
            CHECK(aff.p(i, i) == 0.0);
            CHECK(std::abs(row_log2_perplexity(aff.p, i) - std::log2(target)) < 1e-3);
        }
    }
}

TEST_CASE("unreachable perplexity is counted, not fatal", "[tsne]") {
    // all points mutually equidistant: entropy is log2(n-1) at every
    // bandwidth, so a target of 2 can never be reached
    Matrix d(5, 5, 1.0);
    for (std::size_t i = 0; i < 5; ++i) d(i, i) = 0.0;
    const ConditionalAffinities aff = conditional_affinities(d, 2.0, 1e-5, 50);
    CHECK(aff.warning_count == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < 5; ++j) row_sum += aff.p(i, j);
        CHECK(row_sum == Catch::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("conditional affinities validate their inputs", "[tsne]") {
    Matrix d(5, 5, 1.0);
    CHECK_THROWS_AS(conditional_affinities(d, 4.0), ConfigError);
    d(1, 2) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(conditional_affinities(d, 2.0), NumericError);
}

TEST_CASE("symmetrized affinities have unit mass", "[tsne]") {
    const Matrix x = random_points(12, 3, 5);
    const ConditionalAffinities aff =
        conditional_affinities(pairwise_sq_distances(x), 4.0);
    const Matrix p = symmetrize(aff.p);
    double total = 0.0;
    for (std::size_t i = 0; i < p.rows; ++i) {
        for (std::size_t j = 0; j < p.cols; ++j) {
            CHECK(p(i, j) == p(j, i));
            total += p(i, j);
        }
    }
    CHECK(total == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(p(2, 7) ==
          Catch::Approx((aff.p(2, 7) + aff.p(7, 2)) / 24.0).epsilon(1e-15));
}

TEST_CASE("student-t affinities match the kernel formula", "[tsne]") {
    Matrix y(3, 2);
    y(0, 0) = 0.0;
    y(0, 1) = 0.0;
    y(1, 0) = 1.0;
    y(1, 1) = 0.0;
    y(2, 0) = 0.0;
    y(2, 1) = 2.0;
    const LowDimAffinities low = low_dim_affinities(y);
    CHECK(low.w(0, 1) == 0.5);           // 1/(1+1)
    CHECK(low.w(0, 2) == 0.2);           // 1/(1+4)
    CHECK(low.w(1, 2) == 1.0 / 6.0);     // 1/(1+5)
    const double total = 2.0 * (0.5 + 0.2 + 1.0 / 6.0);
    CHECK(low.weight_sum == Catch::Approx(total).epsilon(1e-15));
    CHECK(low.q(0, 1) == Catch::Approx(0.5 / total).epsilon(1e-15));
    double qsum = 0.0;
    for (const double v : low.q.data) qsum += v;
    CHECK(qsum == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("KL divergence reproduces a frozen hand value", "[tsne]") {
    // p off-diagonals (0,1)=0.3 (0,2)=0.15 (1,2)=0.05 symmetric; q uniform 1/6
    Matrix p(3, 3, 0.0), q(3, 3, 0.0);
    p(0, 1) = p(1, 0) = 0.3;
    p(0, 2) = p(2, 0) = 0.15;
    p(1, 2) = p(2, 1) = 0.05;
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            if (i != j) q(i, j) = 1.0 / 6.0;
        }
    }
    // 2*(0.3 ln 1.8 + 0.15 ln 0.9 + 0.05 ln 0.3), evaluated offline
    CHECK(kl_divergence(p, q) == Catch::Approx(0.20066656381132994).epsilon(1e-12));
    CHECK(kl_divergence(p, p) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("KL gradient matches central finite differences", "[tsne]") {
    const Matrix x = random_points(9, 3, 21);
    const Matrix p = symmetrize(conditional_affinities(pairwise_sq_distances(x), 4.0).p);
    Matrix y = random_points(9, 2, 22);

    const Matrix analytic = kl_gradient(p, y);
    const double h = 1e-5;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < y.rows; ++i) {
        for (std::size_t c = 0; c < 2; ++c) {
            const double keep = y(i, c);
            y(i, c) = keep + h;
            const double up = kl_divergence(p, low_dim_affinities(y).q);
            y(i, c) = keep - h;
            const double down = kl_divergence(p, low_dim_affinities(y).q);
            y(i, c) = keep;
            const double fd = (up - down) / (2.0 * h);
            const double diff = analytic(i, c) - fd;
            num += diff * diff;
            den += fd * fd;
        }
    }
    CHECK(std::sqrt(num) <= 1e-5 * std::sqrt(den));
}

TEST_CASE("packed triangular storage mirrors the dense symmetric matrix", "[tsne]") {
    detail::PackedSymmetric s(5);
    REQUIRE(s.values.size() == 10);
    std::size_t expected = 0;
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = i + 1; j < 5; ++j) {
            CHECK(s.index(i, j) == expected);
            ++expected;
        }
    }
    s.values[s.index(1, 3)] = 0.25;
    CHECK(s.at(1, 3) == 0.25);
    CHECK(s.at(3, 1) == 0.25);
    CHECK(s.at(2, 2) == 0.0);
}

TEST_CASE("packed affinity builder agrees with the dense path", "[tsne]") {
    const Matrix x = random_points(15, 4, 33);
    TsneConfig cfg;
    cfg.perplexity = 6.0;
    const detail::PackedAffinities packed = detail::build_input_affinities(x, cfg);
    const Matrix dense =
        symmetrize(conditional_affinities(pairwise_sq_distances(x), 6.0).p);
    for (std::size_t i = 0; i < 15; ++i) {
        for (std::size_t j = i + 1; j < 15; ++j) {
            CHECK(packed.p.at(i, j) == Catch::Approx(dense(i, j)).epsilon(1e-13));
        }
    }
    CHECK(packed.warning_count == 0);
}

TEST_CASE("first KL history entry is the loss at the initial layout", "[tsne]") {
    const Matrix x = random_points(20, 4, 44);
    TsneConfig cfg;
    cfg.perplexity = 7.0;
    cfg.n_iterations = 3;
    cfg.seed = 9;
    const Embedding emb = run_tsne(x, cfg);
    REQUIRE(emb.kl_history.size() == 3);

    // replicate the seeded N(0, init_scale) initial coordinates
    Rng rng(cfg.seed);
    Matrix y0(20, 2);
    for (std::size_t i = 0; i < 20; ++i) {
        for (std::size_t c = 0; c < 2; ++c) y0(i, c) = rng.normal(0.0, cfg.init_scale);
    }
    const Matrix p =
        symmetrize(conditional_affinities(pairwise_sq_distances(x), 7.0).p);
    const double expected = kl_divergence(p, low_dim_affinities(y0).q);
    CHECK(emb.kl_history[0] == Catch::Approx(expected).epsilon(1e-9));
}

TEST_CASE("reported KL never includes the exaggeration factor", "[tsne]") {
    const Matrix x = random_points(24, 3, 55);
    TsneConfig cfg;
    cfg.perplexity = 8.0;
    cfg.n_iterations = 30;
    cfg.exaggeration_iterations = 10;
    // KL of a distribution against any q is bounded below by 0 and the trace
    // must live on the un-exaggerated scale throughout
    const Embedding emb = run_tsne(x, cfg);
    for (const double kl : emb.kl_history) {
        CHECK(kl >= 0.0);
        CHECK(kl < 50.0);
    }
}

TEST_CASE("embedding run is seed-deterministic and reduces the loss", "[tsne]") {
    const Matrix x = random_points(30, 5, 66);
    TsneConfig cfg;
    cfg.perplexity = 10.0;
    cfg.n_iterations = 1000;
    cfg.seed = 3;
    const Embedding a = run_tsne(x, cfg);
    const Embedding b = run_tsne(x, cfg);
    CHECK(a.y == b.y);
    CHECK(a.kl_history == b.kl_history);
    REQUIRE(a.kl_history.size() == 1000);
    CHECK(a.kl_history.back() < a.kl_history.front());

    cfg.seed = 4;
    const Embedding c = run_tsne(x, cfg);
    CHECK_FALSE(a.y == c.y);
}

TEST_CASE("tsne config validation guards every knob", "[tsne]") {
    TsneConfig cfg;
    cfg.perplexity = 30.0;
    CHECK_NOTHROW(cfg.validate(100));
    CHECK_THROWS_AS(cfg.validate(31), ConfigError);

    TsneConfig neg = cfg;
    neg.perplexity = -1.0;
    CHECK_THROWS_AS(neg.validate(100), ConfigError);

    TsneConfig zero_iter = cfg;
    zero_iter.n_iterations = 0;
    CHECK_THROWS_AS(zero_iter.validate(100), ConfigError);

    TsneConfig bad_momentum = cfg;
    bad_momentum.momentum_final = 1.0;
    CHECK_THROWS_AS(bad_momentum.validate(100), ConfigError);

    TsneConfig bad_lr = cfg;
    bad_lr.learning_rate = 0.0;
    CHECK_THROWS_AS(bad_lr.validate(100), ConfigError);
}
