#include <stdexcept>
#include <cmath>
#include <random>

#include "doctest.h"
#include "nh2st/metrics.hpp"
#include "nh2st/synth.hpp"

using namespace nh2st;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    Matrix m(r, c);
    for (double& v : m.data()) v = d(rng);
    return m;
}

}  // namespace

TEST_CASE("identical nonconstant predictions score perfectly") {
    const Matrix label = Matrix::from_rows({{1, 5}, {2, 3}, {4, 1}});
    const EvalResult r = compute_metrics(label, label);
    CHECK(r.mse == 0.0);
    CHECK(r.mae == 0.0);
    CHECK(r.pcc == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("negated zero-mean predictions anticorrelate perfectly") {
    const Matrix label = Matrix::from_rows({{1, -2}, {-1, 2}, {0, 0}});
    const Matrix pred = scale(label, -1.0);
    const EvalResult r = compute_metrics(pred, label);
    CHECK(r.pcc == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("hand-computed column case") {
    const Matrix pred = Matrix::from_rows({{1}, {2}, {3}});
    const Matrix label = Matrix::from_rows({{2}, {4}, {6}});
    const EvalResult r = compute_metrics(pred, label);
    CHECK(r.per_gene_pcc[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.mse == doctest::Approx((1.0 + 4.0 + 9.0) / 3.0).epsilon(1e-15));
    CHECK(r.mae == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("a constant column contributes zero correlation") {
    const Matrix pred = Matrix::from_rows({{1, 7}, {2, 7}, {3, 7}});
    const Matrix label = Matrix::from_rows({{2, 1}, {4, 2}, {6, 3}});
    const EvalResult r = compute_metrics(pred, label);
    CHECK(r.per_gene_pcc[0] == doctest::Approx(1.0));
    CHECK(r.per_gene_pcc[1] == 0.0);
    CHECK(r.pcc == doctest::Approx(0.5));
}

TEST_CASE("PCC is invariant under positive affine transforms of predictions") {
    std::mt19937_64 rng(1);
    const Matrix pred = random_matrix(7, 4, rng);
    const Matrix label = random_matrix(7, 4, rng);
    const EvalResult base = compute_metrics(pred, label);
    std::uniform_real_distribution<double> apos(0.2, 5.0), boff(-3.0, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double a = apos(rng), b = boff(rng);
        Matrix t = pred;
        for (double& v : t.data()) v = a * v + b;
        const EvalResult r = compute_metrics(t, label);
        for (std::size_t g = 0; g < 4; ++g)
            CHECK(std::abs(r.per_gene_pcc[g] - base.per_gene_pcc[g]) <= 1e-9);
    }
}

TEST_CASE("mae never exceeds rmse and summary pcc is the per-gene mean") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix pred = random_matrix(6, 5, rng);
        const Matrix label = random_matrix(6, 5, rng);
        const EvalResult r = compute_metrics(pred, label);
        CHECK(r.mae <= std::sqrt(r.mse) + 1e-15);
        double mean = 0.0;
        for (double v : r.per_gene_pcc) mean += v;
        mean /= static_cast<double>(r.per_gene_pcc.size());
        CHECK(std::abs(r.pcc - mean) <= 1e-12);
        CHECK(r.pcc >= -1.0);
        CHECK(r.pcc <= 1.0);
    }
}

TEST_CASE("metrics preconditions") {
    CHECK_THROWS_AS(compute_metrics(Matrix(2, 2), Matrix(2, 3)), std::invalid_argument);
    CHECK_THROWS_AS(compute_metrics(Matrix(1, 2), Matrix(1, 2)), std::invalid_argument);
}

TEST_CASE("cross-validation is deterministic with sane report shape") {
    TrainConfig cfg;
    cfg.N = 8;
    cfg.P = 4;
    cfg.n = 3;
    cfg.T = 2;
    cfg.K = 2;
    cfg.L = 1;
    cfg.tau_deg = 2;
    cfg.batch_size = 4;
    cfg.epochs = 2;
    SynthConfig s;
    s.grid_side = 4;
    s.patch_dim = cfg.P;
    s.genes = cfg.n;
    s.noise_sigma = 0.02;
    const STDataset ds = select_top_genes(synth_generate(s, 4), cfg.n);

    const CrossValReport a = cross_validate(ds, cfg, 2, 99);
    const CrossValReport b = cross_validate(ds, cfg, 2, 99);
    CHECK(a.fold_values.size() == 2);
    CHECK(a.to_csv() == b.to_csv());
    for (const auto& f : a.fold_values) {
        CHECK(std::isfinite(f[0]));
        CHECK(std::isfinite(f[1]));
        CHECK(std::isfinite(f[2]));
    }
    const std::string csv = a.to_csv();
    CHECK(csv.rfind("fold,mse,mae,pcc\n", 0) == 0);
    CHECK(csv.find("summary,") != std::string::npos);
    CHECK(csv.find("±") != std::string::npos);
    CHECK_THROWS_AS(cross_validate(ds, cfg, 1, 0), std::invalid_argument);
}

TEST_CASE("noiseless planted data is recovered with high held-out correlation") {
    TrainConfig cfg;
    cfg.N = 64;
    cfg.P = 4;
    cfg.n = 4;
    cfg.T = 8;
    cfg.K = 4;
    cfg.L = 2;
    cfg.tau_deg = 3;
    cfg.batch_size = 8;
    cfg.epochs = 80;
    cfg.lr = 3e-3;
    cfg.seed = 17;
    SynthConfig s;
    s.grid_side = 12;
    s.patch_dim = cfg.P;
    s.genes = cfg.n;
    s.noise_sigma = 0.0;
    const STDataset ds = select_top_genes(synth_generate(s, 17), cfg.n);

    const CrossValReport r = cross_validate(ds, cfg, 2, 17);
    CHECK(r.pcc.mean > 0.95);
}
