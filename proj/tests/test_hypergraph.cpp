#include <stdexcept>
#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "nh2st/grad_check.hpp"
#include "nh2st/encoders.hpp"
#include "nh2st/hypergraph.hpp"

using namespace nh2st;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Matrix m(r, c);
    for (double& v : m.data()) v = d(rng);
    return m;
}

// Exhaustive reference: for each seed node, scan all candidates
// (tau_deg - 1) times taking the best remaining one, with its own cosine.
std::set<std::size_t> reference_edge(const Matrix& X, std::size_t j, std::size_t tau_deg) {
    std::set<std::size_t> edge{j};
    while (edge.size() < tau_deg) {
        double best = -2.0;
        std::size_t best_k = X.rows();
        for (std::size_t k = 0; k < X.rows(); ++k) {
            if (edge.count(k)) continue;
            double dot = 0.0, nj = 0.0, nk = 0.0;
            for (std::size_t c = 0; c < X.cols(); ++c) {
                dot += X(j, c) * X(k, c);
                nj += X(j, c) * X(j, c);
                nk += X(k, c) * X(k, c);
            }
            double sim = (nj == 0.0 || nk == 0.0) ? 0.0 : dot / std::sqrt(nj * nk);
            sim = std::clamp(sim, -1.0, 1.0);
            if (sim > best) {
                best = sim;
                best_k = k;
            }
        }
        edge.insert(best_k);
    }
    return edge;
}

}  // namespace

TEST_CASE("three-node worked example with an index-broken tie") {
    const Matrix x = Matrix::from_rows({{1, 0}, {0, 1}, {1, 1}});
    const Matrix h = hg::build_hyperedges(x, 2);
    // e1={v1,v3}, e2={v2,v3}, e3={v3,v1}: the v1-vs-v2 tie at 1/sqrt(2)
    // resolves to the lower index.
    CHECK(h == Matrix::from_rows({{1, 0, 1}, {0, 1, 0}, {1, 1, 1}}));
}

TEST_CASE("degenerate degrees: identity and all-ones incidence") {
    std::mt19937_64 rng(1);
    const Matrix x = random_matrix(5, 3, rng);
    CHECK(hg::build_hyperedges(x, 1) == Matrix::identity(5));
    CHECK(hg::build_hyperedges(x, 5) == Matrix(5, 5, 1.0));
    CHECK_THROWS_AS(hg::build_hyperedges(x, 6), std::invalid_argument);
    CHECK_THROWS_AS(hg::build_hyperedges(x, 0), std::invalid_argument);
}

TEST_CASE("incidence invariants: diagonal ones, column sums tau_deg") {
    std::mt19937_64 rng(2);
    for (std::size_t v = 3; v <= 8; ++v) {
        for (std::size_t tau = 1; tau <= v; ++tau) {
            const Matrix x = random_matrix(v, 4, rng);
            const hg::HyperGraph g = hg::make_hypergraph(x, tau);
            for (std::size_t j = 0; j < v; ++j) {
                CHECK(g.H(j, j) == 1.0);
                CHECK(g.de[j] == static_cast<double>(tau));
                CHECK(g.dv[j] >= 1.0);
            }
        }
    }
}

TEST_CASE("matches the exhaustive pairwise reference on random features") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t v = 3 + rng() % 8;  // V in [3, 10]
        const std::size_t tau = 1 + rng() % v;
        const Matrix x = random_matrix(v, 5, rng);
        const Matrix h = hg::build_hyperedges(x, tau);
        for (std::size_t j = 0; j < v; ++j) {
            const auto expect = reference_edge(x, j, tau);
            std::set<std::size_t> got;
            for (std::size_t i = 0; i < v; ++i)
                if (h(i, j) == 1.0) got.insert(i);
            CHECK(got == expect);
        }
    }
}

TEST_CASE("identity incidence collapses the layer to ReLU(X Theta)") {
    std::mt19937_64 rng(4);
    const Matrix x = random_matrix(4, 3, rng);
    const Matrix out = hg::hgnn_layer(Matrix::identity(4), x, Matrix::identity(3), false);
    CHECK(out == relu(x));
}

TEST_CASE("single node graph") {
    const Matrix x = Matrix::from_rows({{-0.4, 1.2}});
    const Matrix theta = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
    CHECK(hg::hgnn_layer(Matrix::identity(1), x, theta, false) == relu(x));
}

TEST_CASE("three-node chain matches hand-evaluated propagation") {
    const Matrix h = Matrix::from_rows({{1, 0, 1}, {0, 1, 0}, {1, 1, 1}});
    std::mt19937_64 rng(5);
    const Matrix x = random_matrix(3, 4, rng);

    // Hand evaluation: dv = (2,1,3), de = (2,2,2);
    // G[i][j] = sum_e H[i][e] H[j][e] / de[e] / sqrt(dv_i dv_j).
    const double dv[3] = {2, 1, 3};
    double G[3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int e = 0; e < 3; ++e) s += h(i, e) * h(j, e) / 2.0;
            G[i][j] = s / (std::sqrt(dv[i]) * std::sqrt(dv[j]));
        }
    const Matrix out = hg::hgnn_layer(h, x, Matrix::identity(4), true);
    for (int i = 0; i < 3; ++i)
        for (std::size_t c = 0; c < 4; ++c) {
            double expect = 0.0;
            for (int j = 0; j < 3; ++j) expect += G[i][j] * x(j, c);
            CHECK(std::abs(out(i, static_cast<std::size_t>(c)) - expect) <= 1e-12);
        }
}

TEST_CASE("identical rows are a fixed point under node-regular incidence") {
    // Symmetric normalization preserves a constant column exactly when all
    // node degrees match, as for identity, all-ones or circulant incidence.
    // The row is nonnegative, so the pooled embedding equals ReLU of it
    // whether or not the single layer counts as the activation-free last.
    const std::size_t v = 4, d = 3;
    Matrix x(v, d);
    for (std::size_t i = 0; i < v; ++i) {
        x(i, 0) = 0.7;
        x(i, 1) = 0.2;
        x(i, 2) = 1.5;
    }
    Matrix circulant(v, v);
    for (std::size_t j = 0; j < v; ++j) {
        circulant(j, j) = 1.0;
        circulant((j + 1) % v, j) = 1.0;
    }
    ParamTree params;
    params.insert("hg.l1.W", Matrix::identity(d));
    for (const Matrix& h : {Matrix::identity(v), Matrix(v, v, 1.0), circulant}) {
        const Matrix pooled = hg::hgnn_forward(params, "hg", h, x, 1);
        CHECK(pooled.rows() == 1);
        for (std::size_t c = 0; c < d; ++c)
            CHECK(pooled(0, c) == doctest::Approx(std::max(x(0, c), 0.0)).epsilon(1e-12));
    }
}

TEST_CASE("forward output has width N for L=2") {
    std::mt19937_64 rng(6);
    const std::size_t v = 5, N = 6;
    ParamTree params;
    hg::add_hgnn_params(params, "hg", N, 2);
    init_params_inplace(params, 8);
    const Matrix x = random_matrix(v, N, rng);
    const Matrix h = hg::build_hyperedges(x, 3);
    const Matrix pooled = hg::hgnn_forward(params, "hg", h, x, 2);
    CHECK(pooled.rows() == 1);
    CHECK(pooled.cols() == N);
}

TEST_CASE("pooled embedding is invariant under consistent node permutation") {
    std::mt19937_64 rng(7);
    const std::size_t v = 6, N = 4;
    ParamTree params;
    hg::add_hgnn_params(params, "hg", N, 2);
    init_params_inplace(params, 9);
    const Matrix x = random_matrix(v, N, rng);
    const Matrix h = hg::build_hyperedges(x, 3);
    const Matrix base = hg::hgnn_forward(params, "hg", h, x, 2);

    std::vector<std::size_t> perm(v);
    std::iota(perm.begin(), perm.end(), 0);
    for (int trial = 0; trial < 50; ++trial) {
        std::shuffle(perm.begin(), perm.end(), rng);
        Matrix xp(v, N), hp(v, v);
        for (std::size_t i = 0; i < v; ++i)
            for (std::size_t j = 0; j < N; ++j) xp(i, j) = x(perm[i], j);
        for (std::size_t i = 0; i < v; ++i)
            for (std::size_t j = 0; j < v; ++j) hp(i, j) = h(perm[i], perm[j]);
        const Matrix pooled = hg::hgnn_forward(params, "hg", hp, xp, 2);
        for (std::size_t c = 0; c < N; ++c)
            CHECK(std::abs(pooled(0, c) - base(0, c)) <= 1e-12);
    }
}

TEST_CASE("zero-degree incidence is rejected") {
    Matrix h = Matrix::identity(3);
    h(1, 1) = 0.0;  // node 1 in no edge, edge 1 empty
    CHECK_THROWS_AS(hg::hgnn_propagation(h), std::invalid_argument);
}

TEST_CASE("HGNN gradients pass the finite-difference check") {
    std::mt19937_64 rng(10);
    const std::size_t v = 5, N = 4, L = 2;
    ParamTree p;
    hg::add_hgnn_params(p, "hg", N, L);
    init_params_inplace(p, 11);
    p.insert("in.X", random_matrix(v, N, rng));
    const Matrix h = hg::build_hyperedges(p.at("in.X"), 3);

    const auto loss = [&h, L](const ParamTree& q) {
        ad::Tape t;
        auto tp = ad::register_leaves(t, q);
        return t.value(t.sum_sq(hg::hgnn_forward(t, tp, "hg", h, tp.at("in.X"), L)))[0];
    };
    ad::Tape t;
    auto tp = ad::register_leaves(t, p);
    t.backward(t.sum_sq(hg::hgnn_forward(t, tp, "hg", h, tp.at("in.X"), L)));
    const auto report = grad_check(loss, ad::collect_grads(t, tp), p, 1e-5);
    CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("tape and plain HGNN forward agree bitwise") {
    std::mt19937_64 rng(12);
    const std::size_t v = 5, N = 4;
    ParamTree p;
    hg::add_hgnn_params(p, "hg", N, 2);
    init_params_inplace(p, 13);
    const Matrix x = random_matrix(v, N, rng);
    const Matrix h = hg::build_hyperedges(x, 2);
    const Matrix direct = hg::hgnn_forward(p, "hg", h, x, 2);
    ad::Tape t;
    auto tp = ad::register_leaves(t, p);
    CHECK(t.value(hg::hgnn_forward(t, tp, "hg", h, t.constant(x), 2)) == direct);
}
