#include "nh2st/contrastive.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace nh2st::nce {

namespace {

void check(const Matrix& sim, double tau) {
    if (sim.rows() != sim.cols() || sim.rows() == 0)
        throw std::invalid_argument("info_nce: similarity matrix must be square and nonempty");
    if (!(tau > 0.0)) throw std::invalid_argument("info_nce: temperature must be positive");
}

}  // namespace

double info_nce_from_sim(const Matrix& sim, double tau) {
    check(sim, tau);
    const std::size_t B = sim.rows();
    double total = 0.0;
    std::vector<double> d(B);
    for (std::size_t i = 0; i < B; ++i) {
        // Logits shifted by the positive logit: d_j = (S_ij - S_ii)/tau.
        // The per-anchor loss log(sum_j exp(d_j)) avoids the cancellation
        // of forming logsumexp and subtracting the positive afterwards, so
        // B=1 is exactly 0 and identical rows give exactly log(B).
        double m = 0.0;
        for (std::size_t j = 0; j < B; ++j) {
            d[j] = (sim(i, j) - sim(i, i)) / tau;
            m = std::max(m, d[j]);
        }
        if (m == 0.0) {
            double rest = 0.0;
            for (std::size_t j = 0; j < B; ++j)
                if (j != i) rest += std::exp(d[j]);
            total += std::log1p(rest);
        } else {
            double s = 0.0;
            for (std::size_t j = 0; j < B; ++j) s += std::exp(d[j] - m);
            total += m + std::log(s);
        }
    }
    return total / static_cast<double>(B);
}

Matrix info_nce_sim_gradient(const Matrix& sim, double tau) {
    check(sim, tau);
    const std::size_t B = sim.rows();
    Matrix g(B, B);
    std::vector<double> d(B);
    for (std::size_t i = 0; i < B; ++i) {
        double m = 0.0;
        for (std::size_t j = 0; j < B; ++j) {
            d[j] = (sim(i, j) - sim(i, i)) / tau;
            m = std::max(m, d[j]);
        }
        double s = 0.0;
        for (std::size_t j = 0; j < B; ++j) {
            d[j] = std::exp(d[j] - m);
            s += d[j];
        }
        for (std::size_t j = 0; j < B; ++j) {
            const double p = d[j] / s;  // softmax over the anchor's logits
            g(i, j) = (p - (i == j ? 1.0 : 0.0)) / (tau * static_cast<double>(B));
        }
    }
    return g;
}

double info_nce(const ContrastBatch& batch) {
    if (!batch.zp.same_shape(batch.zg) || batch.zp.rows() == 0)
        throw std::invalid_argument("info_nce: zp/zg must be nonempty equal-shape matrices");
    const Matrix sim = matmul(l2_normalize_rows(batch.zp), transpose(l2_normalize_rows(batch.zg)));
    return info_nce_from_sim(sim, batch.tau_temp);
}

ad::Var info_nce(ad::Tape& tape, ad::Var zp, ad::Var zg, double tau) {
    if (!tape.value(zp).same_shape(tape.value(zg)) || tape.value(zp).rows() == 0)
        throw std::invalid_argument("info_nce: zp/zg must be nonempty equal-shape matrices");
    ad::Var sim =
        tape.matmul(tape.l2_normalize_rows(zp), tape.transpose(tape.l2_normalize_rows(zg)));
    Matrix value(1, 1);
    value[0] = info_nce_from_sim(tape.value(sim), tau);
    return tape.custom(std::move(value), {sim}, [sim, tau](ad::Tape& t, const Matrix& g) {
        if (!t.tracked(sim)) return;
        t.accum(sim, scale(info_nce_sim_gradient(t.value(sim), tau), g[0]));
    });
}

}  // namespace nh2st::nce
