#pragma once

#include "nh2st/matrix.hpp"
#include "nh2st/tape.hpp"

namespace nh2st::nce {

/// Paired feature rows for one batch-level InfoNCE term. Row i of zp and
/// row i of zg are the positive pair; the other B-1 zg rows are the
/// negatives for anchor zp_i.
struct ContrastBatch {
    Matrix zp;  // B x N pathology-side features
    Matrix zg;  // B x N gene-side features
    double tau_temp = 0.05;
};

/// One-directional InfoNCE with cosine similarity and temperature tau.
/// B=1 gives exactly 0 (no negatives).
double info_nce(const ContrastBatch& batch);

/// The loss as a function of a precomputed B x B similarity matrix
/// (S[i][j] = sim(zp_i, zg_j)). Split out so monotonicity and closed-form
/// properties can be probed at the similarity level.
double info_nce_from_sim(const Matrix& sim, double tau);
/// dLoss/dS for the same function.
Matrix info_nce_sim_gradient(const Matrix& sim, double tau);

ad::Var info_nce(ad::Tape& tape, ad::Var zp, ad::Var zg, double tau);

}  // namespace nh2st::nce
