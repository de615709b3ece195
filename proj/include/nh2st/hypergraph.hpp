#pragma once

#include <string_view>
#include <vector>

#include "nh2st/matrix.hpp"
#include "nh2st/param_tree.hpp"
#include "nh2st/tape.hpp"

namespace nh2st::hg {

/// Node features plus incidence structure. H[v][e] = 1 iff node v belongs
/// to hyperedge e; hyperedge e_j is seeded at node j, so the diagonal is
/// all ones and every column has exactly tau_deg entries.
struct HyperGraph {
    Matrix X;                // V x d node features
    Matrix H;                // V x V incidence
    std::vector<double> dv;  // node degrees (row sums)
    std::vector<double> de;  // hyperedge degrees (column sums)
};

/// Hyperedge e_j = {v_j} plus the tau_deg-1 nodes most cosine-similar to
/// v_j, ties broken by ascending node index.
Matrix build_hyperedges(const Matrix& X, std::size_t tau_deg);
HyperGraph make_hypergraph(Matrix X, std::size_t tau_deg);

/// Symmetric-normalized propagation matrix Dv^-1/2 H De^-1 H^T Dv^-1/2
/// with unit hyperedge weights. Throws on any zero degree.
Matrix hgnn_propagation(const Matrix& H);

/// One convolution step: act(G * X * theta), ReLU except on the last layer.
Matrix hgnn_layer(const Matrix& H, const Matrix& X, const Matrix& theta, bool last);

void add_hgnn_params(ParamTree& params, const std::string& prefix, std::size_t N, std::size_t L);

/// L convolution layers followed by a mean pool over nodes; returns a 1xN
/// graph embedding. Layer weights live at `prefix`.l1..lL.
Matrix hgnn_forward(const ParamTree& params, std::string_view prefix, const Matrix& H,
                    const Matrix& X, std::size_t L);
/// Tape variant; the incidence structure is a constant (selection is
/// discrete), gradients flow through node features and layer weights.
ad::Var hgnn_forward(ad::Tape& tape, const ad::TapeParams& tp, std::string_view prefix,
                     const Matrix& H, ad::Var X, std::size_t L);

}  // namespace nh2st::hg
