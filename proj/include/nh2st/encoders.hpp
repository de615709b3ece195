#pragma once

#include <cstdint>
#include <string_view>

#include "nh2st/matrix.hpp"
#include "nh2st/param_tree.hpp"
#include "nh2st/tape.hpp"

namespace nh2st {

/// Architecture dimensions shared by every learnable module. Hidden widths
/// of the two-layer MLPs are fixed at twice the embedding width.
struct ModelDims {
    std::size_t N = 64;   // shared embedding width
    std::size_t P = 128;  // patch feature length
    std::size_t n = 32;   // gene count
    std::size_t T = 8;    // tokens per embedding in cross-attention
    std::size_t L = 2;    // HGNN layers
    std::size_t tau_deg = 3;

    std::size_t hidden() const { return 2 * N; }
    std::size_t token_dim() const { return N / T; }
};

namespace enc {

/// Registers the patch encoder (P -> 2N -> N), gene encoder (n -> 2N -> N)
/// and translator (N -> 2N -> n) parameter shapes. The encoder/translator
/// dimension symmetry is fixed here by construction.
void add_encoder_params(ParamTree& params, const ModelDims& dims);

/// Two affine layers with a ReLU between them, no output activation.
/// Applies row-wise; accepts any number of input rows.
Matrix mlp2_forward(const ParamTree& params, std::string_view prefix, const Matrix& rows);
ad::Var mlp2_forward(ad::Tape& tape, const ad::TapeParams& tp, std::string_view prefix,
                     ad::Var rows);

Matrix encode_patch(const ParamTree& params, const Matrix& patch_rows);
Matrix encode_genes(const ParamTree& params, const Matrix& expr_rows);
Matrix translate(const ParamTree& params, const Matrix& embedding_rows);

/// Shape check for a parameter tree against the expected architecture;
/// throws on any mismatch. Used when loading checkpoints.
void validate_params(const ParamTree& params, const ModelDims& dims);

}  // namespace enc

/// Fills every ".W" leaf with seeded Xavier-uniform values and every ".b"
/// leaf with zeros, iterating leaves in lexicographic path order.
void init_params_inplace(ParamTree& params, std::uint64_t seed);

}  // namespace nh2st
