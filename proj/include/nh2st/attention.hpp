#pragma once

#include <string_view>

#include "nh2st/matrix.hpp"
#include "nh2st/param_tree.hpp"
#include "nh2st/tape.hpp"

namespace nh2st::attn {

/// Splits an N-vector into T contiguous tokens of width N/T. flatten of
/// the result recovers the input. T must divide N.
Matrix tokenize(const Matrix& h, std::size_t T);
Matrix flatten(const Matrix& tokens);

/// Registers one Wq/Wk/Wv projection set under `prefix` (each square of
/// side N/T). One independent set exists per attention direction.
void add_cross_attn_params(ParamTree& params, const std::string& prefix, std::size_t N,
                           std::size_t T);

/// Single-head cross-attention of one embedding on another: the target
/// provides the queries, the guide provides keys and values. Both vectors
/// are tokenized along the feature axis; the output is flattened back to
/// an N-vector.
Matrix cross_attend(const ParamTree& params, std::string_view prefix, const Matrix& target,
                    const Matrix& guide, std::size_t T);
ad::Var cross_attend(ad::Tape& tape, const ad::TapeParams& tp, std::string_view prefix,
                     ad::Var target, ad::Var guide, std::size_t T);

}  // namespace nh2st::attn
