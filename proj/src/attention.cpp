#include "nh2st/attention.hpp"

#include <cmath>
#include <stdexcept>

namespace nh2st::attn {

namespace {

std::size_t token_width(std::size_t N, std::size_t T) {
    if (T == 0 || N % T != 0)
        throw std::invalid_argument("attention: T=" + std::to_string(T) +
                                    " must divide N=" + std::to_string(N));
    return N / T;
}

}  // namespace

Matrix tokenize(const Matrix& h, std::size_t T) {
    if (h.rows() != 1) throw std::invalid_argument("tokenize: expected a row vector");
    const std::size_t d = token_width(h.cols(), T);
    Matrix t(T, d);
    std::copy(h.data().begin(), h.data().end(), t.data().begin());
    return t;
}

Matrix flatten(const Matrix& tokens) {
    Matrix h(1, tokens.size());
    std::copy(tokens.data().begin(), tokens.data().end(), h.data().begin());
    return h;
}

void add_cross_attn_params(ParamTree& params, const std::string& prefix, std::size_t N,
                           std::size_t T) {
    const std::size_t d = token_width(N, T);
    params.insert(prefix + ".Wq", Matrix(d, d));
    params.insert(prefix + ".Wk", Matrix(d, d));
    params.insert(prefix + ".Wv", Matrix(d, d));
}

Matrix cross_attend(const ParamTree& params, std::string_view prefix, const Matrix& target,
                    const Matrix& guide, std::size_t T) {
    if (!target.same_shape(guide) || target.rows() != 1)
        throw std::invalid_argument("cross_attend: target/guide must be equal-length row vectors");
    const std::string p(prefix);
    const std::size_t d = token_width(target.cols(), T);
    const Matrix tt = tokenize(target, T);
    const Matrix tg = tokenize(guide, T);
    const Matrix q = matmul(tt, params.at(p + ".Wq"));
    const Matrix k = matmul(tg, params.at(p + ".Wk"));
    const Matrix v = matmul(tg, params.at(p + ".Wv"));
    const Matrix a = row_softmax(scale(matmul(q, transpose(k)), 1.0 / std::sqrt(double(d))));
    return flatten(matmul(a, v));
}

ad::Var cross_attend(ad::Tape& tape, const ad::TapeParams& tp, std::string_view prefix,
                     ad::Var target, ad::Var guide, std::size_t T) {
    const std::string p(prefix);
    const std::size_t N = tape.value(target).cols();
    const std::size_t d = token_width(N, T);
    ad::Var tt = tape.reshape(target, T, d);
    ad::Var tg = tape.reshape(guide, T, d);
    ad::Var q = tape.matmul(tt, tp.at(p + ".Wq"));
    ad::Var k = tape.matmul(tg, tp.at(p + ".Wk"));
    ad::Var v = tape.matmul(tg, tp.at(p + ".Wv"));
    ad::Var logits = tape.scale(tape.matmul(q, tape.transpose(k)), 1.0 / std::sqrt(double(d)));
    ad::Var a = tape.row_softmax(logits);
    return tape.reshape(tape.matmul(a, v), 1, N);
}

}  // namespace nh2st::attn
