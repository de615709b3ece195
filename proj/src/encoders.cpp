#include "nh2st/encoders.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace nh2st {

namespace enc {

namespace {

void add_mlp2(ParamTree& p, const std::string& prefix, std::size_t in, std::size_t hidden,
              std::size_t out) {
    p.insert(prefix + ".l1.W", Matrix(in, hidden));
    p.insert(prefix + ".l1.b", Matrix(1, hidden));
    p.insert(prefix + ".l2.W", Matrix(hidden, out));
    p.insert(prefix + ".l2.b", Matrix(1, out));
}

}  // namespace

void add_encoder_params(ParamTree& params, const ModelDims& dims) {
    add_mlp2(params, "patch_enc", dims.P, dims.hidden(), dims.N);
    add_mlp2(params, "gene_enc", dims.n, dims.hidden(), dims.N);
    add_mlp2(params, "translator", dims.N, dims.hidden(), dims.n);
}

Matrix mlp2_forward(const ParamTree& params, std::string_view prefix, const Matrix& rows) {
    const std::string p(prefix);
    const Matrix& w1 = params.at(p + ".l1.W");
    if (rows.cols() != w1.rows())
        throw std::invalid_argument(p + ": input width " + std::to_string(rows.cols()) +
                                    ", expected " + std::to_string(w1.rows()));
    Matrix h = relu(add_row_broadcast(matmul(rows, w1), params.at(p + ".l1.b")));
    return add_row_broadcast(matmul(h, params.at(p + ".l2.W")), params.at(p + ".l2.b"));
}

ad::Var mlp2_forward(ad::Tape& tape, const ad::TapeParams& tp, std::string_view prefix,
                     ad::Var rows) {
    const std::string p(prefix);
    ad::Var a1 = tape.add_row_broadcast(tape.matmul(rows, tp.at(p + ".l1.W")), tp.at(p + ".l1.b"));
    ad::Var h = tape.relu(a1);
    return tape.add_row_broadcast(tape.matmul(h, tp.at(p + ".l2.W")), tp.at(p + ".l2.b"));
}

Matrix encode_patch(const ParamTree& params, const Matrix& patch_rows) {
    return mlp2_forward(params, "patch_enc", patch_rows);
}

Matrix encode_genes(const ParamTree& params, const Matrix& expr_rows) {
    return mlp2_forward(params, "gene_enc", expr_rows);
}

Matrix translate(const ParamTree& params, const Matrix& embedding_rows) {
    return mlp2_forward(params, "translator", embedding_rows);
}

namespace {

void check_shape(const ParamTree& p, const std::string& path, std::size_t rows,
                 std::size_t cols) {
    const Matrix& m = p.at(path);
    if (m.rows() != rows || m.cols() != cols)
        throw std::invalid_argument("params: '" + path + "' is " + std::to_string(m.rows()) +
                                    "x" + std::to_string(m.cols()) + ", expected " +
                                    std::to_string(rows) + "x" + std::to_string(cols));
}

void check_mlp2(const ParamTree& p, const std::string& prefix, std::size_t in, std::size_t hidden,
                std::size_t out) {
    check_shape(p, prefix + ".l1.W", in, hidden);
    check_shape(p, prefix + ".l1.b", 1, hidden);
    check_shape(p, prefix + ".l2.W", hidden, out);
    check_shape(p, prefix + ".l2.b", 1, out);
}

}  // namespace

void validate_params(const ParamTree& params, const ModelDims& dims) {
    check_mlp2(params, "patch_enc", dims.P, dims.hidden(), dims.N);
    check_mlp2(params, "gene_enc", dims.n, dims.hidden(), dims.N);
    check_mlp2(params, "translator", dims.N, dims.hidden(), dims.n);
}

}  // namespace enc

void init_params_inplace(ParamTree& params, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (auto& [path, m] : params) {
        if (path.size() >= 2 && path.compare(path.size() - 2, 2, ".b") == 0) {
            for (double& v : m.data()) v = 0.0;
            continue;
        }
        const double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& v : m.data()) v = dist(rng);
    }
}

}  // namespace nh2st
