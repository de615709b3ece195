#include "nh2st/hypergraph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace nh2st::hg {

Matrix build_hyperedges(const Matrix& X, std::size_t tau_deg) {
    const std::size_t V = X.rows();
    if (V == 0) throw std::invalid_argument("build_hyperedges: empty feature matrix");
    if (tau_deg < 1 || tau_deg > V)
        throw std::invalid_argument("build_hyperedges: tau_deg=" + std::to_string(tau_deg) +
                                    " out of range for V=" + std::to_string(V));
    Matrix H(V, V);
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t j = 0; j < V; ++j) {
        H(j, j) = 1.0;  // seed node
        if (tau_deg == 1) continue;
        ranked.clear();
        for (std::size_t k = 0; k < V; ++k) {
            if (k == j) continue;
            ranked.emplace_back(cosine_sim(X.row(j), X.row(k)), k);
        }
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (std::size_t r = 0; r < tau_deg - 1; ++r) H(ranked[r].second, j) = 1.0;
    }
    return H;
}

HyperGraph make_hypergraph(Matrix X, std::size_t tau_deg) {
    HyperGraph g;
    g.H = build_hyperedges(X, tau_deg);
    g.X = std::move(X);
    const std::size_t V = g.H.rows();
    g.dv.assign(V, 0.0);
    g.de.assign(V, 0.0);
    for (std::size_t v = 0; v < V; ++v)
        for (std::size_t e = 0; e < V; ++e) {
            g.dv[v] += g.H(v, e);
            g.de[e] += g.H(v, e);
        }
    return g;
}

Matrix hgnn_propagation(const Matrix& H) {
    const std::size_t V = H.rows(), E = H.cols();
    std::vector<double> dv(V, 0.0), de(E, 0.0);
    for (std::size_t v = 0; v < V; ++v)
        for (std::size_t e = 0; e < E; ++e) {
            dv[v] += H(v, e);
            de[e] += H(v, e);
        }
    for (std::size_t v = 0; v < V; ++v)
        if (dv[v] == 0.0)
            throw std::invalid_argument("hgnn_propagation: node " + std::to_string(v) +
                                        " has zero degree");
    for (std::size_t e = 0; e < E; ++e)
        if (de[e] == 0.0)
            throw std::invalid_argument("hgnn_propagation: hyperedge " + std::to_string(e) +
                                        " has zero degree");
    Matrix G(V, V);
    for (std::size_t i = 0; i < V; ++i)
        for (std::size_t j = 0; j < V; ++j) {
            double s = 0.0;
            for (std::size_t e = 0; e < E; ++e) s += H(i, e) * H(j, e) / de[e];
            G(i, j) = s / (std::sqrt(dv[i]) * std::sqrt(dv[j]));
        }
    return G;
}

Matrix hgnn_layer(const Matrix& H, const Matrix& X, const Matrix& theta, bool last) {
    const Matrix G = hgnn_propagation(H);
    Matrix out = matmul(G, matmul(X, theta));
    return last ? out : relu(out);
}

void add_hgnn_params(ParamTree& params, const std::string& prefix, std::size_t N, std::size_t L) {
    if (L < 1) throw std::invalid_argument("add_hgnn_params: L must be at least 1");
    for (std::size_t l = 1; l <= L; ++l)
        params.insert(prefix + ".l" + std::to_string(l) + ".W", Matrix(N, N));
}

Matrix hgnn_forward(const ParamTree& params, std::string_view prefix, const Matrix& H,
                    const Matrix& X, std::size_t L) {
    if (L < 1) throw std::invalid_argument("hgnn_forward: L must be at least 1");
    const std::string p(prefix);
    Matrix x = X;
    for (std::size_t l = 1; l <= L; ++l)
        x = hgnn_layer(H, x, params.at(p + ".l" + std::to_string(l) + ".W"), l == L);
    return mean_rows(x);
}

ad::Var hgnn_forward(ad::Tape& tape, const ad::TapeParams& tp, std::string_view prefix,
                     const Matrix& H, ad::Var X, std::size_t L) {
    if (L < 1) throw std::invalid_argument("hgnn_forward: L must be at least 1");
    const std::string p(prefix);
    ad::Var g = tape.constant(hgnn_propagation(H));
    ad::Var x = X;
    for (std::size_t l = 1; l <= L; ++l) {
        x = tape.matmul(g, tape.matmul(x, tp.at(p + ".l" + std::to_string(l) + ".W")));
        if (l != L) x = tape.relu(x);
    }
    return tape.mean_rows(x);
}

}  // namespace nh2st::hg
