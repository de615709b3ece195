#include "nh2st/tape.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace nh2st::ad {

Var Tape::push(Matrix value, bool tracked, std::function<void(Tape&, const Matrix&)> back) {
    Node n;
    n.grad = Matrix(value.rows(), value.cols());
    n.value = std::move(value);
    n.tracked = tracked;
    if (tracked) n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<Var>(nodes_.size() - 1);
}

void Tape::accum(Var v, const Matrix& g) {
    Matrix& dst = nodes_[static_cast<std::size_t>(v)].grad;
    if (!dst.same_shape(g)) throw std::invalid_argument("Tape::accum: shape mismatch");
    auto d = dst.data();
    auto s = g.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

Var Tape::constant(Matrix v) { return push(std::move(v), false, nullptr); }

Var Tape::leaf(Matrix v) {
    return push(std::move(v), true, [](Tape&, const Matrix&) {});
}

Var Tape::matmul(Var a, Var b) {
    Matrix v = nh2st::matmul(value(a), value(b));
    return push(std::move(v), tracked(a) || tracked(b), [a, b](Tape& t, const Matrix& g) {
        if (t.tracked(a)) t.accum(a, nh2st::matmul(g, nh2st::transpose(t.value(b))));
        if (t.tracked(b)) t.accum(b, nh2st::matmul(nh2st::transpose(t.value(a)), g));
    });
}

Var Tape::add(Var a, Var b) {
    Matrix v = nh2st::add(value(a), value(b));
    return push(std::move(v), tracked(a) || tracked(b), [a, b](Tape& t, const Matrix& g) {
        if (t.tracked(a)) t.accum(a, g);
        if (t.tracked(b)) t.accum(b, g);
    });
}

Var Tape::sub(Var a, Var b) {
    Matrix v = nh2st::sub(value(a), value(b));
    return push(std::move(v), tracked(a) || tracked(b), [a, b](Tape& t, const Matrix& g) {
        if (t.tracked(a)) t.accum(a, g);
        if (t.tracked(b)) t.accum(b, nh2st::scale(g, -1.0));
    });
}

Var Tape::scale(Var a, double c) {
    Matrix v = nh2st::scale(value(a), c);
    return push(std::move(v), tracked(a), [a, c](Tape& t, const Matrix& g) {
        if (t.tracked(a)) t.accum(a, nh2st::scale(g, c));
    });
}

Var Tape::relu(Var a) {
    Matrix v = nh2st::relu(value(a));
    return push(std::move(v), tracked(a), [a](Tape& t, const Matrix& g) {
        if (!t.tracked(a)) return;
        const Matrix& x = t.value(a);
        Matrix dx(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0 ? g[i] : 0.0;
        t.accum(a, dx);
    });
}

Var Tape::transpose(Var a) {
    Matrix v = nh2st::transpose(value(a));
    return push(std::move(v), tracked(a), [a](Tape& t, const Matrix& g) {
        if (t.tracked(a)) t.accum(a, nh2st::transpose(g));
    });
}

Var Tape::reshape(Var a, std::size_t rows, std::size_t cols) {
    const Matrix& x = value(a);
    if (rows * cols != x.size()) throw std::invalid_argument("Tape::reshape: size mismatch");
    Matrix v(rows, cols);
    std::copy(x.data().begin(), x.data().end(), v.data().begin());
    const std::size_t ar = x.rows(), ac = x.cols();
    return push(std::move(v), tracked(a), [a, ar, ac](Tape& t, const Matrix& g) {
        if (!t.tracked(a)) return;
        Matrix dx(ar, ac);
        std::copy(g.data().begin(), g.data().end(), dx.data().begin());
        t.accum(a, dx);
    });
}

Var Tape::slice_row(Var a, std::size_t r) {
    const Matrix& x = value(a);
    if (r >= x.rows()) throw std::invalid_argument("Tape::slice_row: row out of range");
    Matrix v = Matrix::row_vector(x.row(r));
    return push(std::move(v), tracked(a), [a, r](Tape& t, const Matrix& g) {
        if (!t.tracked(a)) return;
        const Matrix& x2 = t.value(a);
        Matrix dx(x2.rows(), x2.cols());
        std::copy(g.data().begin(), g.data().end(), dx.row(r).begin());
        t.accum(a, dx);
    });
}

Var Tape::add_row_broadcast(Var a, Var bias) {
    Matrix v = nh2st::add_row_broadcast(value(a), value(bias));
    return push(std::move(v), tracked(a) || tracked(bias), [a, bias](Tape& t, const Matrix& g) {
        if (t.tracked(a)) t.accum(a, g);
        if (t.tracked(bias)) t.accum(bias, nh2st::col_sums(g));
    });
}

Var Tape::mean_rows(Var a) {
    Matrix v = nh2st::mean_rows(value(a));
    const std::size_t r = value(a).rows();
    return push(std::move(v), tracked(a), [a, r](Tape& t, const Matrix& g) {
        if (!t.tracked(a)) return;
        Matrix dx(r, g.cols());
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) dx(i, j) = g(0, j) / static_cast<double>(r);
        t.accum(a, dx);
    });
}

Var Tape::row_softmax(Var a) {
    Matrix v = nh2st::row_softmax(value(a));
    Var self = push(std::move(v), tracked(a), nullptr);
    if (tracked(a)) {
        nodes_[static_cast<std::size_t>(self)].back = [a, self](Tape& t, const Matrix& g) {
            const Matrix& y = t.value(self);
            Matrix dx(y.rows(), y.cols());
            for (std::size_t i = 0; i < y.rows(); ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
                for (std::size_t j = 0; j < y.cols(); ++j) dx(i, j) = (g(i, j) - dot) * y(i, j);
            }
            t.accum(a, dx);
        };
    }
    return self;
}

Var Tape::l2_normalize_rows(Var a) {
    Matrix v = nh2st::l2_normalize_rows(value(a));
    Var self = push(std::move(v), tracked(a), nullptr);
    if (tracked(a)) {
        nodes_[static_cast<std::size_t>(self)].back = [a, self](Tape& t, const Matrix& g) {
            const Matrix& x = t.value(a);
            const Matrix& y = t.value(self);
            Matrix dx(x.rows(), x.cols());
            for (std::size_t i = 0; i < x.rows(); ++i) {
                double ss = 0.0;
                for (std::size_t j = 0; j < x.cols(); ++j) ss += x(i, j) * x(i, j);
                if (ss == 0.0) continue;  // zero rows stay zero; no gradient
                const double inv = 1.0 / std::sqrt(ss);
                double dot = 0.0;
                for (std::size_t j = 0; j < x.cols(); ++j) dot += g(i, j) * y(i, j);
                for (std::size_t j = 0; j < x.cols(); ++j)
                    dx(i, j) = (g(i, j) - dot * y(i, j)) * inv;
            }
            t.accum(a, dx);
        };
    }
    return self;
}

Var Tape::sum_sq(Var a) {
    Matrix v(1, 1);
    v[0] = nh2st::sum_sq(value(a));
    return push(std::move(v), tracked(a), [a](Tape& t, const Matrix& g) {
        if (t.tracked(a)) t.accum(a, nh2st::scale(t.value(a), 2.0 * g[0]));
    });
}

Var Tape::mse_const(Var pred, Matrix target) {
    const Matrix& p = value(pred);
    if (!p.same_shape(target)) throw std::invalid_argument("Tape::mse_const: shape mismatch");
    Matrix v(1, 1);
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p[i] - target[i];
        s += d * d;
    }
    v[0] = s / static_cast<double>(p.size());
    auto tgt = std::make_shared<Matrix>(std::move(target));
    return push(std::move(v), tracked(pred), [pred, tgt](Tape& t, const Matrix& g) {
        if (!t.tracked(pred)) return;
        const Matrix& p2 = t.value(pred);
        Matrix dx(p2.rows(), p2.cols());
        const double c = 2.0 * g[0] / static_cast<double>(p2.size());
        for (std::size_t i = 0; i < p2.size(); ++i) dx[i] = c * (p2[i] - (*tgt)[i]);
        t.accum(pred, dx);
    });
}

Var Tape::custom(Matrix value, std::vector<Var> parents,
                 std::function<void(Tape&, const Matrix&)> back) {
    bool tr = false;
    for (Var p : parents) tr = tr || tracked(p);
    return push(std::move(value), tr, std::move(back));
}

void Tape::sweep() {
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        Node& n = nodes_[i];
        if (n.tracked && n.back) n.back(*this, n.grad);
    }
}

void Tape::backward(Var root) {
    const Matrix& v = value(root);
    if (v.rows() != 1 || v.cols() != 1)
        throw std::invalid_argument("Tape::backward: root must be a 1x1 scalar");
    nodes_[static_cast<std::size_t>(root)].grad[0] = 1.0;
    sweep();
}

void Tape::backward_seeded(std::span<const std::pair<Var, Matrix>> seeds) {
    for (const auto& [v, g] : seeds) accum(v, g);
    sweep();
}

Var TapeParams::at(std::string_view path) const {
    auto it = vars.find(path);
    if (it == vars.end())
        throw std::out_of_range("TapeParams: no leaf '" + std::string(path) + "'");
    return it->second;
}

TapeParams register_leaves(Tape& tape, const ParamTree& params) {
    TapeParams tp;
    tp.tape = &tape;
    for (const auto& [path, m] : params) tp.vars.emplace(path, tape.leaf(m));
    return tp;
}

ParamTree collect_grads(const Tape& tape, const TapeParams& tp) {
    ParamTree g;
    for (const auto& [path, var] : tp.vars) g.insert(path, tape.grad(var));
    return g;
}

}  // namespace nh2st::ad
