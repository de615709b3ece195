#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nh2st/matrix.hpp"
#include "nh2st/param_tree.hpp"

namespace nh2st::ad {

/// Handle into a Tape; valid only for the tape that produced it.
using Var = std::int32_t;

/// Small reverse-mode accumulator over Matrix values. Each operation
/// records its inputs and a backward rule; backward() replays the rules in
/// reverse creation order, which is a topological order by construction.
/// Evaluation and accumulation orders are fixed, so gradients are bitwise
/// reproducible run to run.
class Tape {
public:
    /// Value that never receives a gradient (data, incidence structures).
    Var constant(Matrix v);
    /// Differentiated input (parameters, or inputs under grad test).
    Var leaf(Matrix v);

    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var scale(Var a, double c);
    Var relu(Var a);
    Var transpose(Var a);
    Var reshape(Var a, std::size_t rows, std::size_t cols);
    Var slice_row(Var a, std::size_t r);
    Var add_row_broadcast(Var a, Var bias);
    Var mean_rows(Var a);
    Var row_softmax(Var a);
    Var l2_normalize_rows(Var a);
    Var sum_sq(Var a);
    /// Mean squared difference to a fixed target, averaged over all entries.
    Var mse_const(Var pred, Matrix target);

    /// Escape hatch for fused nodes defined by other modules. The backward
    /// callback receives the output gradient and must accumulate into the
    /// parents via accum().
    Var custom(Matrix value, std::vector<Var> parents,
               std::function<void(Tape&, const Matrix& out_grad)> back);

    /// Seeds a 1x1 root with 1 and runs the reverse sweep.
    void backward(Var root);
    /// Seeds several outputs with externally supplied adjoints, then sweeps.
    void backward_seeded(std::span<const std::pair<Var, Matrix>> seeds);

    const Matrix& value(Var v) const { return nodes_[static_cast<std::size_t>(v)].value; }
    const Matrix& grad(Var v) const { return nodes_[static_cast<std::size_t>(v)].grad; }
    bool tracked(Var v) const { return nodes_[static_cast<std::size_t>(v)].tracked; }
    std::size_t size() const { return nodes_.size(); }

    /// grad(v) += g. Public for custom-node backward rules.
    void accum(Var v, const Matrix& g);

private:
    struct Node {
        Matrix value;
        Matrix grad;
        std::function<void(Tape&, const Matrix&)> back;
        bool tracked = false;
    };

    Var push(Matrix value, bool tracked, std::function<void(Tape&, const Matrix&)> back);
    void sweep();

    std::vector<Node> nodes_;
};

/// Parameter leaves registered on a tape, addressable by ParamTree path.
struct TapeParams {
    Tape* tape = nullptr;
    std::map<std::string, Var, std::less<>> vars;

    Var at(std::string_view path) const;
};

TapeParams register_leaves(Tape& tape, const ParamTree& params);
/// Gradients of every registered leaf, assembled in lexicographic order.
ParamTree collect_grads(const Tape& tape, const TapeParams& tp);

}  // namespace nh2st::ad
