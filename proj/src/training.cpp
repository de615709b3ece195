#include "nh2st/training.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <stdexcept>

#include "nh2st/attention.hpp"
#include "nh2st/contrastive.hpp"
#include "nh2st/hypergraph.hpp"
#include "nh2st/tape.hpp"

namespace nh2st {

ModelDims TrainConfig::dims() const { return ModelDims{N, P, n, T, L, tau_deg}; }

void TrainConfig::validate() const {
    if (N == 0 || P == 0 || n == 0 || T == 0 || K == 0 || L == 0 || tau_deg == 0 ||
        step_size == 0 || batch_size == 0)
        throw std::invalid_argument("TrainConfig: counts must be positive");
    if (N % T != 0) throw std::invalid_argument("TrainConfig: T must divide N");
    if (!(tau_temp > 0.0)) throw std::invalid_argument("TrainConfig: tau_temp must be positive");
    if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be positive");
    if (!(decay_rate > 0.0)) throw std::invalid_argument("TrainConfig: decay_rate must be positive");
    if (lambda1 < 0.0 || lambda2 < 0.0)
        throw std::invalid_argument("TrainConfig: loss weights must be nonnegative");
    if (tau_deg > K + 1)
        throw std::invalid_argument("TrainConfig: tau_deg cannot exceed K+1 hypergraph nodes");
    if (step_unit != "epoch" && step_unit != "step")
        throw std::invalid_argument("TrainConfig: step_unit must be 'epoch' or 'step'");
}

namespace {

constexpr const char* kConfigKeys[] = {"N",       "P",          "n",         "T",
                                       "K",       "L",          "tau_deg",   "tau_temp",
                                       "lambda1", "lambda2",    "lr",        "decay_rate",
                                       "step_size", "step_unit", "batch_size", "epochs",
                                       "seed"};

std::size_t get_count(const io::TomlTable& t, std::string_view key) {
    const std::int64_t v = t.get_int(key);
    if (v < 0) throw std::runtime_error("config: key '" + std::string(key) + "' must be >= 0");
    return static_cast<std::size_t>(v);
}

}  // namespace

TrainConfig train_config_from_toml(const io::TomlTable& t,
                                   std::span<const std::string> extra_allowed) {
    for (const auto& key : t.keys()) {
        const bool known = std::find(std::begin(kConfigKeys), std::end(kConfigKeys), key) !=
                           std::end(kConfigKeys);
        const bool extra = std::find(extra_allowed.begin(), extra_allowed.end(), key) !=
                           extra_allowed.end();
        if (!known && !extra) throw std::runtime_error("config: unknown key '" + key + "'");
    }
    TrainConfig cfg;
    if (t.contains("N")) cfg.N = get_count(t, "N");
    if (t.contains("P")) cfg.P = get_count(t, "P");
    if (t.contains("n")) cfg.n = get_count(t, "n");
    if (t.contains("T")) cfg.T = get_count(t, "T");
    if (t.contains("K")) cfg.K = get_count(t, "K");
    if (t.contains("L")) cfg.L = get_count(t, "L");
    if (t.contains("tau_deg")) cfg.tau_deg = get_count(t, "tau_deg");
    if (t.contains("tau_temp")) cfg.tau_temp = t.get_double("tau_temp");
    if (t.contains("lambda1")) cfg.lambda1 = t.get_double("lambda1");
    if (t.contains("lambda2")) cfg.lambda2 = t.get_double("lambda2");
    if (t.contains("lr")) cfg.lr = t.get_double("lr");
    if (t.contains("decay_rate")) cfg.decay_rate = t.get_double("decay_rate");
    if (t.contains("step_size")) cfg.step_size = get_count(t, "step_size");
    if (t.contains("step_unit")) cfg.step_unit = t.get_string("step_unit");
    if (t.contains("batch_size")) cfg.batch_size = get_count(t, "batch_size");
    if (t.contains("epochs")) cfg.epochs = get_count(t, "epochs");
    if (t.contains("seed")) cfg.seed = static_cast<std::uint64_t>(t.get_int("seed"));
    return cfg;
}

io::TomlTable train_config_to_toml(const TrainConfig& cfg) {
    io::TomlTable t;
    t.set("N", static_cast<std::int64_t>(cfg.N));
    t.set("P", static_cast<std::int64_t>(cfg.P));
    t.set("n", static_cast<std::int64_t>(cfg.n));
    t.set("T", static_cast<std::int64_t>(cfg.T));
    t.set("K", static_cast<std::int64_t>(cfg.K));
    t.set("L", static_cast<std::int64_t>(cfg.L));
    t.set("tau_deg", static_cast<std::int64_t>(cfg.tau_deg));
    t.set("tau_temp", cfg.tau_temp);
    t.set("lambda1", cfg.lambda1);
    t.set("lambda2", cfg.lambda2);
    t.set("lr", cfg.lr);
    t.set("decay_rate", cfg.decay_rate);
    t.set("step_size", static_cast<std::int64_t>(cfg.step_size));
    t.set("step_unit", cfg.step_unit);
    t.set("batch_size", static_cast<std::int64_t>(cfg.batch_size));
    t.set("epochs", static_cast<std::int64_t>(cfg.epochs));
    t.set("seed", static_cast<std::int64_t>(cfg.seed));
    return t;
}

double mse_loss(const Matrix& pred, const Matrix& label) {
    if (!pred.same_shape(label)) throw std::invalid_argument("mse_loss: shape mismatch");
    if (pred.size() == 0) throw std::invalid_argument("mse_loss: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - label[i];
        s += d * d;
    }
    return s / static_cast<double>(pred.size());
}

NeighborTable build_neighbor_table(const STDataset& ds, std::size_t K) {
    NeighborTable t(ds.spot_count());
    for (std::size_t i = 0; i < ds.spot_count(); ++i) t[i] = knn_spatial(ds, i, K);
    return t;
}

ParamTree init_model_params(const TrainConfig& cfg) {
    cfg.validate();
    const ModelDims dims = cfg.dims();
    ParamTree params;
    enc::add_encoder_params(params, dims);
    attn::add_cross_attn_params(params, "query.ca.p2g", dims.N, dims.T);
    attn::add_cross_attn_params(params, "query.ca.g2p", dims.N, dims.T);
    attn::add_cross_attn_params(params, "nbr.ca.p2g", dims.N, dims.T);
    attn::add_cross_attn_params(params, "nbr.ca.g2p", dims.N, dims.T);
    hg::add_hgnn_params(params, "nbr.hgnn.p", dims.N, dims.L);
    hg::add_hgnn_params(params, "nbr.hgnn.g", dims.N, dims.L);
    init_params_inplace(params, cfg.seed);
    return params;
}

namespace {

// Everything one spot contributes before the batch-level losses couple the
// rows: both encoders over the spot and its neighborhood, the per-spot
// cross-attentions, the two hypergraph embeddings and the translator
// output. Each spot owns a tape so the batch loop can run in parallel.
struct SpotGraph {
    ad::Tape tape;
    ad::TapeParams tp;
    ad::Var z_p_s{}, z_g_s{}, z_p_n{}, z_g_n{}, y_hat{};
};

std::unique_ptr<SpotGraph> build_spot_graph(const ParamTree& params, const TrainConfig& cfg,
                                            const STDataset& ds, std::size_t spot,
                                            std::span<const std::size_t> nbr) {
    auto g = std::make_unique<SpotGraph>();
    g->tp = ad::register_leaves(g->tape, params);
    auto& tape = g->tape;

    const std::size_t V = nbr.size() + 1;
    Matrix nodes_patch(V, cfg.P), nodes_expr(V, cfg.n);
    auto fill_node = [&](std::size_t row, std::size_t idx) {
        const SpotRecord& r = ds.spots[idx];
        std::copy(r.patch.begin(), r.patch.end(), nodes_patch.row(row).begin());
        std::copy(r.expr.begin(), r.expr.end(), nodes_expr.row(row).begin());
    };
    fill_node(0, spot);
    for (std::size_t j = 0; j < nbr.size(); ++j) fill_node(j + 1, nbr[j]);

    ad::Var xp = enc::mlp2_forward(tape, g->tp, "patch_enc", tape.constant(nodes_patch));
    ad::Var xg = enc::mlp2_forward(tape, g->tp, "gene_enc", tape.constant(nodes_expr));
    ad::Var h_p = tape.slice_row(xp, 0);
    ad::Var h_g = tape.slice_row(xg, 0);

    g->z_p_s = attn::cross_attend(tape, g->tp, "query.ca.p2g", h_p, h_g, cfg.T);
    g->z_g_s = attn::cross_attend(tape, g->tp, "query.ca.g2p", h_g, h_p, cfg.T);
    g->y_hat = enc::mlp2_forward(tape, g->tp, "translator", h_p);

    const Matrix h_patch = hg::build_hyperedges(tape.value(xp), cfg.tau_deg);
    const Matrix h_gene = hg::build_hyperedges(tape.value(xg), cfg.tau_deg);
    ad::Var h_p_n = hg::hgnn_forward(tape, g->tp, "nbr.hgnn.p", h_patch, xp, cfg.L);
    ad::Var h_g_n = hg::hgnn_forward(tape, g->tp, "nbr.hgnn.g", h_gene, xg, cfg.L);
    g->z_p_n = attn::cross_attend(tape, g->tp, "nbr.ca.p2g", h_p_n, h_g_n, cfg.T);
    g->z_g_n = attn::cross_attend(tape, g->tp, "nbr.ca.g2p", h_g_n, h_p_n, cfg.T);
    return g;
}

struct BatchResult {
    BatchLosses losses;
    ParamTree grads;
};

BatchResult run_batch(const ParamTree& params, const TrainConfig& cfg, const STDataset& ds,
                      std::span<const std::size_t> batch, const NeighborTable& neighbors,
                      bool with_grads) {
    cfg.validate();
    if (batch.empty()) throw std::invalid_argument("forward_batch: empty batch");
    if (ds.patch_dim != cfg.P || ds.gene_count() != cfg.n)
        throw std::invalid_argument("forward_batch: dataset dimensions do not match config");
    const std::size_t B = batch.size(), N = cfg.N, n = cfg.n;

    std::vector<std::unique_ptr<SpotGraph>> spots(B);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(B); ++i) {
        const std::size_t idx = batch[static_cast<std::size_t>(i)];
        spots[static_cast<std::size_t>(i)] =
            build_spot_graph(params, cfg, ds, idx, neighbors.at(idx));
    }

    auto stack = [&](ad::Var SpotGraph::* field, std::size_t width) {
        Matrix m(B, width);
        for (std::size_t i = 0; i < B; ++i) {
            const Matrix& v = spots[i]->tape.value(spots[i].get()->*field);
            std::copy(v.data().begin(), v.data().end(), m.row(i).begin());
        }
        return m;
    };

    Matrix labels(B, n);
    for (std::size_t i = 0; i < B; ++i) {
        const auto& expr = ds.spots[batch[i]].expr;
        std::copy(expr.begin(), expr.end(), labels.row(i).begin());
    }

    ad::Tape master;
    ad::Var zps = master.leaf(stack(&SpotGraph::z_p_s, N));
    ad::Var zgs = master.leaf(stack(&SpotGraph::z_g_s, N));
    ad::Var zpn = master.leaf(stack(&SpotGraph::z_p_n, N));
    ad::Var zgn = master.leaf(stack(&SpotGraph::z_g_n, N));
    ad::Var yhat = master.leaf(stack(&SpotGraph::y_hat, n));

    ad::Var ls = nce::info_nce(master, zps, zgs, cfg.tau_temp);
    ad::Var ln = nce::info_nce(master, zpn, zgn, cfg.tau_temp);
    ad::Var mse = master.mse_const(yhat, labels);
    ad::Var total =
        master.add(master.add(master.scale(ls, cfg.lambda1), master.scale(ln, cfg.lambda2)), mse);

    BatchResult result;
    result.losses = {master.value(ls)[0], master.value(ln)[0], master.value(mse)[0],
                     master.value(total)[0]};
    if (!with_grads) return result;

    master.backward(total);

    const Matrix& d_zps = master.grad(zps);
    const Matrix& d_zgs = master.grad(zgs);
    const Matrix& d_zpn = master.grad(zpn);
    const Matrix& d_zgn = master.grad(zgn);
    const Matrix& d_yhat = master.grad(yhat);

#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(B); ++i) {
        auto& g = *spots[static_cast<std::size_t>(i)];
        const auto r = static_cast<std::size_t>(i);
        const std::pair<ad::Var, Matrix> seeds[] = {
            {g.z_p_s, Matrix::row_vector(d_zps.row(r))},
            {g.z_g_s, Matrix::row_vector(d_zgs.row(r))},
            {g.z_p_n, Matrix::row_vector(d_zpn.row(r))},
            {g.z_g_n, Matrix::row_vector(d_zgn.row(r))},
            {g.y_hat, Matrix::row_vector(d_yhat.row(r))},
        };
        g.tape.backward_seeded(seeds);
    }

    // Fixed spot-order reduction keeps gradients bitwise reproducible.
    result.grads = ParamTree::zeros_like(params);
    for (std::size_t i = 0; i < B; ++i)
        result.grads.accumulate(ad::collect_grads(spots[i]->tape, spots[i]->tp));
    return result;
}

}  // namespace

BatchLosses forward_batch(const ParamTree& params, const TrainConfig& cfg, const STDataset& ds,
                          std::span<const std::size_t> batch, const NeighborTable& neighbors) {
    return run_batch(params, cfg, ds, batch, neighbors, false).losses;
}

std::pair<BatchLosses, ParamTree> forward_backward_batch(const ParamTree& params,
                                                         const TrainConfig& cfg,
                                                         const STDataset& ds,
                                                         std::span<const std::size_t> batch,
                                                         const NeighborTable& neighbors) {
    BatchResult r = run_batch(params, cfg, ds, batch, neighbors, true);
    return {r.losses, std::move(r.grads)};
}

AdamState AdamState::init(const ParamTree& params) {
    AdamState s;
    s.m = ParamTree::zeros_like(params);
    s.v = ParamTree::zeros_like(params);
    return s;
}

void adam_step(AdamState& state, ParamTree& params, const ParamTree& grads, double lr) {
    if (!params.same_structure(grads) || !params.same_structure(state.m))
        throw std::invalid_argument("adam_step: structure mismatch");
    for (const auto& [path, g] : grads)
        if (!g.all_finite())
            throw std::runtime_error("adam_step: non-finite gradient in '" + path + "'");

    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    state.t += 1;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    auto pit = params.begin();
    auto mit = state.m.begin();
    auto vit = state.v.begin();
    auto git = grads.begin();
    for (; pit != params.end(); ++pit, ++mit, ++vit, ++git) {
        auto p = pit->second.data();
        auto m = mit->second.data();
        auto v = vit->second.data();
        auto g = git->second.data();
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
        }
    }
}

double lr_at(std::size_t step_count, const TrainConfig& cfg) {
    return cfg.lr * std::pow(cfg.decay_rate, static_cast<double>(step_count / cfg.step_size));
}

std::string TrainReport::to_csv() const {
    std::string out = "epoch,total,ls,ln,mse,lr\n";
    for (const auto& r : epochs) {
        out += std::to_string(r.epoch) + "," + io::format_double(r.total) + "," +
               io::format_double(r.ls) + "," + io::format_double(r.ln) + "," +
               io::format_double(r.mse) + "," + io::format_double(r.lr) + "\n";
    }
    return out;
}

TrainReport train(const STDataset& ds, const TrainConfig& cfg, ParamTree& params_out) {
    cfg.validate();
    if (!ds.normalized) throw std::invalid_argument("train: dataset must be normalized first");
    if (ds.patch_dim != cfg.P)
        throw std::invalid_argument("train: dataset P=" + std::to_string(ds.patch_dim) +
                                    " does not match config P=" + std::to_string(cfg.P));
    if (ds.gene_count() != cfg.n)
        throw std::invalid_argument("train: dataset n=" + std::to_string(ds.gene_count()) +
                                    " does not match config n=" + std::to_string(cfg.n));
    if (ds.spot_count() <= cfg.K)
        throw std::invalid_argument("train: need more than K spots");

    const NeighborTable neighbors = build_neighbor_table(ds, cfg.K);
    params_out = init_model_params(cfg);
    AdamState opt = AdamState::init(params_out);

    std::mt19937_64 shuffle_rng(cfg.seed);
    std::vector<std::size_t> order(ds.spot_count());
    std::iota(order.begin(), order.end(), 0);

    TrainReport report;
    std::size_t global_step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        EpochRow row;
        row.epoch = epoch;
        std::size_t batches = 0;
        double lr_used = lr_at(cfg.step_unit == "epoch" ? epoch : global_step, cfg);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, order.size() - start);
            if (len < 2) break;  // a single leftover spot has no contrastive pairing
            const std::span<const std::size_t> batch(order.data() + start, len);
            auto [losses, grads] = forward_backward_batch(params_out, cfg, ds, batch, neighbors);
            if (!std::isfinite(losses.ls))
                throw std::runtime_error("train: non-finite contrastive loss ls at epoch " +
                                         std::to_string(epoch));
            if (!std::isfinite(losses.ln))
                throw std::runtime_error("train: non-finite contrastive loss ln at epoch " +
                                         std::to_string(epoch));
            if (!std::isfinite(losses.mse))
                throw std::runtime_error("train: non-finite mse loss at epoch " +
                                         std::to_string(epoch));
            lr_used = lr_at(cfg.step_unit == "epoch" ? epoch : global_step, cfg);
            adam_step(opt, params_out, grads, lr_used);
            ++global_step;
            row.total += losses.total;
            row.ls += losses.ls;
            row.ln += losses.ln;
            row.mse += losses.mse;
            ++batches;
        }
        if (batches > 0) {
            row.total /= static_cast<double>(batches);
            row.ls /= static_cast<double>(batches);
            row.ln /= static_cast<double>(batches);
            row.mse /= static_cast<double>(batches);
        }
        row.lr = lr_used;
        report.epochs.push_back(row);
    }
    return report;
}

Matrix predict(const ParamTree& params, const TrainConfig& cfg, const Matrix& patch_row) {
    if (patch_row.rows() != 1 || patch_row.cols() != cfg.P)
        throw std::invalid_argument("predict: expected a 1x" + std::to_string(cfg.P) +
                                    " patch row");
    return enc::translate(params, enc::encode_patch(params, patch_row));
}

}  // namespace nh2st
