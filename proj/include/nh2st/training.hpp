#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nh2st/dataset.hpp"
#include "nh2st/encoders.hpp"
#include "nh2st/io_util.hpp"
#include "nh2st/matrix.hpp"
#include "nh2st/param_tree.hpp"

namespace nh2st {

/// Every tunable of the model and its optimization. TOML config files use
/// exactly these field names as keys.
struct TrainConfig {
    std::size_t N = 64;        // embedding width
    std::size_t P = 128;       // patch feature length
    std::size_t n = 32;        // gene count
    std::size_t T = 8;         // tokens per embedding (must divide N)
    std::size_t K = 8;         // spatial neighbors
    std::size_t L = 2;         // HGNN layers
    std::size_t tau_deg = 3;   // hyperedge degree
    double tau_temp = 0.05;    // InfoNCE temperature
    double lambda1 = 1.0;      // weight of the query contrastive term
    double lambda2 = 0.5;      // weight of the neighbor contrastive term
    double lr = 1e-4;
    double decay_rate = 0.9;
    std::size_t step_size = 50;
    std::string step_unit = "epoch";  // decay counter unit: "epoch" or "step"
    std::size_t batch_size = 8;
    std::size_t epochs = 20;
    std::uint64_t seed = 7;

    ModelDims dims() const;
    void validate() const;
};

TrainConfig train_config_from_toml(const io::TomlTable& t,
                                   std::span<const std::string> extra_allowed = {});
io::TomlTable train_config_to_toml(const TrainConfig& cfg);

/// Mean of squared entrywise differences over the whole batch.
double mse_loss(const Matrix& pred, const Matrix& label);

struct BatchLosses {
    double ls = 0.0;   // query-level contrastive term
    double ln = 0.0;   // neighbor-level contrastive term
    double mse = 0.0;  // translator regression term
    double total = 0.0;
};

/// Precomputed K nearest spatial neighbors per spot (coordinates are
/// static, so this is done once per dataset).
using NeighborTable = std::vector<std::vector<std::size_t>>;
NeighborTable build_neighbor_table(const STDataset& ds, std::size_t K);

/// All parameters of both branches, freshly initialized from cfg.seed.
ParamTree init_model_params(const TrainConfig& cfg);

/// Full dual-branch forward over one batch of spot indices; returns the
/// loss terms and total = lambda1*ls + lambda2*ln + mse.
BatchLosses forward_batch(const ParamTree& params, const TrainConfig& cfg, const STDataset& ds,
                          std::span<const std::size_t> batch, const NeighborTable& neighbors);
/// Forward plus reverse pass; gradients are reduced over the batch in
/// fixed spot order, so results are bitwise identical at any thread count.
std::pair<BatchLosses, ParamTree> forward_backward_batch(const ParamTree& params,
                                                         const TrainConfig& cfg,
                                                         const STDataset& ds,
                                                         std::span<const std::size_t> batch,
                                                         const NeighborTable& neighbors);

struct AdamState {
    ParamTree m;
    ParamTree v;
    std::size_t t = 0;

    static AdamState init(const ParamTree& params);
};

/// Standard Adam (beta1 0.9, beta2 0.999, eps 1e-8) with bias correction.
/// Rejects non-finite gradients before touching any state.
void adam_step(AdamState& state, ParamTree& params, const ParamTree& grads, double lr);

/// lr * decay_rate^floor(step_count / step_size); step_count is in the
/// unit named by cfg.step_unit.
double lr_at(std::size_t step_count, const TrainConfig& cfg);

struct EpochRow {
    std::size_t epoch = 0;
    double total = 0.0, ls = 0.0, ln = 0.0, mse = 0.0, lr = 0.0;
};

struct TrainReport {
    std::vector<EpochRow> epochs;

    std::string to_csv() const;  // header: epoch,total,ls,ln,mse,lr
};

/// Full training loop: seeded shuffle each epoch, fixed-size batches with
/// a trailing batch kept only when it has at least two spots, Adam with
/// the step-decay schedule. params_out receives the final parameters.
TrainReport train(const STDataset& ds, const TrainConfig& cfg, ParamTree& params_out);

/// Inference path: translator applied to the encoded patch. Touches only
/// patch_enc.* and translator.* parameters; gene data, neighbors and
/// attention weights play no part.
Matrix predict(const ParamTree& params, const TrainConfig& cfg, const Matrix& patch_row);

}  // namespace nh2st
