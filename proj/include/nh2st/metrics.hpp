#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nh2st/dataset.hpp"
#include "nh2st/matrix.hpp"
#include "nh2st/training.hpp"

namespace nh2st {

struct EvalResult {
    double mse = 0.0;
    double mae = 0.0;
    double pcc = 0.0;                  // mean of per_gene_pcc
    std::vector<double> per_gene_pcc;  // across spots, one per gene
};

/// MSE/MAE over all entries; Pearson correlation per gene across spots,
/// then averaged. A gene with zero variance in either side contributes 0.
/// Requires at least two rows.
EvalResult compute_metrics(const Matrix& pred, const Matrix& label);

struct FoldStats {
    double mean = 0.0;
    double stddev = 0.0;  // population std over folds
};

struct CrossValReport {
    std::vector<std::array<double, 3>> fold_values;  // (mse, mae, pcc) per fold
    FoldStats mse, mae, pcc;

    std::string to_csv() const;  // fold rows plus a mean±std summary row
};

/// Trains k models with fresh per-fold seeded initialization and evaluates
/// each on its held-out fold via the inference path.
CrossValReport cross_validate(const STDataset& ds, const TrainConfig& cfg, std::size_t k,
                              std::uint64_t seed);

}  // namespace nh2st
