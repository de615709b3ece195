#include "nh2st/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "nh2st/io_util.hpp"

namespace nh2st {

EvalResult compute_metrics(const Matrix& pred, const Matrix& label) {
    if (!pred.same_shape(label)) throw std::invalid_argument("compute_metrics: shape mismatch");
    if (pred.rows() < 2)
        throw std::invalid_argument("compute_metrics: need at least 2 rows for correlation");
    const std::size_t M = pred.rows(), n = pred.cols();

    EvalResult r;
    double se = 0.0, ae = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - label[i];
        se += d * d;
        ae += std::abs(d);
    }
    r.mse = se / static_cast<double>(pred.size());
    r.mae = ae / static_cast<double>(pred.size());

    r.per_gene_pcc.resize(n);
    for (std::size_t g = 0; g < n; ++g) {
        double mp = 0.0, ml = 0.0;
        for (std::size_t i = 0; i < M; ++i) {
            mp += pred(i, g);
            ml += label(i, g);
        }
        mp /= static_cast<double>(M);
        ml /= static_cast<double>(M);
        double cov = 0.0, vp = 0.0, vl = 0.0;
        for (std::size_t i = 0; i < M; ++i) {
            const double dp = pred(i, g) - mp, dl = label(i, g) - ml;
            cov += dp * dl;
            vp += dp * dp;
            vl += dl * dl;
        }
        r.per_gene_pcc[g] = (vp == 0.0 || vl == 0.0) ? 0.0 : cov / std::sqrt(vp * vl);
    }
    double sum = 0.0;
    for (double v : r.per_gene_pcc) sum += v;
    r.pcc = sum / static_cast<double>(n);
    return r;
}

namespace {

FoldStats fold_stats(const std::vector<std::array<double, 3>>& folds, std::size_t col) {
    FoldStats s;
    const auto k = static_cast<double>(folds.size());
    for (const auto& f : folds) s.mean += f[col];
    s.mean /= k;
    double var = 0.0;
    for (const auto& f : folds) var += (f[col] - s.mean) * (f[col] - s.mean);
    s.stddev = std::sqrt(var / k);
    return s;
}

}  // namespace

std::string CrossValReport::to_csv() const {
    std::string out = "fold,mse,mae,pcc\n";
    for (std::size_t f = 0; f < fold_values.size(); ++f) {
        out += std::to_string(f) + "," + io::format_double(fold_values[f][0]) + "," +
               io::format_double(fold_values[f][1]) + "," + io::format_double(fold_values[f][2]) +
               "\n";
    }
    out += "summary," + io::format_double(mse.mean) + "±" + io::format_double(mse.stddev) + "," +
           io::format_double(mae.mean) + "±" + io::format_double(mae.stddev) + "," +
           io::format_double(pcc.mean) + "±" + io::format_double(pcc.stddev) + "\n";
    return out;
}

CrossValReport cross_validate(const STDataset& ds, const TrainConfig& cfg, std::size_t k,
                              std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("cross_validate: k must be at least 2");
    const FoldSplit split = kfold_split(ds, k, seed);

    CrossValReport report;
    for (std::size_t f = 0; f < k; ++f) {
        const auto train_idx = split.complement_indices(f);
        const auto test_idx = split.fold_indices(f);
        const STDataset train_ds = subset(ds, train_idx);
        const STDataset test_ds = subset(ds, test_idx);

        TrainConfig fold_cfg = cfg;
        fold_cfg.seed = seed ^ (0x9E3779B97F4A7C15ULL * (f + 1));  // fresh init per fold
        ParamTree params;
        train(train_ds, fold_cfg, params);

        Matrix pred(test_ds.spot_count(), cfg.n);
        for (std::size_t i = 0; i < test_ds.spot_count(); ++i) {
            const Matrix y =
                predict(params, fold_cfg, Matrix::row_vector(test_ds.spots[i].patch));
            std::copy(y.data().begin(), y.data().end(), pred.row(i).begin());
        }
        const EvalResult r = compute_metrics(pred, test_ds.expr_matrix());
        report.fold_values.push_back({r.mse, r.mae, r.pcc});
    }
    report.mse = fold_stats(report.fold_values, 0);
    report.mae = fold_stats(report.fold_values, 1);
    report.pcc = fold_stats(report.fold_values, 2);
    return report;
}

}  // namespace nh2st
