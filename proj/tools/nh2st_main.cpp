// Command-line front end: dataset synthesis, training, k-fold evaluation,
// prediction, ablation grids and heatmap export. Every command is seeded
// and writes timestamp-free artifacts, so identical invocations produce
// bitwise-identical files.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nh2st/dataset.hpp"
#include "nh2st/io_util.hpp"
#include "nh2st/metrics.hpp"
#include "nh2st/param_tree.hpp"
#include "nh2st/synth.hpp"
#include "nh2st/training.hpp"

namespace fs = std::filesystem;
using namespace nh2st;

namespace {

constexpr const char* kConfigFileName = "config.toml";
constexpr const char* kCheckpointFileName = "params.ckpt";
const std::string kTopGenesKey = "top_genes";

struct PipelineOptions {
    std::string data_dir;
    std::size_t top_genes = 0;  // 0 = keep every gene
};

/// Load, apply top-gene selection (log1p included); top_genes = 0 keeps
/// all genes.
STDataset load_normalized(const PipelineOptions& opt) {
    STDataset raw = load_dataset(opt.data_dir);
    const std::size_t n = opt.top_genes == 0 ? raw.gene_count() : opt.top_genes;
    return select_top_genes(raw, n);
}

struct TrainFlagBindings {
    // Optional so that explicit flags can override config-file values.
    std::optional<std::int64_t> N, P, n, T, K, L, tau_deg, step_size, batch_size, epochs, seed;
    std::optional<double> tau_temp, lambda1, lambda2, lr, decay_rate;
    std::optional<std::string> step_unit;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--N", N, "embedding width (default 64)");
        cmd->add_option("--P", P, "patch feature length (default: taken from the dataset)");
        cmd->add_option("--n", n, "gene count (default: taken from the dataset)");
        cmd->add_option("--T", T, "tokens per embedding, must divide N (default 8)");
        cmd->add_option("--K", K, "spatial neighbors per spot (default 8)");
        cmd->add_option("--L", L, "HGNN layers (default 2)");
        cmd->add_option("--tau-deg", tau_deg, "hyperedge degree (default 3)");
        cmd->add_option("--tau-temp", tau_temp, "InfoNCE temperature (default 0.05)");
        cmd->add_option("--lambda1", lambda1, "query contrastive weight (default 1)");
        cmd->add_option("--lambda2", lambda2, "neighbor contrastive weight (default 0.5)");
        cmd->add_option("--lr", lr, "initial learning rate (default 0.0001)");
        cmd->add_option("--decay-rate", decay_rate, "lr decay factor (default 0.9)");
        cmd->add_option("--step-size", step_size, "decay step size (default 50)");
        cmd->add_option("--step-unit", step_unit, "decay unit: epoch or step (default epoch)");
        cmd->add_option("--batch-size", batch_size, "batch size (default 8)");
        cmd->add_option("--epochs", epochs, "training epochs (default 20)");
        cmd->add_option("--seed", seed, "RNG seed (default 7)");
    }

    void apply(TrainConfig& cfg) const {
        auto set_count = [](std::size_t& dst, const std::optional<std::int64_t>& src,
                            const char* name) {
            if (!src) return;
            if (*src < 0) throw std::runtime_error(std::string("flag --") + name +
                                                   " must be nonnegative");
            dst = static_cast<std::size_t>(*src);
        };
        set_count(cfg.N, N, "N");
        set_count(cfg.P, P, "P");
        set_count(cfg.n, n, "n");
        set_count(cfg.T, T, "T");
        set_count(cfg.K, K, "K");
        set_count(cfg.L, L, "L");
        set_count(cfg.tau_deg, tau_deg, "tau-deg");
        set_count(cfg.step_size, step_size, "step-size");
        set_count(cfg.batch_size, batch_size, "batch-size");
        set_count(cfg.epochs, epochs, "epochs");
        if (seed) cfg.seed = static_cast<std::uint64_t>(*seed);
        if (tau_temp) cfg.tau_temp = *tau_temp;
        if (lambda1) cfg.lambda1 = *lambda1;
        if (lambda2) cfg.lambda2 = *lambda2;
        if (lr) cfg.lr = *lr;
        if (decay_rate) cfg.decay_rate = *decay_rate;
        if (step_unit) cfg.step_unit = *step_unit;
    }
};

/// Precedence: explicit flag > config-file key > built-in default, except
/// that P and n fall back to the dataset's dimensions when neither a flag
/// nor a file key names them. An explicit value that contradicts the
/// dataset is an error.
TrainConfig resolve_train_config(const std::string& config_file, const TrainFlagBindings& flags,
                                 const STDataset& ds, bool p_given, bool n_given) {
    TrainConfig cfg;
    bool p_set = p_given, n_set = n_given;
    if (!config_file.empty()) {
        const std::string extras[] = {kTopGenesKey};
        const auto table = io::TomlTable::parse_file(config_file);
        cfg = train_config_from_toml(table, extras);
        p_set = p_set || table.contains("P");
        n_set = n_set || table.contains("n");
    }
    flags.apply(cfg);
    if (!p_set) cfg.P = ds.patch_dim;
    if (!n_set) cfg.n = ds.gene_count();
    if (cfg.P != ds.patch_dim)
        throw std::runtime_error("config P=" + std::to_string(cfg.P) +
                                 " does not match dataset P=" + std::to_string(ds.patch_dim));
    if (cfg.n != ds.gene_count())
        throw std::runtime_error("config n=" + std::to_string(cfg.n) +
                                 " does not match dataset n=" + std::to_string(ds.gene_count()));
    cfg.validate();
    return cfg;
}

struct CkptBundle {
    TrainConfig cfg;
    std::size_t top_genes = 0;
    fs::path dir;

    ParamTree load_params() const {
        ParamTree params = load_checkpoint(dir / kCheckpointFileName);
        const ParamTree expected = init_model_params(cfg);
        if (!params.same_structure(expected))
            throw std::runtime_error("checkpoint " + (dir / kCheckpointFileName).string() +
                                     " does not match the architecture in " + kConfigFileName);
        return params;
    }
};

CkptBundle open_checkpoint_dir(const std::string& ckpt_dir) {
    CkptBundle b;
    b.dir = ckpt_dir;
    const std::string extras[] = {kTopGenesKey};
    const auto table = io::TomlTable::parse_file(b.dir / kConfigFileName);
    b.cfg = train_config_from_toml(table, extras);
    if (table.contains(kTopGenesKey))
        b.top_genes = static_cast<std::size_t>(table.get_int(kTopGenesKey));
    return b;
}

Matrix predictions_for(const STDataset& ds, const ParamTree& params, const TrainConfig& cfg) {
    Matrix preds(ds.spot_count(), cfg.n);
    for (std::size_t i = 0; i < ds.spot_count(); ++i) {
        const Matrix y = predict(params, cfg, Matrix::row_vector(ds.spots[i].patch));
        std::copy(y.data().begin(), y.data().end(), preds.row(i).begin());
    }
    return preds;
}

// --- ablate grid ---------------------------------------------------------

struct GridAxis {
    std::string name;                                // K, L, B, tau or lambda
    std::vector<std::vector<double>> values;         // lambda holds pairs
};

GridAxis parse_axis(const std::string& token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos)
        throw std::runtime_error("ablate: grid token '" + token + "' is not name=v1,v2,...");
    GridAxis axis;
    axis.name = token.substr(0, eq);
    if (axis.name != "K" && axis.name != "L" && axis.name != "B" && axis.name != "tau" &&
        axis.name != "lambda")
        throw std::runtime_error("ablate: unknown grid axis '" + axis.name +
                                 "' (expected K, L, B, tau or lambda)");
    for (const auto& cell : io::split_csv_line(token.substr(eq + 1))) {
        if (cell.empty()) throw std::runtime_error("ablate: empty value in '" + token + "'");
        std::vector<double> parts;
        std::size_t start = 0;
        while (true) {
            const auto colon = cell.find(':', start);
            const auto piece = cell.substr(start, colon == std::string::npos ? colon
                                                                             : colon - start);
            parts.push_back(io::parse_double(piece));
            if (colon == std::string::npos) break;
            start = colon + 1;
        }
        const std::size_t expected = axis.name == "lambda" ? 2 : 1;
        if (parts.size() != expected)
            throw std::runtime_error("ablate: value '" + cell + "' needs " +
                                     std::to_string(expected) + " component(s) for axis " +
                                     axis.name);
        axis.values.push_back(std::move(parts));
    }
    if (axis.values.empty()) throw std::runtime_error("ablate: empty axis '" + axis.name + "'");
    return axis;
}

void apply_axis_value(TrainConfig& cfg, const GridAxis& axis, std::size_t idx) {
    const auto& v = axis.values[idx];
    if (axis.name == "K") cfg.K = static_cast<std::size_t>(v[0]);
    else if (axis.name == "L") cfg.L = static_cast<std::size_t>(v[0]);
    else if (axis.name == "B") cfg.batch_size = static_cast<std::size_t>(v[0]);
    else if (axis.name == "tau") cfg.tau_temp = v[0];
    else {
        cfg.lambda1 = v[0];
        cfg.lambda2 = v[1];
    }
}

std::string axis_header(const GridAxis& axis) {
    if (axis.name == "lambda") return "lambda1,lambda2";
    return axis.name == "tau" ? "tau_temp" : axis.name;
}

std::string axis_cell(const GridAxis& axis, std::size_t idx) {
    std::string out = io::format_double(axis.values[idx][0]);
    if (axis.name == "lambda") out += "," + io::format_double(axis.values[idx][1]);
    return out;
}

// --- commands ------------------------------------------------------------

int cmd_synth(const SynthConfig& scfg, std::uint64_t seed, const std::string& out_dir) {
    const STDataset ds = synth_generate(scfg, seed);
    save_dataset(ds, out_dir);
    std::cout << "wrote " << ds.spot_count() << " spots (" << ds.gene_count() << " genes, P="
              << ds.patch_dim << ") to " << out_dir << "\n";
    return 0;
}

int cmd_train(const PipelineOptions& pipe, const std::string& config_file,
              const TrainFlagBindings& flags, bool p_given, bool n_given,
              const std::string& out_dir) {
    const STDataset ds = load_normalized(pipe);
    const TrainConfig cfg = resolve_train_config(config_file, flags, ds, p_given, n_given);

    ParamTree params;
    const TrainReport report = train(ds, cfg, params);

    fs::create_directories(out_dir);
    save_checkpoint(params, fs::path(out_dir) / kCheckpointFileName);
    io::write_file(fs::path(out_dir) / "report.csv", report.to_csv());
    io::TomlTable resolved = train_config_to_toml(cfg);
    resolved.set(kTopGenesKey, static_cast<std::int64_t>(pipe.top_genes));
    io::write_file(fs::path(out_dir) / kConfigFileName, resolved.serialize());
    if (!report.epochs.empty())
        std::cout << "final epoch total loss " << io::format_double(report.epochs.back().total)
                  << "\n";
    std::cout << "checkpoint written to " << out_dir << "\n";
    return 0;
}

int cmd_eval(const std::string& data_dir, const std::string& ckpt_dir, std::size_t k,
             std::optional<std::int64_t> seed, std::string out_file) {
    CkptBundle ckpt = open_checkpoint_dir(ckpt_dir);
    PipelineOptions pipe{data_dir, ckpt.top_genes};
    const STDataset ds = load_normalized(pipe);
    if (ds.patch_dim != ckpt.cfg.P || ds.gene_count() != ckpt.cfg.n)
        throw std::runtime_error("dataset dimensions do not match the checkpoint config");
    const std::uint64_t s = seed ? static_cast<std::uint64_t>(*seed) : ckpt.cfg.seed;
    const CrossValReport report = cross_validate(ds, ckpt.cfg, k, s);
    if (out_file.empty()) out_file = (ckpt.dir / "eval_report.csv").string();
    io::write_file(out_file, report.to_csv());
    std::cout << "pcc " << io::format_double(report.pcc.mean) << "±"
              << io::format_double(report.pcc.stddev) << " over " << k << " folds; report at "
              << out_file << "\n";
    return 0;
}

int cmd_predict(const std::string& data_dir, const std::string& ckpt_dir,
                const std::string& out_file) {
    const CkptBundle ckpt = open_checkpoint_dir(ckpt_dir);
    PipelineOptions pipe{data_dir, ckpt.top_genes};
    const STDataset ds = load_normalized(pipe);
    if (ds.patch_dim != ckpt.cfg.P || ds.gene_count() != ckpt.cfg.n)
        throw std::runtime_error("dataset dimensions do not match the checkpoint config");
    const ParamTree params = ckpt.load_params();
    const Matrix preds = predictions_for(ds, params, ckpt.cfg);

    std::string csv = "spot_id";
    for (const auto& g : ds.gene_names) csv += "," + g;
    csv += '\n';
    for (std::size_t i = 0; i < ds.spot_count(); ++i) {
        csv += ds.spots[i].spot_id;
        for (std::size_t j = 0; j < preds.cols(); ++j)
            csv += "," + io::format_double(preds(i, j));
        csv += '\n';
    }
    io::write_file(out_file, csv);
    std::cout << "wrote predictions for " << ds.spot_count() << " spots to " << out_file << "\n";
    return 0;
}

int cmd_ablate(const PipelineOptions& pipe, const std::string& config_file,
               const TrainFlagBindings& flags, bool p_given, bool n_given,
               const std::vector<std::string>& grid_tokens, std::size_t k,
               const std::string& out_file) {
    const STDataset ds = load_normalized(pipe);
    const TrainConfig base = resolve_train_config(config_file, flags, ds, p_given, n_given);

    std::vector<GridAxis> axes;
    for (const auto& token : grid_tokens) axes.push_back(parse_axis(token));
    if (axes.empty()) throw std::runtime_error("ablate: at least one --grid axis is required");

    std::string csv;
    for (const auto& axis : axes) csv += axis_header(axis) + ",";
    csv += "mse_mean,mse_std,mae_mean,mae_std,pcc_mean,pcc_std\n";

    std::vector<std::size_t> index(axes.size(), 0);
    std::size_t rows = 0;
    while (true) {
        TrainConfig cfg = base;
        for (std::size_t a = 0; a < axes.size(); ++a) apply_axis_value(cfg, axes[a], index[a]);
        cfg.validate();
        const CrossValReport r = cross_validate(ds, cfg, k, cfg.seed);
        for (std::size_t a = 0; a < axes.size(); ++a) csv += axis_cell(axes[a], index[a]) + ",";
        csv += io::format_double(r.mse.mean) + "," + io::format_double(r.mse.stddev) + "," +
               io::format_double(r.mae.mean) + "," + io::format_double(r.mae.stddev) + "," +
               io::format_double(r.pcc.mean) + "," + io::format_double(r.pcc.stddev) + "\n";
        ++rows;

        std::size_t a = axes.size();
        while (a-- > 0) {
            if (++index[a] < axes[a].values.size()) break;
            index[a] = 0;
            if (a == 0) {
                io::write_file(out_file, csv);
                std::cout << rows << " grid rows written to " << out_file << "\n";
                return 0;
            }
        }
    }
}

int cmd_export_heatmap(const std::string& data_dir, const std::string& ckpt_dir,
                       const std::string& gene, const std::string& out_file) {
    const CkptBundle ckpt = open_checkpoint_dir(ckpt_dir);
    PipelineOptions pipe{data_dir, ckpt.top_genes};
    const STDataset ds = load_normalized(pipe);
    if (ds.patch_dim != ckpt.cfg.P || ds.gene_count() != ckpt.cfg.n)
        throw std::runtime_error("dataset dimensions do not match the checkpoint config");
    const auto it = std::find(ds.gene_names.begin(), ds.gene_names.end(), gene);
    if (it == ds.gene_names.end())
        throw std::runtime_error("unknown gene '" + gene + "' in dataset " + data_dir);
    const auto gidx = static_cast<std::size_t>(it - ds.gene_names.begin());

    const ParamTree params = ckpt.load_params();
    const Matrix preds = predictions_for(ds, params, ckpt.cfg);

    std::string csv = "x,y,pred,label\n";
    for (std::size_t i = 0; i < ds.spot_count(); ++i) {
        csv += io::format_double(ds.spots[i].x) + "," + io::format_double(ds.spots[i].y) + "," +
               io::format_double(preds(i, gidx)) + "," +
               io::format_double(ds.spots[i].expr[gidx]) + "\n";
    }
    io::write_file(out_file, csv);
    std::cout << "wrote heatmap for " << gene << " to " << out_file << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dual-branch contrastive model for predicting spot gene expression "
                 "from patch features"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset directory");
    SynthConfig scfg;
    std::int64_t synth_seed = 7;
    std::string synth_out;
    synth->add_option("--out", synth_out, "output dataset directory")->required();
    synth->add_option("--grid", scfg.grid_side, "grid side length (spots = side^2)");
    synth->add_option("--spots", scfg.spots, "spot count cap (0 = full grid)");
    synth->add_option("--genes", scfg.genes, "number of genes");
    synth->add_option("--patch-dim", scfg.patch_dim, "patch feature length P");
    synth->add_option("--noise", scfg.noise_sigma, "noise sigma before softplus");
    synth->add_option("--corr-len", scfg.corr_length, "spatial correlation length of the noise");
    synth->add_option("--signal-scale", scfg.signal_scale, "std of the planted signal per gene");
    synth->add_option("--seed", synth_seed, "RNG seed");

    // train
    auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint dir");
    PipelineOptions train_pipe;
    std::string train_config, train_out;
    TrainFlagBindings train_flags;
    train_cmd->add_option("--data", train_pipe.data_dir, "dataset directory")->required();
    train_cmd->add_option("--out", train_out, "checkpoint output directory")->required();
    train_cmd->add_option("--config", train_config, "TOML config file (flags override it)");
    train_cmd->add_option("--top-genes", train_pipe.top_genes,
                          "keep the most expressed genes (0 = all)");
    train_flags.add_to(train_cmd);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "k-fold cross-validation with fresh models");
    std::string eval_data, eval_ckpt, eval_out;
    std::size_t eval_k = 3;
    std::optional<std::int64_t> eval_seed;
    eval_cmd->add_option("--data", eval_data, "dataset directory")->required();
    eval_cmd->add_option("--ckpt", eval_ckpt, "checkpoint directory (supplies the config)")
        ->required();
    eval_cmd->add_option("--k", eval_k, "number of folds");
    eval_cmd->add_option("--seed", eval_seed, "fold/init seed (default: config seed)");
    eval_cmd->add_option("--out", eval_out, "report CSV path (default: <ckpt>/eval_report.csv)");

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "write per-spot predictions as CSV");
    std::string pred_data, pred_ckpt, pred_out;
    predict_cmd->add_option("--data", pred_data, "dataset directory")->required();
    predict_cmd->add_option("--ckpt", pred_ckpt, "checkpoint directory")->required();
    predict_cmd->add_option("--out", pred_out, "output CSV path")->required();

    // ablate
    auto* ablate_cmd = app.add_subcommand("ablate", "hyperparameter grid over K/L/B/tau/lambda");
    PipelineOptions ablate_pipe;
    std::string ablate_config, ablate_out = "ablation.csv";
    std::vector<std::string> grid_tokens;
    std::size_t ablate_k = 2;
    TrainFlagBindings ablate_flags;
    ablate_cmd->add_option("--data", ablate_pipe.data_dir, "dataset directory")->required();
    ablate_cmd->add_option("--grid", grid_tokens,
                           "axes like K=4,8,16,25 L=1,2,3,4 B=4,8 tau=0.05,0.1 "
                           "lambda=1:0.5,0:1")
        ->required()
        ->expected(-1);
    ablate_cmd->add_option("--k", ablate_k, "folds per grid point");
    ablate_cmd->add_option("--out", ablate_out, "output CSV path");
    ablate_cmd->add_option("--config", ablate_config, "TOML config file (flags override it)");
    ablate_cmd->add_option("--top-genes", ablate_pipe.top_genes,
                           "keep the most expressed genes (0 = all)");
    ablate_flags.add_to(ablate_cmd);

    // export-heatmap
    auto* heat_cmd = app.add_subcommand("export-heatmap",
                                        "per-spot x,y,pred,label CSV for one gene");
    std::string heat_data, heat_ckpt, heat_gene, heat_out;
    heat_cmd->add_option("--data", heat_data, "dataset directory")->required();
    heat_cmd->add_option("--ckpt", heat_ckpt, "checkpoint directory")->required();
    heat_cmd->add_option("--gene", heat_gene, "gene name")->required();
    heat_cmd->add_option("--out", heat_out, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (synth->parsed()) return cmd_synth(scfg, static_cast<std::uint64_t>(synth_seed),
                                              synth_out);
        if (train_cmd->parsed())
            return cmd_train(train_pipe, train_config, train_flags,
                             train_cmd->count("--P") > 0, train_cmd->count("--n") > 0,
                             train_out);
        if (eval_cmd->parsed()) return cmd_eval(eval_data, eval_ckpt, eval_k, eval_seed, eval_out);
        if (predict_cmd->parsed()) return cmd_predict(pred_data, pred_ckpt, pred_out);
        if (ablate_cmd->parsed())
            return cmd_ablate(ablate_pipe, ablate_config, ablate_flags,
                              ablate_cmd->count("--P") > 0, ablate_cmd->count("--n") > 0,
                              grid_tokens, ablate_k, ablate_out);
        if (heat_cmd->parsed())
            return cmd_export_heatmap(heat_data, heat_ckpt, heat_gene, heat_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 2;
}
