// End-to-end checks of the command-line tool. Invoked with the binary path
// as argv[1]; exercises each subcommand against temp directories.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "nh2st/dataset.hpp"
#include "nh2st/io_util.hpp"
#include "nh2st/param_tree.hpp"
#include "nh2st/training.hpp"

namespace fs = std::filesystem;
using namespace nh2st;

namespace {

int failures = 0;

#define CHECK_MSG(cond, msg)                                                       \
    do {                                                                           \
        if (!(cond)) {                                                             \
            std::cerr << "[FAIL] " << __FILE__ << ":" << __LINE__ << " " << (msg)  \
                      << "\n";                                                     \
            ++failures;                                                            \
        }                                                                          \
    } while (0)

std::string cli_path;
fs::path work;

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run(const std::string& args) {
    static int counter = 0;
    const fs::path out = work / ("out" + std::to_string(counter) + ".txt");
    const fs::path err = work / ("err" + std::to_string(counter) + ".txt");
    ++counter;
    const std::string cmd = cli_path + " " + args + " > " + out.string() + " 2> " + err.string();
    const int raw = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::size_t line_count(const std::string& text) {
    std::size_t n = 0;
    for (char c : text) n += c == '\n';
    return n;
}

bool files_identical(const fs::path& a, const fs::path& b) { return slurp(a) == slurp(b); }

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: test_cli <path-to-nh2st>\n";
        return 2;
    }
    cli_path = argv[1];
    work = fs::temp_directory_path() / "nh2st_cli_tests";
    fs::remove_all(work);
    fs::create_directories(work);

    const std::string data = (work / "data").string();
    const std::string ckpt = (work / "ckpt").string();
    const std::string arch_flags = "--N 16 --T 4 --K 3 --tau-deg 2 --seed 7";
    const std::string model_flags = arch_flags + " --epochs 2";

    {  // synth produces a loadable dataset directory
        const RunResult r =
            run("synth --out " + data + " --grid 5 --genes 6 --patch-dim 8 --noise 0.05 --seed 7");
        CHECK_MSG(r.code == 0, "synth exit code: " + r.err);
        const STDataset ds = load_dataset(data);
        CHECK_MSG(ds.spot_count() == 25, "synth spot count");
        CHECK_MSG(ds.gene_count() == 6, "synth gene count");
        CHECK_MSG(ds.patch_dim == 8, "synth patch dim");
        CHECK_MSG(ds.planted_map.has_value(), "synth records the planted map");
    }

    {  // identical synth invocations are bitwise identical
        const std::string data2 = (work / "data2").string();
        run("synth --out " + data2 + " --grid 5 --genes 6 --patch-dim 8 --noise 0.05 --seed 7");
        for (const char* f : {"manifest.toml", "spots.csv", "expr.csv", "patches.bin",
                              "planted_map.bin"})
            CHECK_MSG(files_identical(fs::path(data) / f, fs::path(data2) / f),
                      std::string("synth determinism: ") + f);
    }

    {  // train writes checkpoint, report and resolved config
        const RunResult r = run("train --data " + data + " --out " + ckpt + " " + model_flags);
        CHECK_MSG(r.code == 0, "train exit code: " + r.err);
        CHECK_MSG(fs::exists(fs::path(ckpt) / "params.ckpt"), "train writes params.ckpt");
        const std::string report = slurp(fs::path(ckpt) / "report.csv");
        CHECK_MSG(report.rfind("epoch,total,ls,ln,mse,lr\n", 0) == 0, "report header");
        CHECK_MSG(line_count(report) == 3, "one row per epoch");
        const auto table = io::TomlTable::parse_file(fs::path(ckpt) / "config.toml");
        CHECK_MSG(table.get_int("N") == 16, "resolved config stores N");
        CHECK_MSG(table.get_int("P") == 8, "resolved config adopts dataset P");
        CHECK_MSG(table.get_int("top_genes") == 0, "resolved config stores top_genes");
    }

    {  // eval produces one row per fold plus the summary row
        const RunResult r = run("eval --data " + data + " --ckpt " + ckpt + " --k 3");
        CHECK_MSG(r.code == 0, "eval exit code: " + r.err);
        const std::string csv = slurp(fs::path(ckpt) / "eval_report.csv");
        CHECK_MSG(csv.rfind("fold,mse,mae,pcc\n", 0) == 0, "eval header");
        CHECK_MSG(line_count(csv) == 5, "eval: 3 fold rows + summary");
        CHECK_MSG(csv.find("summary,") != std::string::npos, "eval summary row");
        CHECK_MSG(csv.find("±") != std::string::npos, "eval mean±std formatting");
    }

    {  // predict emits one row per spot with gene-named columns
        const std::string preds = (work / "preds.csv").string();
        const RunResult r = run("predict --data " + data + " --ckpt " + ckpt + " --out " + preds);
        CHECK_MSG(r.code == 0, "predict exit code: " + r.err);
        const std::string csv = slurp(preds);
        CHECK_MSG(line_count(csv) == 26, "predict: header + 25 rows");
        CHECK_MSG(csv.rfind("spot_id,", 0) == 0, "predict header");
    }

    {  // export-heatmap matches the in-process inference path
        const std::string heat = (work / "heat.csv").string();
        const RunResult r = run("export-heatmap --data " + data + " --ckpt " + ckpt +
                                " --gene gene_2 --out " + heat);
        CHECK_MSG(r.code == 0, "export-heatmap exit code: " + r.err);
        const auto lines = io::read_lines(heat);
        CHECK_MSG(lines.size() == 26, "heatmap: header + one row per spot");
        CHECK_MSG(lines[0] == "x,y,pred,label", "heatmap header");

        const auto table = io::TomlTable::parse_file(fs::path(ckpt) / "config.toml");
        const TrainConfig cfg = train_config_from_toml(
            table, std::vector<std::string>{"top_genes"});
        const ParamTree params = load_checkpoint(fs::path(ckpt) / "params.ckpt");
        const STDataset ds = select_top_genes(load_dataset(data), 6);
        std::size_t gidx = 0;
        while (ds.gene_names[gidx] != "gene_2") ++gidx;
        for (std::size_t i = 0; i < ds.spot_count(); ++i) {
            const auto cells = io::split_csv_line(lines[i + 1]);
            const Matrix y = predict(params, cfg, Matrix::row_vector(ds.spots[i].patch));
            CHECK_MSG(io::parse_double(cells[2]) == y(0, gidx),
                      "heatmap pred equals predict() for spot " + std::to_string(i));
            CHECK_MSG(io::parse_double(cells[3]) == ds.spots[i].expr[gidx],
                      "heatmap label column for spot " + std::to_string(i));
        }
    }

    {  // unknown gene fails with exit 1 naming the gene
        const RunResult r = run("export-heatmap --data " + data + " --ckpt " + ckpt +
                                " --gene nope --out " + (work / "x.csv").string());
        CHECK_MSG(r.code == 1, "unknown gene exit code");
        CHECK_MSG(r.err.find("nope") != std::string::npos, "error names the gene");
        CHECK_MSG(line_count(r.err) == 1, "single-line error");
    }

    {  // ablate emits the full cross product
        const std::string abl = (work / "abl.csv").string();
        const RunResult r = run("ablate --data " + data + " --grid K=2,3 L=1,2 --k 2 " +
                                arch_flags + " --epochs 1 --out " + abl);
        CHECK_MSG(r.code == 0, "ablate exit code: " + r.err);
        const auto lines = io::read_lines(abl);
        CHECK_MSG(lines.size() == 5, "ablate: header + 4 rows");
        CHECK_MSG(lines[0] == "K,L,mse_mean,mse_std,mae_mean,mae_std,pcc_mean,pcc_std",
                  "ablate header");
    }

    {  // lambda axis expands to paired columns
        const std::string abl = (work / "abl_lambda.csv").string();
        const RunResult r = run("ablate --data " + data + " --grid lambda=1:0.5,0:1 --k 2 " +
                                arch_flags + " --epochs 1 --out " + abl);
        CHECK_MSG(r.code == 0, "ablate lambda exit code: " + r.err);
        const auto lines = io::read_lines(abl);
        CHECK_MSG(lines.size() == 3, "ablate lambda rows");
        CHECK_MSG(lines[0].rfind("lambda1,lambda2,", 0) == 0, "ablate lambda header");
    }

    {  // usage errors exit with 2
        CHECK_MSG(run("train --no-such-flag").code == 2, "unknown flag exit code");
        CHECK_MSG(run("").code == 2, "missing subcommand exit code");
        CHECK_MSG(run("synth").code == 2, "missing required flag exit code");
    }

    {  // --help exits 0 and lists flags with defaults
        for (const std::string sub :
             {"synth", "train", "eval", "predict", "ablate", "export-heatmap"}) {
            const RunResult r = run(sub + " --help");
            CHECK_MSG(r.code == 0, sub + " --help exit code");
            CHECK_MSG(r.out.find("--") != std::string::npos, sub + " --help lists flags");
        }
        CHECK_MSG(run("train --help").out.find("0.0001") != std::string::npos,
                  "--help shows the lr default");
        CHECK_MSG(run("synth --help").out.find("--signal-scale") != std::string::npos,
                  "--help lists synth flags");
    }

    {  // config file + flag override precedence
        const fs::path cfg_file = work / "train.toml";
        io::write_file(cfg_file, "epochs = 1\nlambda2 = 0.25\nN = 16\nT = 4\nK = 3\ntau_deg = 2\n");
        const std::string ckpt2 = (work / "ckpt2").string();
        const RunResult r = run("train --data " + data + " --out " + ckpt2 + " --config " +
                                cfg_file.string() + " --lambda2 0.75 --seed 7");
        CHECK_MSG(r.code == 0, "config train exit code: " + r.err);
        const auto table = io::TomlTable::parse_file(fs::path(ckpt2) / "config.toml");
        CHECK_MSG(table.get_double("lambda2") == 0.75, "flag overrides config file");
        CHECK_MSG(table.get_int("epochs") == 1, "config file overrides default");
    }

    if (failures == 0) std::cout << "test_cli: all checks passed\n";
    fs::remove_all(work);
    return failures == 0 ? 0 : 1;
}
