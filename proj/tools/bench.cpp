// Timing harness comparing the serial reference kernels against the
// OpenMP paths: raw matmul at a few sizes plus one full forward/backward
// training batch at 1 thread versus all threads.

#include <chrono>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "nh2st/matrix.hpp"
#include "nh2st/synth.hpp"
#include "nh2st/training.hpp"

using namespace nh2st;
using Clock = std::chrono::steady_clock;

namespace {

double checksum_sink = 0.0;

template <class F>
double best_of_ms(int reps, F&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = Clock::now();
        fn();
        const auto t1 = Clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Matrix m(r, c);
    for (double& v : m.data()) v = d(rng);
    return m;
}

void set_threads(int n) {
#ifdef _OPENMP
    omp_set_num_threads(n);
#else
    (void)n;
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_num_procs();
#else
    return 1;
#endif
}

}  // namespace

int main(int argc, char** argv) {
    const bool quick = argc > 1 && std::string(argv[1]) == "--quick";
    const int reps = quick ? 2 : 5;

    std::printf("%-34s %12s %12s %8s\n", "benchmark", "reference ms", "omp path ms", "speedup");

    std::mt19937_64 rng(1);
    std::vector<std::size_t> sizes{128, 256};
    if (!quick) sizes.push_back(512);
    for (std::size_t size : sizes) {
        const Matrix a = random_matrix(size, size, rng);
        const Matrix b = random_matrix(size, size, rng);
        const double serial = best_of_ms(reps, [&] {
            checksum_sink += matmul_reference(a, b)(0, 0);
        });
        set_threads(max_threads());
        const double parallel = best_of_ms(reps, [&] { checksum_sink += matmul(a, b)(0, 0); });
        const std::string label = "matmul " + std::to_string(size) + "x" + std::to_string(size);
        std::printf("%-34s %12.2f %12.2f %7.2fx\n", label.c_str(), serial, parallel,
                    serial / parallel);
    }

    TrainConfig cfg;
    cfg.N = 64;
    cfg.P = 128;
    cfg.n = 32;
    cfg.K = 8;
    SynthConfig scfg;
    scfg.grid_side = 6;
    scfg.patch_dim = cfg.P;
    scfg.genes = cfg.n;
    scfg.noise_sigma = 0.05;
    const STDataset ds = select_top_genes(synth_generate(scfg, 3), cfg.n);
    const NeighborTable nbrs = build_neighbor_table(ds, cfg.K);
    const ParamTree params = init_model_params(cfg);
    std::vector<std::size_t> batch;
    for (std::size_t i = 0; i < cfg.batch_size; ++i) batch.push_back(i);

    set_threads(1);
    const double serial_fb = best_of_ms(reps, [&] {
        checksum_sink += forward_backward_batch(params, cfg, ds, batch, nbrs).first.total;
    });
    set_threads(max_threads());
    const double parallel_fb = best_of_ms(reps, [&] {
        checksum_sink += forward_backward_batch(params, cfg, ds, batch, nbrs).first.total;
    });
    std::printf("%-34s %12.2f %12.2f %7.2fx\n", "train batch fwd+bwd (B=8, N=64)", serial_fb,
                parallel_fb, serial_fb / parallel_fb);
    std::printf("(threads available: %d; per-spot parallelism needs more than one core; "
                "checksum %g)\n", max_threads(), checksum_sink);
    return 0;
}
