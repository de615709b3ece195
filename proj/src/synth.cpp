#include "nh2st/synth.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace nh2st {

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

namespace {

std::string padded_id(const char* stem, std::size_t i, std::size_t count) {
    std::size_t width = 1;
    for (std::size_t c = count - 1; c >= 10; c /= 10) ++width;
    std::string digits = std::to_string(i);
    return std::string(stem) + std::string(width - std::min(width, digits.size()), '0') + digits;
}

}  // namespace

STDataset synth_generate(const SynthConfig& cfg, std::uint64_t seed) {
    if (cfg.grid_side == 0 || cfg.patch_dim == 0 || cfg.genes == 0)
        throw std::invalid_argument("synth_generate: dimensions must be positive");
    const std::size_t M = cfg.spots == 0 ? cfg.grid_side * cfg.grid_side : cfg.spots;
    if (M == 0 || M > cfg.grid_side * cfg.grid_side)
        throw std::invalid_argument("synth_generate: spot count exceeds grid capacity");
    if (cfg.noise_sigma < 0.0)
        throw std::invalid_argument("synth_generate: noise sigma must be nonnegative");
    const std::size_t P = cfg.patch_dim, n = cfg.genes;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);

    Matrix planted(n, P);
    const double a_scale = cfg.signal_scale / std::sqrt(static_cast<double>(P));
    for (double& v : planted.data()) v = unit(rng) * a_scale;

    STDataset ds;
    ds.patch_dim = P;
    ds.normalized = false;
    ds.planted_map = planted;
    for (std::size_t j = 0; j < n; ++j) ds.gene_names.push_back(padded_id("gene_", j, n));

    ds.spots.resize(M);
    for (std::size_t i = 0; i < M; ++i) {
        SpotRecord& rec = ds.spots[i];
        rec.spot_id = padded_id("spot_", i, M);
        rec.x = static_cast<double>(i % cfg.grid_side);
        rec.y = static_cast<double>(i / cfg.grid_side);
        rec.patch.resize(P);
        // Quantized through float32 so that patches.bin round-trips bitwise.
        for (double& v : rec.patch) v = static_cast<double>(static_cast<float>(unit(rng)));
    }

    Matrix noise(M, n);
    if (cfg.noise_sigma > 0.0) {
        Matrix raw(M, n);
        for (double& v : raw.data()) v = unit(rng) * cfg.noise_sigma;
        if (cfg.corr_length > 0.0) {
            const double inv2l2 = 1.0 / (2.0 * cfg.corr_length * cfg.corr_length);
            for (std::size_t i = 0; i < M; ++i) {
                double wsum = 0.0;
                std::vector<double> w(M);
                for (std::size_t j = 0; j < M; ++j) {
                    const double dx = ds.spots[i].x - ds.spots[j].x;
                    const double dy = ds.spots[i].y - ds.spots[j].y;
                    w[j] = std::exp(-(dx * dx + dy * dy) * inv2l2);
                    wsum += w[j];
                }
                for (std::size_t g = 0; g < n; ++g) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < M; ++j) acc += w[j] * raw(j, g);
                    noise(i, g) = acc / wsum;
                }
            }
        } else {
            noise = raw;
        }
    }

    for (std::size_t i = 0; i < M; ++i) {
        SpotRecord& rec = ds.spots[i];
        rec.expr.resize(n);
        for (std::size_t g = 0; g < n; ++g) {
            double logit = 0.0;
            for (std::size_t p = 0; p < P; ++p) logit += planted(g, p) * rec.patch[p];
            rec.expr[g] = softplus(logit + noise(i, g));
        }
    }
    return ds;
}

}  // namespace nh2st
