#pragma once

#include <cstdint>

#include "nh2st/dataset.hpp"

namespace nh2st {

/// Synthetic spatial-expression generator. Spots sit on an integer grid;
/// patch features are seeded pseudo-random float32 values; expression is
/// softplus(A * patch + smoothed noise) for a planted map A that is kept
/// in the dataset (and its manifest) for recovery tests.
struct SynthConfig {
    std::size_t grid_side = 8;
    std::size_t spots = 0;  // 0 = grid_side^2; otherwise the first spots grid points
    std::size_t patch_dim = 128;  // P
    std::size_t genes = 32;       // n
    double noise_sigma = 0.0;
    double corr_length = 2.0;  // spatial smoothing length for the noise field
    double signal_scale = 1.0; // std of A * patch per gene
};

STDataset synth_generate(const SynthConfig& cfg, std::uint64_t seed);

double softplus(double x);

}  // namespace nh2st
