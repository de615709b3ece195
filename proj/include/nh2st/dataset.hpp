#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nh2st/matrix.hpp"

namespace nh2st {

/// One measured spot: patch feature block, slide coordinate and the
/// expression vector of the dataset's genes.
struct SpotRecord {
    std::string spot_id;
    double x = 0.0;
    double y = 0.0;
    std::vector<double> patch;  // length P
    std::vector<double> expr;   // length n
};

struct STDataset {
    std::vector<SpotRecord> spots;
    std::vector<std::string> gene_names;
    std::size_t patch_dim = 0;  // P
    bool normalized = false;
    /// Synthetic datasets record the generating linear map (n x P) so
    /// recovery tests have ground truth.
    std::optional<Matrix> planted_map;

    std::size_t spot_count() const { return spots.size(); }
    std::size_t gene_count() const { return gene_names.size(); }

    Matrix patch_matrix() const;  // M x P
    Matrix expr_matrix() const;   // M x n

    friend bool operator==(const STDataset& a, const STDataset& b) = default;
};

bool operator==(const SpotRecord& a, const SpotRecord& b);

struct FoldSplit {
    std::size_t k = 0;
    std::vector<std::size_t> assignments;  // per spot, in [0, k)

    std::vector<std::size_t> fold_indices(std::size_t fold) const;
    std::vector<std::size_t> complement_indices(std::size_t fold) const;
};

/// Directory layout: manifest.toml (M, P, n, schema_version, optional
/// planted_map_file), spots.csv, expr.csv (row order matching spots.csv),
/// patches.bin (row-major M x P little-endian float32), and optionally
/// planted_map.bin (row-major n x P little-endian float64).
STDataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const STDataset& ds, const std::filesystem::path& dir);

/// Keeps the n genes with the largest total raw count over all spots (ties
/// by gene name ascending; kept genes ordered by that same rank) and maps
/// every kept value c to log(1+c). Marks the result normalized.
STDataset select_top_genes(const STDataset& raw, std::size_t n);

/// Indices of the K spots nearest to spot_index in Euclidean coordinate
/// distance, query excluded, sorted by (distance, index).
std::vector<std::size_t> knn_spatial(const STDataset& ds, std::size_t spot_index, std::size_t K);

/// Seeded shuffle followed by round-robin assignment; fold sizes differ by
/// at most one.
FoldSplit kfold_split(const STDataset& ds, std::size_t k, std::uint64_t seed);

/// Dataset restricted to the given spot indices, order preserved.
STDataset subset(const STDataset& ds, std::span<const std::size_t> indices);

}  // namespace nh2st
