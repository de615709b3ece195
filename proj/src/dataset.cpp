#include "nh2st/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "nh2st/io_util.hpp"

namespace nh2st {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

void read_f32_block(const std::filesystem::path& file, std::size_t count, float* out) {
    std::ifstream in(file, std::ios::binary | std::ios::ate);
    if (!in) fail("load_dataset: missing file " + file.string());
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes != count * sizeof(float))
        fail("load_dataset: " + file.string() + " has " + std::to_string(bytes) +
             " bytes, expected " + std::to_string(count * sizeof(float)));
    in.seekg(0);
    in.read(reinterpret_cast<char*>(out), static_cast<std::streamsize>(count * sizeof(float)));
    if (!in) fail("load_dataset: short read from " + file.string());
}

}  // namespace

bool operator==(const SpotRecord& a, const SpotRecord& b) {
    return a.spot_id == b.spot_id && a.x == b.x && a.y == b.y && a.patch == b.patch &&
           a.expr == b.expr;
}

Matrix STDataset::patch_matrix() const {
    Matrix m(spots.size(), patch_dim);
    for (std::size_t i = 0; i < spots.size(); ++i)
        std::copy(spots[i].patch.begin(), spots[i].patch.end(), m.row(i).begin());
    return m;
}

Matrix STDataset::expr_matrix() const {
    Matrix m(spots.size(), gene_names.size());
    for (std::size_t i = 0; i < spots.size(); ++i)
        std::copy(spots[i].expr.begin(), spots[i].expr.end(), m.row(i).begin());
    return m;
}

std::vector<std::size_t> FoldSplit::fold_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] == fold) out.push_back(i);
    return out;
}

std::vector<std::size_t> FoldSplit::complement_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] != fold) out.push_back(i);
    return out;
}

STDataset load_dataset(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.toml";
    if (!std::filesystem::exists(manifest_path))
        fail("load_dataset: missing file " + manifest_path.string());
    const auto manifest = io::TomlTable::parse_file(manifest_path);
    if (manifest.get_int("schema_version") != 1)
        fail("load_dataset: unsupported schema_version in " + manifest_path.string());
    const auto M = static_cast<std::size_t>(manifest.get_int("M"));
    const auto P = static_cast<std::size_t>(manifest.get_int("P"));
    const auto n = static_cast<std::size_t>(manifest.get_int("n"));
    if (M == 0 || P == 0 || n == 0) fail("load_dataset: non-positive dimension in manifest");

    STDataset ds;
    ds.patch_dim = P;
    ds.normalized = false;

    // spots.csv
    const auto spot_lines = io::read_lines(dir / "spots.csv");
    if (spot_lines.empty() || spot_lines[0] != "spot_id,x,y")
        fail("load_dataset: spots.csv must start with header 'spot_id,x,y'");
    if (spot_lines.size() != M + 1)
        fail("load_dataset: spots.csv has " + std::to_string(spot_lines.size() - 1) +
             " rows, manifest says M=" + std::to_string(M));
    std::set<std::string> seen_ids;
    std::set<std::pair<double, double>> seen_coords;
    for (std::size_t i = 1; i < spot_lines.size(); ++i) {
        const auto cells = io::split_csv_line(spot_lines[i]);
        if (cells.size() != 3) fail("load_dataset: malformed spots.csv row " + std::to_string(i));
        SpotRecord rec;
        rec.spot_id = cells[0];
        rec.x = io::parse_double(cells[1]);
        rec.y = io::parse_double(cells[2]);
        if (!std::isfinite(rec.x) || !std::isfinite(rec.y))
            fail("load_dataset: non-finite coordinate for spot " + rec.spot_id);
        if (!seen_ids.insert(rec.spot_id).second)
            fail("load_dataset: duplicate spot_id '" + rec.spot_id + "'");
        if (!seen_coords.insert({rec.x, rec.y}).second)
            fail("load_dataset: duplicate coordinate for spot " + rec.spot_id);
        ds.spots.push_back(std::move(rec));
    }

    // expr.csv
    const auto expr_lines = io::read_lines(dir / "expr.csv");
    if (expr_lines.empty()) fail("load_dataset: expr.csv is empty");
    const auto header = io::split_csv_line(expr_lines[0]);
    if (header.size() != n + 1 || header[0] != "spot_id")
        fail("load_dataset: expr.csv header has " + std::to_string(header.size() - 1) +
             " genes, manifest says n=" + std::to_string(n));
    ds.gene_names.assign(header.begin() + 1, header.end());
    if (std::set<std::string>(ds.gene_names.begin(), ds.gene_names.end()).size() != n)
        fail("load_dataset: duplicate gene name in expr.csv header");
    if (expr_lines.size() != M + 1)
        fail("load_dataset: expr.csv has " + std::to_string(expr_lines.size() - 1) +
             " rows, manifest says M=" + std::to_string(M));
    for (std::size_t i = 1; i < expr_lines.size(); ++i) {
        const auto cells = io::split_csv_line(expr_lines[i]);
        if (cells.size() != n + 1)
            fail("load_dataset: expr.csv row " + std::to_string(i) + " has " +
                 std::to_string(cells.size() - 1) + " values, expected " + std::to_string(n));
        if (cells[0] != ds.spots[i - 1].spot_id)
            fail("load_dataset: expr.csv row order does not match spots.csv at '" + cells[0] + "'");
        auto& expr = ds.spots[i - 1].expr;
        expr.reserve(n);
        for (std::size_t j = 1; j < cells.size(); ++j) {
            const double v = io::parse_double(cells[j]);
            if (!std::isfinite(v))
                fail("load_dataset: non-finite expression value for spot " + cells[0]);
            expr.push_back(v);
        }
    }

    // patches.bin
    std::vector<float> raw(M * P);
    read_f32_block(dir / "patches.bin", raw.size(), raw.data());
    for (std::size_t i = 0; i < M; ++i) {
        auto& patch = ds.spots[i].patch;
        patch.resize(P);
        for (std::size_t j = 0; j < P; ++j) {
            const float v = raw[i * P + j];
            if (!std::isfinite(v))
                fail("load_dataset: non-finite patch value for spot " + ds.spots[i].spot_id);
            patch[j] = static_cast<double>(v);
        }
    }

    if (manifest.contains("planted_map_file")) {
        const auto map_path = dir / manifest.get_string("planted_map_file");
        std::ifstream in(map_path, std::ios::binary | std::ios::ate);
        if (!in) fail("load_dataset: missing file " + map_path.string());
        const auto bytes = static_cast<std::size_t>(in.tellg());
        if (bytes != n * P * sizeof(double))
            fail("load_dataset: planted map has wrong size in " + map_path.string());
        in.seekg(0);
        Matrix A(n, P);
        in.read(reinterpret_cast<char*>(A.data().data()), static_cast<std::streamsize>(bytes));
        if (!in || !A.all_finite()) fail("load_dataset: bad planted map in " + map_path.string());
        ds.planted_map = std::move(A);
    }
    return ds;
}

void save_dataset(const STDataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::size_t M = ds.spot_count(), P = ds.patch_dim, n = ds.gene_count();
    if (M == 0 || P == 0 || n == 0) fail("save_dataset: empty dataset");

    io::TomlTable manifest;
    manifest.set("schema_version", std::int64_t{1});
    manifest.set("M", static_cast<std::int64_t>(M));
    manifest.set("P", static_cast<std::int64_t>(P));
    manifest.set("n", static_cast<std::int64_t>(n));
    if (ds.planted_map) manifest.set("planted_map_file", std::string("planted_map.bin"));
    io::write_file(dir / "manifest.toml", manifest.serialize());

    std::string spots = "spot_id,x,y\n";
    for (const auto& s : ds.spots)
        spots += s.spot_id + "," + io::format_double(s.x) + "," + io::format_double(s.y) + "\n";
    io::write_file(dir / "spots.csv", spots);

    std::string expr = "spot_id";
    for (const auto& g : ds.gene_names) expr += "," + g;
    expr += '\n';
    for (const auto& s : ds.spots) {
        expr += s.spot_id;
        for (double v : s.expr) expr += "," + io::format_double(v);
        expr += '\n';
    }
    io::write_file(dir / "expr.csv", expr);

    std::vector<float> raw;
    raw.reserve(M * P);
    for (const auto& s : ds.spots)
        for (double v : s.patch) raw.push_back(static_cast<float>(v));
    std::ofstream bin(dir / "patches.bin", std::ios::binary);
    bin.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size() * sizeof(float)));
    if (!bin) fail("save_dataset: write failed for patches.bin");

    if (ds.planted_map) {
        std::ofstream mapf(dir / "planted_map.bin", std::ios::binary);
        auto d = ds.planted_map->data();
        mapf.write(reinterpret_cast<const char*>(d.data()),
                   static_cast<std::streamsize>(d.size() * sizeof(double)));
        if (!mapf) fail("save_dataset: write failed for planted_map.bin");
    }
}

STDataset select_top_genes(const STDataset& raw, std::size_t n) {
    if (raw.normalized)
        throw std::invalid_argument("select_top_genes: dataset is already normalized");
    if (n == 0 || n > raw.gene_count())
        throw std::invalid_argument("select_top_genes: n=" + std::to_string(n) +
                                    " out of range for " + std::to_string(raw.gene_count()) +
                                    " genes");
    const std::size_t g = raw.gene_count();
    std::vector<double> totals(g, 0.0);
    for (const auto& s : raw.spots)
        for (std::size_t j = 0; j < g; ++j) {
            if (s.expr[j] < 0.0)
                throw std::invalid_argument("select_top_genes: negative raw count for gene '" +
                                            raw.gene_names[j] + "'");
            totals[j] += s.expr[j];
        }

    std::vector<std::size_t> order(g);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (totals[a] != totals[b]) return totals[a] > totals[b];
        return raw.gene_names[a] < raw.gene_names[b];
    });
    order.resize(n);

    STDataset out;
    out.patch_dim = raw.patch_dim;
    out.normalized = true;
    out.planted_map = raw.planted_map;
    for (std::size_t j : order) out.gene_names.push_back(raw.gene_names[j]);
    out.spots.reserve(raw.spots.size());
    for (const auto& s : raw.spots) {
        SpotRecord rec;
        rec.spot_id = s.spot_id;
        rec.x = s.x;
        rec.y = s.y;
        rec.patch = s.patch;
        rec.expr.reserve(n);
        for (std::size_t j : order) rec.expr.push_back(std::log1p(s.expr[j]));
        out.spots.push_back(std::move(rec));
    }
    return out;
}

std::vector<std::size_t> knn_spatial(const STDataset& ds, std::size_t spot_index, std::size_t K) {
    const std::size_t M = ds.spot_count();
    if (spot_index >= M) throw std::invalid_argument("knn_spatial: spot index out of range");
    if (K < 1) throw std::invalid_argument("knn_spatial: K must be at least 1");
    if (K >= M)
        throw std::invalid_argument("knn_spatial: K=" + std::to_string(K) +
                                    " needs at least K+1 spots, have " + std::to_string(M));
    const double qx = ds.spots[spot_index].x, qy = ds.spots[spot_index].y;
    std::vector<std::pair<double, std::size_t>> cand;
    cand.reserve(M - 1);
    for (std::size_t i = 0; i < M; ++i) {
        if (i == spot_index) continue;
        const double dx = ds.spots[i].x - qx, dy = ds.spots[i].y - qy;
        cand.emplace_back(dx * dx + dy * dy, i);
    }
    std::sort(cand.begin(), cand.end());  // (squared distance, index)
    std::vector<std::size_t> out(K);
    for (std::size_t i = 0; i < K; ++i) out[i] = cand[i].second;
    return out;
}

FoldSplit kfold_split(const STDataset& ds, std::size_t k, std::uint64_t seed) {
    const std::size_t M = ds.spot_count();
    if (k < 2 || k > M)
        throw std::invalid_argument("kfold_split: k=" + std::to_string(k) +
                                    " out of range for M=" + std::to_string(M));
    std::vector<std::size_t> order(M);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    FoldSplit split;
    split.k = k;
    split.assignments.resize(M);
    for (std::size_t i = 0; i < M; ++i) split.assignments[order[i]] = i % k;
    return split;
}

STDataset subset(const STDataset& ds, std::span<const std::size_t> indices) {
    STDataset out;
    out.gene_names = ds.gene_names;
    out.patch_dim = ds.patch_dim;
    out.normalized = ds.normalized;
    out.planted_map = ds.planted_map;
    out.spots.reserve(indices.size());
    for (std::size_t i : indices) {
        if (i >= ds.spot_count()) throw std::invalid_argument("subset: index out of range");
        out.spots.push_back(ds.spots[i]);
    }
    return out;
}

}  // namespace nh2st
