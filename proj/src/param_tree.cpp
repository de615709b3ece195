#include "nh2st/param_tree.hpp"

#include <bit>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are written as native little-endian doubles");

namespace nh2st {

namespace {

bool valid_path(std::string_view p) {
    if (p.empty()) return false;
    for (char c : p)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '_') return false;
    return true;
}

}  // namespace

void ParamTree::insert(std::string path, Matrix value) {
    if (!valid_path(path)) throw std::invalid_argument("ParamTree: invalid path '" + path + "'");
    auto [it, ok] = leaves_.emplace(std::move(path), std::move(value));
    if (!ok) throw std::invalid_argument("ParamTree: duplicate path '" + it->first + "'");
}

Matrix& ParamTree::at(std::string_view path) {
    auto it = leaves_.find(path);
    if (it == leaves_.end())
        throw std::out_of_range("ParamTree: no leaf '" + std::string(path) + "'");
    return it->second;
}

const Matrix& ParamTree::at(std::string_view path) const {
    auto it = leaves_.find(path);
    if (it == leaves_.end())
        throw std::out_of_range("ParamTree: no leaf '" + std::string(path) + "'");
    return it->second;
}

std::size_t ParamTree::entry_count() const {
    std::size_t n = 0;
    for (const auto& [path, m] : leaves_) n += m.size();
    return n;
}

bool ParamTree::same_structure(const ParamTree& o) const {
    if (leaves_.size() != o.leaves_.size()) return false;
    auto a = leaves_.begin();
    auto b = o.leaves_.begin();
    for (; a != leaves_.end(); ++a, ++b)
        if (a->first != b->first || !a->second.same_shape(b->second)) return false;
    return true;
}

ParamTree ParamTree::zeros_like(const ParamTree& p) {
    ParamTree z;
    for (const auto& [path, m] : p) z.insert(path, Matrix(m.rows(), m.cols()));
    return z;
}

void ParamTree::accumulate(const ParamTree& other) {
    if (!same_structure(other))
        throw std::invalid_argument("ParamTree::accumulate: structure mismatch");
    auto a = leaves_.begin();
    auto b = other.leaves_.begin();
    for (; a != leaves_.end(); ++a, ++b) {
        auto dst = a->second.data();
        auto src = b->second.data();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
}

void save_checkpoint(const ParamTree& params, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + file.string());
    out << "nh2st-ckpt v1\n";
    for (const auto& [path, m] : params)
        out << path << ' ' << m.rows() << ' ' << m.cols() << '\n';
    out << '\n';
    for (const auto& [path, m] : params) {
        auto d = m.data();
        out.write(reinterpret_cast<const char*>(d.data()),
                  static_cast<std::streamsize>(d.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("save_checkpoint: write failed for " + file.string());
}

ParamTree load_checkpoint(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + file.string());
    std::string line;
    if (!std::getline(in, line) || line != "nh2st-ckpt v1")
        throw std::runtime_error("load_checkpoint: bad magic in " + file.string());

    struct Entry {
        std::string path;
        std::size_t rows, cols;
    };
    std::vector<Entry> entries;
    while (std::getline(in, line)) {
        if (line.empty()) break;
        std::istringstream ls(line);
        Entry e;
        if (!(ls >> e.path >> e.rows >> e.cols))
            throw std::runtime_error("load_checkpoint: malformed header line '" + line + "'");
        entries.push_back(std::move(e));
    }

    ParamTree params;
    for (const auto& e : entries) {
        Matrix m(e.rows, e.cols);
        auto d = m.data();
        in.read(reinterpret_cast<char*>(d.data()),
                static_cast<std::streamsize>(d.size() * sizeof(double)));
        if (!in) throw std::runtime_error("load_checkpoint: truncated blob for '" + e.path + "'");
        if (!m.all_finite())
            throw std::runtime_error("load_checkpoint: non-finite value in '" + e.path + "'");
        params.insert(e.path, std::move(m));
    }
    return params;
}

}  // namespace nh2st
