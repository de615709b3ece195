#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "nh2st/matrix.hpp"

namespace nh2st {

/// Named collection of matrix leaves addressed by dotted paths
/// ("query.ca.p2g.Wq"). Iteration order is lexicographic, which fixes the
/// order of every seeded initialization, gradient reduction and checkpoint
/// layout in the library.
class ParamTree {
public:
    using Map = std::map<std::string, Matrix, std::less<>>;

    void insert(std::string path, Matrix value);
    Matrix& at(std::string_view path);
    const Matrix& at(std::string_view path) const;
    bool contains(std::string_view path) const { return leaves_.count(path) > 0; }

    std::size_t leaf_count() const { return leaves_.size(); }
    std::size_t entry_count() const;
    bool empty() const { return leaves_.empty(); }

    Map::const_iterator begin() const { return leaves_.begin(); }
    Map::const_iterator end() const { return leaves_.end(); }
    Map::iterator begin() { return leaves_.begin(); }
    Map::iterator end() { return leaves_.end(); }

    bool same_structure(const ParamTree& o) const;
    static ParamTree zeros_like(const ParamTree& p);

    /// In-place this += other; structures must match. Summation order over
    /// leaf entries is fixed, so repeated reductions are bitwise stable.
    void accumulate(const ParamTree& other);

    friend bool operator==(const ParamTree& a, const ParamTree& b) = default;

private:
    Map leaves_;
};

/// Checkpoint layout: text header `nh2st-ckpt v1`, one `path rows cols`
/// line per leaf, a blank line, then the leaf blobs as little-endian
/// 64-bit floats concatenated in header order.
void save_checkpoint(const ParamTree& params, const std::filesystem::path& file);
ParamTree load_checkpoint(const std::filesystem::path& file);

}  // namespace nh2st
