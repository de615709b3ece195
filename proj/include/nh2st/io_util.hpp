#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace nh2st::io {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);
std::int64_t parse_int(std::string_view s);

std::vector<std::string> split_csv_line(std::string_view line);
std::vector<std::string> read_lines(const std::filesystem::path& file);
void write_file(const std::filesystem::path& file, std::string_view content);

/// Flat TOML subset used by manifests and train configs: `key = value`
/// pairs with #-comments; values are integers, floats, booleans or quoted
/// strings. Nested tables are not supported.
using TomlValue = std::variant<std::int64_t, double, bool, std::string>;

class TomlTable {
public:
    static TomlTable parse_file(const std::filesystem::path& file);
    static TomlTable parse(std::string_view text, const std::string& origin);

    bool contains(std::string_view key) const { return values_.count(key) > 0; }
    std::int64_t get_int(std::string_view key) const;
    double get_double(std::string_view key) const;  // accepts integer literals
    bool get_bool(std::string_view key) const;
    std::string get_string(std::string_view key) const;
    std::vector<std::string> keys() const;

    void set(std::string key, TomlValue v) { values_[std::move(key)] = std::move(v); }
    std::string serialize() const;

private:
    const TomlValue& at(std::string_view key) const;
    std::map<std::string, TomlValue, std::less<>> values_;
    std::string origin_ = "<memory>";
};

}  // namespace nh2st::io
