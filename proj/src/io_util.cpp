#include "nh2st/io_util.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nh2st::io {

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, ptr);
}

double parse_double(std::string_view s) {
    double v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw std::runtime_error("not a number: '" + std::string(s) + "'");
    return v;
}

std::int64_t parse_int(std::string_view s) {
    std::int64_t v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw std::runtime_error("not an integer: '" + std::string(s) + "'");
    return v;
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

void write_file(const std::filesystem::path& file, std::string_view content) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed for " + file.string());
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

TomlValue parse_value(std::string_view raw, const std::string& origin) {
    if (raw.empty()) throw std::runtime_error(origin + ": empty value");
    if (raw.front() == '"') {
        if (raw.size() < 2 || raw.back() != '"')
            throw std::runtime_error(origin + ": unterminated string " + std::string(raw));
        return std::string(raw.substr(1, raw.size() - 2));
    }
    if (raw == "true") return true;
    if (raw == "false") return false;
    if (raw.find_first_of(".eE") == std::string_view::npos) {
        std::int64_t i{};
        auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), i);
        if (ec == std::errc{} && ptr == raw.data() + raw.size()) return i;
    }
    double d{};
    auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), d);
    if (ec == std::errc{} && ptr == raw.data() + raw.size()) return d;
    throw std::runtime_error(origin + ": cannot parse value '" + std::string(raw) + "'");
}

}  // namespace

TomlTable TomlTable::parse_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), file.string());
}

TomlTable TomlTable::parse(std::string_view text, const std::string& origin) {
    TomlTable t;
    t.origin_ = origin;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = text.find('\n', pos);
        std::string_view line = text.substr(pos, end == std::string_view::npos ? end : end - pos);
        pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        const std::size_t hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key(trim(line.substr(0, eq)));
        if (key.empty())
            throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty key");
        if (t.values_.count(key))
            throw std::runtime_error(origin + ": duplicate key '" + key + "'");
        t.values_.emplace(key, parse_value(trim(line.substr(eq + 1)), origin));
    }
    return t;
}

const TomlValue& TomlTable::at(std::string_view key) const {
    auto it = values_.find(key);
    if (it == values_.end())
        throw std::runtime_error(origin_ + ": missing key '" + std::string(key) + "'");
    return it->second;
}

std::int64_t TomlTable::get_int(std::string_view key) const {
    const TomlValue& v = at(key);
    if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
    throw std::runtime_error(origin_ + ": key '" + std::string(key) + "' is not an integer");
}

double TomlTable::get_double(std::string_view key) const {
    const TomlValue& v = at(key);
    if (const auto* d = std::get_if<double>(&v)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    throw std::runtime_error(origin_ + ": key '" + std::string(key) + "' is not a number");
}

bool TomlTable::get_bool(std::string_view key) const {
    const TomlValue& v = at(key);
    if (const auto* b = std::get_if<bool>(&v)) return *b;
    throw std::runtime_error(origin_ + ": key '" + std::string(key) + "' is not a boolean");
}

std::string TomlTable::get_string(std::string_view key) const {
    const TomlValue& v = at(key);
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    throw std::runtime_error(origin_ + ": key '" + std::string(key) + "' is not a string");
}

std::vector<std::string> TomlTable::keys() const {
    std::vector<std::string> out;
    out.reserve(values_.size());
    for (const auto& [k, v] : values_) out.push_back(k);
    return out;
}

std::string TomlTable::serialize() const {
    std::string out;
    for (const auto& [k, v] : values_) {
        out += k;
        out += " = ";
        if (const auto* i = std::get_if<std::int64_t>(&v)) out += std::to_string(*i);
        else if (const auto* d = std::get_if<double>(&v)) out += format_double(*d);
        else if (const auto* b = std::get_if<bool>(&v)) out += *b ? "true" : "false";
        else out += '"' + std::get<std::string>(v) + '"';
        out += '\n';
    }
    return out;
}

}  // namespace nh2st::io
