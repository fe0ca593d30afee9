#include "osda/kvconfig.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "osda/errors.hpp"

namespace osda {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double parse_double_value(const std::string& key, std::string_view text) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw parse_error("config key '" + key + "' has non-numeric value '" + std::string(text) + "'");
    }
    return v;
}

std::string format_double_value(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

KvConfig KvConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open config file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
}

KvConfig KvConfig::parse_string(std::string_view text) {
    KvConfig cfg;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        ++line_no;
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = trim(text.substr(start, end - start));
        start = end + 1;
        if (line.empty() || line.front() == '#') {
            if (end == text.size()) break;
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw parse_error("expected 'key = value'", line_no);
        }
        const std::string key(trim(line.substr(0, eq)));
        if (key.empty()) throw parse_error("empty key", line_no);
        cfg.set(key, std::string(trim(line.substr(eq + 1))));
        if (end == text.size()) break;
    }
    return cfg;
}

bool KvConfig::has(const std::string& key) const { return get(key).has_value(); }

std::optional<std::string> KvConfig::get(const std::string& key) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) return v;
    }
    return std::nullopt;
}

std::string KvConfig::get_string(const std::string& key, std::string fallback) const {
    auto v = get(key);
    return v ? *v : std::move(fallback);
}

double KvConfig::get_double(const std::string& key, double fallback) const {
    auto v = get(key);
    return v ? parse_double_value(key, *v) : fallback;
}

std::size_t KvConfig::get_size(const std::string& key, std::size_t fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    std::size_t out = 0;
    auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || ptr != v->data() + v->size()) {
        throw parse_error("config key '" + key + "' has non-integer value '" + *v + "'");
    }
    return out;
}

std::uint64_t KvConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || ptr != v->data() + v->size()) {
        throw parse_error("config key '" + key + "' has non-integer value '" + *v + "'");
    }
    return out;
}

std::vector<double> KvConfig::get_doubles(const std::string& key,
                                          std::vector<double> fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    std::vector<double> out;
    std::string_view rest = *v;
    while (true) {
        const std::size_t comma = rest.find(',');
        const std::string_view cell = trim(rest.substr(0, comma));
        out.push_back(parse_double_value(key, cell));
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
    }
    return out;
}

void KvConfig::set(const std::string& key, std::string value) {
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = std::move(value);
            return;
        }
    }
    entries_.emplace_back(key, std::move(value));
}

void KvConfig::set_double(const std::string& key, double value) {
    set(key, format_double_value(value));
}

void KvConfig::set_size(const std::string& key, std::size_t value) {
    set(key, std::to_string(value));
}

void KvConfig::set_u64(const std::string& key, std::uint64_t value) {
    set(key, std::to_string(value));
}

void KvConfig::set_doubles(const std::string& key, std::span<const double> values) {
    std::string joined;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) joined += ',';
        joined += format_double_value(values[i]);
    }
    set(key, std::move(joined));
}

void KvConfig::require_known_keys(std::span<const std::string_view> allowed) const {
    for (const auto& [k, v] : entries_) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
            throw input_error("unknown config key '" + k + "'");
        }
    }
}

std::string KvConfig::to_string() const {
    auto sorted = entries_;
    std::sort(sorted.begin(), sorted.end());
    std::string out;
    for (const auto& [k, v] : sorted) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

void KvConfig::write_file(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw input_error("cannot write config file: " + path.string());
    out << to_string();
    if (!out) throw input_error("write failed: " + path.string());
}

}  // namespace osda
