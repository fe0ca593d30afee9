#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace osda {

/// Plain `key = value` config files: one pair per line, '#' comments, blank
/// lines ignored. Values are strings; typed getters parse on demand. Writing
/// emits keys in sorted order so resolved-config snapshots are reproducible.
class KvConfig {
public:
    KvConfig() = default;

    static KvConfig parse_file(const std::filesystem::path& path);
    static KvConfig parse_string(std::string_view text);

    bool has(const std::string& key) const;
    std::optional<std::string> get(const std::string& key) const;

    std::string get_string(const std::string& key, std::string fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::size_t get_size(const std::string& key, std::size_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    /// Comma-separated list of doubles.
    std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;

    void set(const std::string& key, std::string value);
    void set_double(const std::string& key, double value);
    void set_size(const std::string& key, std::size_t value);
    void set_u64(const std::string& key, std::uint64_t value);
    void set_doubles(const std::string& key, std::span<const double> values);

    /// Throws input_error naming the first key outside `allowed`.
    void require_known_keys(std::span<const std::string_view> allowed) const;

    void write_file(const std::filesystem::path& path) const;
    std::string to_string() const;

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace osda
