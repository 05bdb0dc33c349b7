#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsf {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Flat key/value text with [section] headers:
 *
 *   # comment
 *   [backtest]
 *   mode = LH
 *   factors = MOM, LOWVOL
 *
 * Keys before the first header belong to section "". Every key a command
 * reads is marked; check_consumed() rejects whatever was never read.
 * Relative paths resolve against the config file's directory.
 */
class Config {
public:
    static Config parse(std::istream& in, const std::string& source = "<config>",
                        std::filesystem::path base_dir = {});
    static Config load(const std::filesystem::path& path);

    bool has(const std::string& section, const std::string& key) const;
    bool has_section(const std::string& section) const;

    std::string get_string(const std::string& section, const std::string& key,
                           std::optional<std::string> fallback = std::nullopt) const;
    double get_double(const std::string& section, const std::string& key,
                      std::optional<double> fallback = std::nullopt) const;
    std::size_t get_size(const std::string& section, const std::string& key,
                         std::optional<std::size_t> fallback = std::nullopt) const;
    std::uint64_t get_u64(const std::string& section, const std::string& key,
                          std::optional<std::uint64_t> fallback = std::nullopt) const;
    bool get_bool(const std::string& section, const std::string& key, std::optional<bool> fallback = std::nullopt) const;
    /// Comma-separated doubles.
    std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                    std::optional<std::vector<double>> fallback = std::nullopt) const;
    /// Comma-separated words, trimmed.
    std::vector<std::string> get_strings(const std::string& section, const std::string& key,
                                         std::optional<std::vector<std::string>> fallback = std::nullopt) const;
    /// Path resolved against the config directory; must_exist checks the file system now.
    std::filesystem::path get_path(const std::string& section, const std::string& key, bool must_exist,
                                   std::optional<std::filesystem::path> fallback = std::nullopt) const;

    /// Throws ConfigError listing every key that was never read.
    void check_consumed() const;

    const std::filesystem::path& base_dir() const noexcept { return base_dir_; }

private:
    struct Entry {
        std::string value;
        std::size_t line = 0;
        mutable bool used = false;
    };
    const Entry* find(const std::string& section, const std::string& key) const;
    std::string where(const Entry& e) const;

    std::string source_;
    std::filesystem::path base_dir_;
    std::map<std::string, std::map<std::string, Entry>> sections_;
};

}  // namespace lsf
