#include "lsf/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>

#include "lsf/data.hpp"

namespace lsf {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= value.size()) {
        const auto comma = value.find(',', start);
        const auto piece = trim(std::string_view(value).substr(start, comma == std::string::npos ? std::string::npos
                                                                                                  : comma - start));
        if (!piece.empty()) out.push_back(piece);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

Config Config::parse(std::istream& in, const std::string& source, std::filesystem::path base_dir) {
    Config cfg;
    cfg.source_ = source;
    cfg.base_dir_ = std::move(base_dir);
    std::string section;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                throw ConfigError(source + ":" + std::to_string(line_no) + ": malformed section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            cfg.sections_[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
        auto& entries = cfg.sections_[section];
        if (entries.count(key)) {
            throw ConfigError(source + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
        entries[key] = Entry{trim(line.substr(eq + 1)), line_no, false};
    }
    return cfg;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse(in, path.string(), path.parent_path());
}

const Config::Entry* Config::find(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return nullptr;
    auto e = s->second.find(key);
    if (e == s->second.end()) return nullptr;
    e->second.used = true;
    return &e->second;
}

std::string Config::where(const Entry& e) const { return source_ + ":" + std::to_string(e.line); }

bool Config::has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
}

bool Config::has_section(const std::string& section) const { return sections_.count(section) > 0; }

std::string Config::get_string(const std::string& section, const std::string& key,
                               std::optional<std::string> fallback) const {
    if (const auto* e = find(section, key)) return e->value;
    if (fallback) return *fallback;
    throw ConfigError(source_ + ": missing required key [" + section + "] " + key);
}

double Config::get_double(const std::string& section, const std::string& key, std::optional<double> fallback) const {
    const auto* e = find(section, key);
    if (!e) {
        if (fallback) return *fallback;
        throw ConfigError(source_ + ": missing required key [" + section + "] " + key);
    }
    try {
        const double v = parse_double(e->value);
        if (!std::isfinite(v)) throw DataError("not finite");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(where(*e) + ": '" + key + "' is not a number: " + e->value);
    }
}

std::uint64_t Config::get_u64(const std::string& section, const std::string& key,
                              std::optional<std::uint64_t> fallback) const {
    const auto* e = find(section, key);
    if (!e) {
        if (fallback) return *fallback;
        throw ConfigError(source_ + ": missing required key [" + section + "] " + key);
    }
    std::uint64_t v = 0;
    const auto* end = e->value.data() + e->value.size();
    auto [ptr, ec] = std::from_chars(e->value.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError(where(*e) + ": '" + key + "' is not a non-negative integer: " + e->value);
    }
    return v;
}

std::size_t Config::get_size(const std::string& section, const std::string& key,
                             std::optional<std::size_t> fallback) const {
    return static_cast<std::size_t>(
        get_u64(section, key, fallback ? std::optional<std::uint64_t>(*fallback) : std::nullopt));
}

bool Config::get_bool(const std::string& section, const std::string& key, std::optional<bool> fallback) const {
    const auto* e = find(section, key);
    if (!e) {
        if (fallback) return *fallback;
        throw ConfigError(source_ + ": missing required key [" + section + "] " + key);
    }
    std::string v = e->value;
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
    if (v == "false" || v == "no" || v == "0" || v == "off") return false;
    throw ConfigError(where(*e) + ": '" + key + "' is not a boolean: " + e->value);
}

std::vector<double> Config::get_doubles(const std::string& section, const std::string& key,
                                        std::optional<std::vector<double>> fallback) const {
    const auto* e = find(section, key);
    if (!e) {
        if (fallback) return *fallback;
        throw ConfigError(source_ + ": missing required key [" + section + "] " + key);
    }
    std::vector<double> out;
    for (const auto& piece : split_list(e->value)) {
        try {
            out.push_back(parse_double(piece));
        } catch (const std::exception&) {
            throw ConfigError(where(*e) + ": '" + key + "' has a non-numeric entry: " + piece);
        }
    }
    return out;
}

std::vector<std::string> Config::get_strings(const std::string& section, const std::string& key,
                                             std::optional<std::vector<std::string>> fallback) const {
    const auto* e = find(section, key);
    if (!e) {
        if (fallback) return *fallback;
        throw ConfigError(source_ + ": missing required key [" + section + "] " + key);
    }
    return split_list(e->value);
}

std::filesystem::path Config::get_path(const std::string& section, const std::string& key, bool must_exist,
                                       std::optional<std::filesystem::path> fallback) const {
    const auto* e = find(section, key);
    std::filesystem::path p;
    if (e) {
        p = e->value;
    } else if (fallback) {
        p = *fallback;
        if (p.empty()) return p;
    } else {
        throw ConfigError(source_ + ": missing required key [" + section + "] " + key);
    }
    if (p.is_relative() && !base_dir_.empty()) p = base_dir_ / p;
    if (must_exist && !std::filesystem::exists(p)) {
        throw ConfigError((e ? where(*e) : source_) + ": path for '" + key + "' does not exist: " + p.string());
    }
    return p;
}

void Config::check_consumed() const {
    std::string unknown;
    for (const auto& [section, entries] : sections_) {
        for (const auto& [key, entry] : entries) {
            if (entry.used) continue;
            unknown += "\n  " + where(entry) + ": [" + section + "] " + key;
        }
    }
    if (!unknown.empty()) throw ConfigError("unknown config keys:" + unknown);
}

}  // namespace lsf
