#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "docaug/errors.hpp"
#include "docaug/hash.hpp"

namespace docaug {

/// Structured-text configuration: `[section]` or `[section.sub]` headers,
/// `key = value` lines, full-line `#` comments. Values keep internal spaces
/// (prompt templates), outer whitespace trimmed.
class Config {
  public:
    using Section = std::map<std::string, std::string>;

    static Config parse_string(const std::string& text, const std::string& origin = "<string>") {
        Config cfg;
        cfg.origin_ = origin;
        std::string section;
        std::size_t lineno = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            std::size_t eol = text.find('\n', pos);
            std::string line = text.substr(pos, eol == std::string::npos ? eol : eol - pos);
            pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            std::string trimmed = trim(line);
            if (trimmed.empty() || trimmed[0] == '#') continue;
            if (trimmed.front() == '[') {
                if (trimmed.back() != ']')
                    throw ValidationError(origin + ":" + std::to_string(lineno) +
                                          ": unterminated section header");
                section = trim(trimmed.substr(1, trimmed.size() - 2));
                if (section.empty())
                    throw ValidationError(origin + ":" + std::to_string(lineno) + ": empty section name");
                cfg.sections_[section];   // record even if empty
                continue;
            }
            std::size_t eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw ValidationError(origin + ":" + std::to_string(lineno) +
                                      ": expected 'key = value', got '" + trimmed + "'");
            std::string key = trim(trimmed.substr(0, eq));
            std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty())
                throw ValidationError(origin + ":" + std::to_string(lineno) + ": empty key");
            cfg.sections_[section][key] = value;
        }
        return cfg;
    }

    static Config load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ValidationError("cannot open config file: " + path.string());
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return parse_string(text, path.string());
    }

    bool has_section(const std::string& section) const { return sections_.count(section) > 0; }

    std::vector<std::string> section_names(const std::string& prefix = "") const {
        std::vector<std::string> out;
        for (const auto& [name, _] : sections_)
            if (name.rfind(prefix, 0) == 0) out.push_back(name);
        return out;
    }

    std::optional<std::string> get(const std::string& section, const std::string& key) const {
        auto s = sections_.find(section);
        if (s == sections_.end()) return std::nullopt;
        auto k = s->second.find(key);
        if (k == s->second.end()) return std::nullopt;
        return k->second;
    }

    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const {
        auto v = get(section, key);
        return v ? *v : fallback;
    }

    std::string require(const std::string& section, const std::string& key) const {
        auto v = get(section, key);
        if (!v)
            throw ValidationError(origin_ + ": missing required config key [" + section + "] " + key);
        return *v;
    }

    std::optional<double> get_double(const std::string& section, const std::string& key) const {
        auto v = get(section, key);
        if (!v) return std::nullopt;
        try {
            std::size_t used = 0;
            double d = std::stod(*v, &used);
            if (used != v->size()) throw std::invalid_argument("");
            return d;
        } catch (...) {
            throw ValidationError(origin_ + ": [" + section + "] " + key + " = '" + *v +
                                  "' is not a number");
        }
    }

    std::optional<std::uint64_t> get_u64(const std::string& section, const std::string& key) const {
        auto v = get(section, key);
        if (!v) return std::nullopt;
        try {
            std::size_t used = 0;
            unsigned long long u = std::stoull(*v, &used);
            if (used != v->size()) throw std::invalid_argument("");
            return static_cast<std::uint64_t>(u);
        } catch (...) {
            throw ValidationError(origin_ + ": [" + section + "] " + key + " = '" + *v +
                                  "' is not an unsigned integer");
        }
    }

    std::optional<bool> get_bool(const std::string& section, const std::string& key) const {
        auto v = get(section, key);
        if (!v) return std::nullopt;
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        throw ValidationError(origin_ + ": [" + section + "] " + key + " = '" + *v +
                              "' is not a boolean");
    }

    /// Stable fingerprint of everything that affects pipeline outputs. The
    /// [paths] section (output/cache locations) is excluded so relocating a
    /// run does not invalidate completed stages.
    std::string hash() const {
        std::string canon;
        for (const auto& [name, section] : sections_) {
            if (name == "paths") continue;
            canon += "[" + name + "]\n";
            for (const auto& [k, v] : section) canon += k + "=" + v + "\n";
        }
        return content_hash(canon);
    }

    const std::string& origin() const { return origin_; }

  private:
    static std::string trim(const std::string& s) {
        std::size_t b = s.find_first_not_of(" \t");
        if (b == std::string::npos) return "";
        std::size_t e = s.find_last_not_of(" \t");
        return s.substr(b, e - b + 1);
    }

    std::map<std::string, Section> sections_;
    std::string origin_;
};

} // namespace docaug
