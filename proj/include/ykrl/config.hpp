#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ykrl/errors.hpp"

namespace ykrl {

// Flat INI-style configuration: [section] headers, key = value lines,
// '#' or ';' comments. Values are parsed on demand; a schema check rejects
// unknown keys with the offending line number.
class IniConfig {
  public:
    static IniConfig parse_file(const std::filesystem::path& path);
    static IniConfig parse_string(const std::string& text);

    bool has(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key,
                           std::optional<std::string> fallback = std::nullopt) const;
    double get_double(const std::string& section, const std::string& key,
                      std::optional<double> fallback = std::nullopt) const;
    long long get_int(const std::string& section, const std::string& key,
                      std::optional<long long> fallback = std::nullopt) const;
    bool get_bool(const std::string& section, const std::string& key,
                  std::optional<bool> fallback = std::nullopt) const;
    // Comma-separated list of numbers.
    std::vector<double> get_list(const std::string& section, const std::string& key,
                                 std::vector<double> fallback) const;

    // Throws ConfigError naming the first key of `section` not in `allowed`.
    void require_known_keys(const std::string& section,
                            const std::vector<std::string>& allowed) const;
    // Same over every section present.
    void require_known_sections(const std::vector<std::string>& allowed) const;

    std::vector<std::string> sections() const;

  private:
    struct Entry {
        std::string value;
        int line;
    };
    std::map<std::string, std::map<std::string, Entry>> data_;
    std::map<std::string, int> section_lines_;
};

}  // namespace ykrl
