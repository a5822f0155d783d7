#include "ykrl/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace ykrl {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

IniConfig IniConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
}

IniConfig IniConfig::parse_string(const std::string& text) {
    IniConfig cfg;
    std::stringstream ss(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("unterminated section header", lineno);
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError("empty section name", lineno);
            cfg.section_lines_.emplace(section, lineno);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value", lineno);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key", lineno);
        if (section.empty()) throw ConfigError("key outside of any [section]", lineno);
        auto [it, inserted] = cfg.data_[section].emplace(key, Entry{value, lineno});
        if (!inserted) throw ConfigError("duplicate key '" + key + "'", lineno);
    }
    return cfg;
}

bool IniConfig::has(const std::string& section, const std::string& key) const {
    auto s = data_.find(section);
    return s != data_.end() && s->second.count(key) > 0;
}

std::string IniConfig::get_string(const std::string& section, const std::string& key,
                                  std::optional<std::string> fallback) const {
    auto s = data_.find(section);
    if (s != data_.end()) {
        auto k = s->second.find(key);
        if (k != s->second.end()) return k->second.value;
    }
    if (fallback) return *fallback;
    throw ConfigError("missing key '" + key + "' in [" + section + "]");
}

double IniConfig::get_double(const std::string& section, const std::string& key,
                             std::optional<double> fallback) const {
    if (!has(section, key)) {
        if (fallback) return *fallback;
        throw ConfigError("missing key '" + key + "' in [" + section + "]");
    }
    const auto& entry = data_.at(section).at(key);
    try {
        std::size_t pos = 0;
        double v = std::stod(entry.value, &pos);
        if (pos != entry.value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("value for '" + key + "' is not a number: '" + entry.value + "'",
                          entry.line);
    }
}

long long IniConfig::get_int(const std::string& section, const std::string& key,
                             std::optional<long long> fallback) const {
    if (!has(section, key)) {
        if (fallback) return *fallback;
        throw ConfigError("missing key '" + key + "' in [" + section + "]");
    }
    const auto& entry = data_.at(section).at(key);
    try {
        std::size_t pos = 0;
        long long v = std::stoll(entry.value, &pos);
        if (pos != entry.value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("value for '" + key + "' is not an integer: '" + entry.value + "'",
                          entry.line);
    }
}

bool IniConfig::get_bool(const std::string& section, const std::string& key,
                         std::optional<bool> fallback) const {
    if (!has(section, key)) {
        if (fallback) return *fallback;
        throw ConfigError("missing key '" + key + "' in [" + section + "]");
    }
    const auto& entry = data_.at(section).at(key);
    std::string v = entry.value;
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("value for '" + key + "' is not a boolean: '" + entry.value + "'",
                      entry.line);
}

std::vector<double> IniConfig::get_list(const std::string& section, const std::string& key,
                                        std::vector<double> fallback) const {
    if (!has(section, key)) return fallback;
    const auto& entry = data_.at(section).at(key);
    std::vector<double> out;
    std::stringstream ss(entry.value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError("list entry is not a number: '" + item + "'", entry.line);
        }
    }
    if (out.empty()) throw ConfigError("empty list for '" + key + "'", entry.line);
    return out;
}

void IniConfig::require_known_keys(const std::string& section,
                                   const std::vector<std::string>& allowed) const {
    auto s = data_.find(section);
    if (s == data_.end()) return;
    for (const auto& [key, entry] : s->second) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError("unknown key '" + key + "' in [" + section + "]", entry.line);
    }
}

void IniConfig::require_known_sections(const std::vector<std::string>& allowed) const {
    for (const auto& [section, entries] : data_) {
        if (std::find(allowed.begin(), allowed.end(), section) == allowed.end()) {
            int line = section_lines_.count(section) ? section_lines_.at(section) : -1;
            throw ConfigError("unknown section [" + section + "]", line);
        }
    }
}

std::vector<std::string> IniConfig::sections() const {
    std::vector<std::string> out;
    for (const auto& [section, _] : data_) out.push_back(section);
    return out;
}

}  // namespace ykrl
