#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "floq/types.hpp"

namespace floq {

/// Thrown on malformed configuration input; messages carry origin:line.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Minimal INI-style configuration:
///   # comment
///   [section]
///   key = value
/// Keys are unique per section (duplicates are an error, to catch typos).
class ConfigFile {
public:
    static ConfigFile parse_file(const std::string& path);
    static ConfigFile parse_string(const std::string& text, const std::string& origin);

    bool has_section(const std::string& section) const;
    bool has(const std::string& section, const std::string& key) const;

    /// Required lookup; ConfigError mentioning section/key when absent.
    const std::string& get(const std::string& section, const std::string& key) const;
    std::optional<std::string> find(const std::string& section, const std::string& key) const;

    double get_double(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    int get_int(const std::string& section, const std::string& key) const;
    int get_int(const std::string& section, const std::string& key, int fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;

    /// Comma-separated list, whitespace-trimmed.
    std::vector<std::string> get_list(const std::string& section, const std::string& key) const;

    std::vector<std::string> section_names() const;
    const std::string& origin() const { return origin_; }

    /// Scalar parsers shared with CLI flag handling; ConfigError on garbage
    /// or trailing characters.  `where` seeds the error message.
    static double parse_double(const std::string& text, const std::string& where);
    static int parse_int(const std::string& text, const std::string& where);

private:
    struct Entry {
        std::string value;
        int line;
    };
    std::map<std::string, std::map<std::string, Entry>> sections_;
    std::map<std::string, int> section_lines_;
    std::string origin_;
};

}  // namespace floq
