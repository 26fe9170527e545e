#include "floq/config.hpp"

#include <cctype>
#include <climits>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace floq {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
    std::ostringstream os;
    os << origin << ":" << line << ": " << msg;
    throw ConfigError(os.str());
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
}

ConfigFile ConfigFile::parse_string(const std::string& text, const std::string& origin) {
    ConfigFile cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const std::string s = trim(raw);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') fail(origin, line, "unterminated section header");
            section = trim(s.substr(1, s.size() - 2));
            if (section.empty()) fail(origin, line, "empty section name");
            if (cfg.sections_.count(section))
                fail(origin, line, "duplicate section [" + section + "]");
            cfg.sections_[section];
            cfg.section_lines_[section] = line;
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            fail(origin, line, "expected 'key = value' or a [section] header");
        if (section.empty()) fail(origin, line, "key/value pair before any [section]");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty()) fail(origin, line, "empty key");
        auto& sec = cfg.sections_[section];
        if (sec.count(key))
            fail(origin, line, "duplicate key '" + key + "' in section [" + section + "]");
        sec[key] = Entry{value, line};
    }
    return cfg;
}

bool ConfigFile::has_section(const std::string& section) const {
    return sections_.count(section) > 0;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    const auto sec = sections_.find(section);
    return sec != sections_.end() && sec->second.count(key) > 0;
}

const std::string& ConfigFile::get(const std::string& section, const std::string& key) const {
    const auto sec = sections_.find(section);
    if (sec == sections_.end())
        throw ConfigError(origin_ + ": missing section [" + section + "]");
    const auto it = sec->second.find(key);
    if (it == sec->second.end())
        throw ConfigError(origin_ + ": missing key '" + key + "' in section [" + section + "]");
    return it->second.value;
}

std::optional<std::string> ConfigFile::find(const std::string& section,
                                            const std::string& key) const {
    const auto sec = sections_.find(section);
    if (sec == sections_.end()) return std::nullopt;
    const auto it = sec->second.find(key);
    if (it == sec->second.end()) return std::nullopt;
    return it->second.value;
}

double ConfigFile::parse_double(const std::string& text, const std::string& where) {
    const std::string s = trim(text);
    if (s.empty()) throw ConfigError(where + ": empty number");
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size())
        throw ConfigError(where + ": '" + s + "' is not a number");
    return v;
}

int ConfigFile::parse_int(const std::string& text, const std::string& where) {
    const std::string s = trim(text);
    if (s.empty()) throw ConfigError(where + ": empty integer");
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size())
        throw ConfigError(where + ": '" + s + "' is not an integer");
    if (v < INT_MIN || v > INT_MAX) throw ConfigError(where + ": integer out of range");
    return int(v);
}

namespace {
std::string locus(const ConfigFile& cfg, const std::string& section, const std::string& key) {
    return cfg.origin() + ": [" + section + "] " + key;
}
}  // namespace

double ConfigFile::get_double(const std::string& section, const std::string& key) const {
    return parse_double(get(section, key), locus(*this, section, key));
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
    const auto v = find(section, key);
    return v ? parse_double(*v, locus(*this, section, key)) : fallback;
}

int ConfigFile::get_int(const std::string& section, const std::string& key) const {
    return parse_int(get(section, key), locus(*this, section, key));
}

int ConfigFile::get_int(const std::string& section, const std::string& key, int fallback) const {
    const auto v = find(section, key);
    return v ? parse_int(*v, locus(*this, section, key)) : fallback;
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
    const auto v = find(section, key);
    if (!v) return fallback;
    const std::string s = trim(*v);
    if (s == "true" || s == "on" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "off" || s == "no" || s == "0") return false;
    throw ConfigError(locus(*this, section, key) + ": '" + s + "' is not a boolean");
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
    const auto v = find(section, key);
    return v ? *v : fallback;
}

std::vector<std::string> ConfigFile::get_list(const std::string& section,
                                              const std::string& key) const {
    const std::string& raw = get(section, key);
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(raw);
    while (std::getline(in, item, ',')) {
        const std::string t = trim(item);
        if (t.empty())
            throw ConfigError(locus(*this, section, key) + ": empty list element");
        out.push_back(t);
    }
    if (out.empty()) throw ConfigError(locus(*this, section, key) + ": empty list");
    return out;
}

std::vector<std::string> ConfigFile::section_names() const {
    std::vector<std::string> out;
    out.reserve(sections_.size());
    for (const auto& [name, entries] : sections_) out.push_back(name);
    return out;
}

}  // namespace floq
