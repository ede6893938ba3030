#include "feddc/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace feddc {

namespace {

std::string trim(const std::string& text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin])))
        ++begin;
    while (end > begin &&
           std::isspace(static_cast<unsigned char>(text[end - 1])))
        --end;
    return text.substr(begin, end - begin);
}

bool valid_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
           c == '-';
}

} // namespace

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_string(buffer.str(), path);
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text,
                                            const std::string& origin) {
    KeyValueConfig config;
    config.origin_ = origin;

    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;

        const std::string at =
            origin + ":" + std::to_string(line_no) + ": ";
        if (stripped.front() == '[') {
            if (stripped.back() != ']')
                throw ConfigError(at + "unterminated section header");
            section = trim(stripped.substr(1, stripped.size() - 2));
            if (section.empty())
                throw ConfigError(at + "empty section name");
            for (char c : section)
                if (!valid_key_char(c))
                    throw ConfigError(at + "bad section name '" + section +
                                      "'");
            continue;
        }

        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError(at + "expected 'key = value', got '" +
                              stripped + "'");
        const std::string name = trim(stripped.substr(0, eq));
        if (name.empty()) throw ConfigError(at + "missing key before '='");
        for (char c : name)
            if (!valid_key_char(c))
                throw ConfigError(at + "bad key name '" + name + "'");

        const std::string key = section.empty() ? name : section + "." + name;
        if (config.entries_.count(key))
            throw ConfigError(at + "duplicate key '" + key +
                              "' (first defined at line " +
                              std::to_string(config.entries_[key].line) +
                              ")");
        config.entries_[key] =
            Entry{trim(stripped.substr(eq + 1)), line_no};
    }
    return config;
}

bool KeyValueConfig::has(const std::string& key) const {
    return entries_.count(key) > 0;
}

const KeyValueConfig::Entry&
KeyValueConfig::require_entry(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end())
        throw ConfigError(origin_ + ": missing required key '" + key + "'");
    return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key) const {
    return require_entry(key).value;
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& fallback) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second.value;
}

double KeyValueConfig::get_double(const std::string& key) const {
    const Entry& entry = require_entry(key);
    const std::string& text = entry.value;
    double value = 0.0;
    const auto [ptr, ec] =
        std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw ConfigError(where(key) + ": '" + key + "' expects a number, got '" +
                          text + "'");
    return value;
}

double KeyValueConfig::get_double(const std::string& key,
                                  double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

std::size_t KeyValueConfig::get_count(const std::string& key) const {
    const Entry& entry = require_entry(key);
    const std::string& text = entry.value;
    std::size_t value = 0;
    const auto [ptr, ec] =
        std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw ConfigError(where(key) + ": '" + key +
                          "' expects a nonnegative integer, got '" + text +
                          "'");
    return value;
}

std::size_t KeyValueConfig::get_count(const std::string& key,
                                      std::size_t fallback) const {
    return has(key) ? get_count(key) : fallback;
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key) const {
    const Entry& entry = require_entry(key);
    const std::string& text = entry.value;
    std::uint64_t value = 0;
    const auto [ptr, ec] =
        std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw ConfigError(where(key) + ": '" + key +
                          "' expects a nonnegative integer, got '" + text +
                          "'");
    return value;
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key,
                                      std::uint64_t fallback) const {
    return has(key) ? get_u64(key) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key) const {
    const std::string text = get_string(key);
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ConfigError(where(key) + ": '" + key +
                      "' expects true/false, got '" + text + "'");
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    return has(key) ? get_bool(key) : fallback;
}

std::vector<std::string> KeyValueConfig::get_list(const std::string& key) const {
    std::vector<std::string> items;
    if (!has(key)) return items;
    const std::string text = get_string(key);
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        const std::string cleaned = trim(item);
        if (!cleaned.empty()) items.push_back(cleaned);
    }
    return items;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
    entries_[key] = Entry{value, 0};
}

void KeyValueConfig::erase(const std::string& key) { entries_.erase(key); }

std::vector<std::string> KeyValueConfig::keys() const {
    std::vector<std::string> keys;
    for (const auto& [key, entry] : entries_) keys.push_back(key);
    return keys;
}

std::vector<std::string>
KeyValueConfig::section_keys(const std::string& section) const {
    const std::string prefix = section + ".";
    std::vector<std::string> keys;
    for (const auto& [key, entry] : entries_)
        if (key.rfind(prefix, 0) == 0) keys.push_back(key.substr(prefix.size()));
    return keys;
}

void KeyValueConfig::restrict_section(
    const std::string& section, const std::vector<std::string>& allowed) const {
    for (const auto& key : section_keys(section)) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError(where(section + "." + key) + ": unknown key '" +
                              key + "' in [" + section + "]");
    }
}

std::string KeyValueConfig::serialize() const {
    // Sectionless keys must precede any section header to survive a
    // re-parse; the map already sorts keys inside each pass.
    std::ostringstream out;
    bool wrote_global = false;
    for (const auto& [key, entry] : entries_) {
        if (key.find('.') != std::string::npos) continue;
        out << key << " = " << entry.value << '\n';
        wrote_global = true;
    }
    std::string current_section;
    bool first_section = true;
    for (const auto& [key, entry] : entries_) {
        const auto dot = key.find('.');
        if (dot == std::string::npos) continue;
        const std::string section = key.substr(0, dot);
        if (section != current_section || first_section) {
            if (!first_section || wrote_global) out << '\n';
            out << '[' << section << "]\n";
            current_section = section;
            first_section = false;
        }
        out << key.substr(dot + 1) << " = " << entry.value << '\n';
    }
    return out.str();
}

std::string KeyValueConfig::where(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end() || it->second.line == 0) return origin_;
    return origin_ + ":" + std::to_string(it->second.line);
}

} // namespace feddc
