#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "feddc/errors.hpp"

namespace feddc {

// Flat key/value config with [section] grouping; keys are addressed as
// "section.key". Tracks source line numbers so validation errors can point
// at the offending line.
class KeyValueConfig {
public:
    static KeyValueConfig parse_file(const std::string& path);
    static KeyValueConfig parse_string(const std::string& text,
                                       const std::string& origin);

    bool has(const std::string& key) const;

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::size_t get_count(const std::string& key) const;
    std::size_t get_count(const std::string& key, std::size_t fallback) const;
    std::uint64_t get_u64(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key,
                          std::uint64_t fallback) const;
    bool get_bool(const std::string& key) const;
    bool get_bool(const std::string& key, bool fallback) const;

    // Comma-separated list; empty or missing key gives an empty list.
    std::vector<std::string> get_list(const std::string& key) const;

    void set(const std::string& key, const std::string& value);
    void erase(const std::string& key);

    // All keys in sorted order, fully qualified.
    std::vector<std::string> keys() const;

    // All keys under "section." in sorted order, without the prefix.
    std::vector<std::string> section_keys(const std::string& section) const;

    // Raise ConfigError if the section holds a key outside `allowed`.
    void restrict_section(const std::string& section,
                          const std::vector<std::string>& allowed) const;

    // Parseable re-serialization: sections sorted, keys sorted inside each.
    std::string serialize() const;

    const std::string& origin() const { return origin_; }

    // "path:line" prefix for error messages about this key.
    std::string where(const std::string& key) const;

private:
    struct Entry {
        std::string value;
        std::size_t line = 0;
    };
    std::map<std::string, Entry> entries_;
    std::string origin_ = "<memory>";

    const Entry& require_entry(const std::string& key) const;
};

} // namespace feddc
