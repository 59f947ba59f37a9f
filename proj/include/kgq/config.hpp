#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "kgq/error.hpp"

// Experiment configuration: a flat INI-style file ([section] headers,
// key = value lines, '#'/';' comments). Keys are addressed as
// "section.key". CLI --set overrides land in the same map, and the
// canonical serialization (sorted keys) is what gets hashed into every
// artifact header.

namespace kgq {

class Config {
public:
    Config() = default;

    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text,
                               const std::string& origin = "<config>");

    // "section.key=value"; used for CLI overrides.
    void set_from_assignment(const std::string& assignment);
    void set(const std::string& dotted_key, const std::string& value);

    bool has(const std::string& key) const;
    const std::string& require(const std::string& key) const;
    std::string get(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    // Comma-separated unsigned list; missing key -> fallback.
    std::vector<std::uint64_t> get_u64_list(
        const std::string& key, const std::vector<std::uint64_t>& fallback) const;

    // Sorted "key=value" lines; hash() is FNV-1a over this text.
    std::string canonical() const;
    std::uint64_t hash() const;
    void write_file(const std::string& path) const;

    const std::map<std::string, std::string>& entries() const {
        return values_;
    }

private:
    double parse_double(const std::string& key, const std::string& raw) const;
    std::uint64_t parse_u64(const std::string& key,
                            const std::string& raw) const;

    std::map<std::string, std::string> values_;
};

std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t seed = 0xcbf29ce484222325ull);

}  // namespace kgq
