#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fiberphase/errors.hpp"

namespace fiberphase {

using Json = nlohmann::ordered_json;

inline Json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("config parse error in " + path.string() + ": " + e.what());
    }
}

/// Unknown keys are hard errors: a silently ignored typo in a tolerance name
/// would invalidate acceptance runs.
inline void require_known_keys(const Json& obj, const std::set<std::string>& known,
                               const std::string& context) {
    if (!obj.is_object()) throw config_error(context + ": expected an object");
    for (const auto& [key, _] : obj.items()) {
        if (!known.count(key))
            throw config_error(context + ": unknown key '" + key + "'");
    }
}

inline double get_number(const Json& obj, const std::string& key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) throw config_error("key '" + key + "' must be a number");
    return obj[key].get<double>();
}

inline double require_number(const Json& obj, const std::string& key, const std::string& context) {
    if (!obj.contains(key)) throw config_error(context + ": missing required key '" + key + "'");
    if (!obj[key].is_number()) throw config_error(context + ": key '" + key + "' must be a number");
    return obj[key].get<double>();
}

inline std::string get_string(const Json& obj, const std::string& key, const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_string()) throw config_error("key '" + key + "' must be a string");
    return obj[key].get<std::string>();
}

inline bool get_bool(const Json& obj, const std::string& key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_boolean()) throw config_error("key '" + key + "' must be a boolean");
    return obj[key].get<bool>();
}

/// FNV-1a hash of the canonical serialization; recorded in reports so runs
/// can be traced back to their exact configuration.
inline std::string config_hash(const Json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

} // namespace fiberphase
