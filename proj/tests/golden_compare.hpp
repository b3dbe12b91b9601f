#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <string>

namespace disorder::testing {

// Structural comparison of two JSON documents with a numeric tolerance, so
// golden files survive formatting-only differences between builds.
inline bool json_close(const nlohmann::json& a, const nlohmann::json& b, double tol,
                       std::string& where, const std::string& path = "$") {
    if (a.is_number() && b.is_number()) {
        const double x = a.get<double>();
        const double y = b.get<double>();
        if (std::abs(x - y) <= tol * std::max(1.0, std::max(std::abs(x), std::abs(y))))
            return true;
        where = path + ": " + a.dump() + " vs " + b.dump();
        return false;
    }
    if (a.type() != b.type()) {
        where = path + ": type mismatch";
        return false;
    }
    if (a.is_object()) {
        if (a.size() != b.size()) {
            where = path + ": object size mismatch";
            return false;
        }
        for (auto it = a.begin(); it != a.end(); ++it) {
            if (!b.contains(it.key())) {
                where = path + ": missing key " + it.key();
                return false;
            }
            if (!json_close(it.value(), b.at(it.key()), tol, where, path + "." + it.key()))
                return false;
        }
        return true;
    }
    if (a.is_array()) {
        if (a.size() != b.size()) {
            where = path + ": array size mismatch";
            return false;
        }
        for (std::size_t i = 0; i < a.size(); ++i)
            if (!json_close(a[i], b[i], tol, where, path + "[" + std::to_string(i) + "]"))
                return false;
        return true;
    }
    if (a == b) return true;
    where = path + ": " + a.dump() + " vs " + b.dump();
    return false;
}

} // namespace disorder::testing
