// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "gpm/error.hpp"

namespace gpm {

/// Rejects non-objects and keys outside `known`, naming the config section.
inline void check_keys(const nlohmann::json& j, std::string_view section, std::initializer_list<std::string_view> known) {
    if (!j.is_object()) throw ConfigError(std::string(section) + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (auto k : known) ok = ok || k == key;
        if (!ok) throw ConfigError(std::string(section) + ": unknown key '" + key + "'");
    }
}

/// Reads j[key] into `out` when present, converting type errors to ConfigError.
template <typename T>
void read_key(const nlohmann::json& j, std::string_view section, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        j.at(key).get_to(out);
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string(section) + "." + key + ": wrong type (" + j.at(key).dump() + ")");
    }
}

} // namespace gpm
