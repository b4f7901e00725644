// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>

#include "mathorch/core/types.hpp"

namespace mathorch::log {

enum class Level { debug, info, warning, error };

void set_level(Level level);
void set_enabled(bool enabled);

/// Writes one JSON line to stderr: {"ts":..., "level":..., "msg":..., ...fields}.
void emit(Level level, std::string_view msg, const json& fields = json::object());

inline void debug(std::string_view msg, const json& f = json::object()) { emit(Level::debug, msg, f); }
inline void info(std::string_view msg, const json& f = json::object()) { emit(Level::info, msg, f); }
inline void warning(std::string_view msg, const json& f = json::object()) { emit(Level::warning, msg, f); }
inline void error(std::string_view msg, const json& f = json::object()) { emit(Level::error, msg, f); }

} // namespace mathorch::log
