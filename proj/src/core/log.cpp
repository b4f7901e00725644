// SPDX-License-Identifier: Apache-2.0
#include "mathorch/core/log.hpp"

#include <atomic>
#include <chrono>
#include <iostream>
#include <mutex>

namespace mathorch::log {
namespace {

std::atomic<int> g_level{static_cast<int>(Level::info)};
std::atomic<bool> g_enabled{true};
std::mutex g_mutex;

constexpr std::string_view level_name(Level l) {
    switch (l) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warning: return "warning";
    case Level::error: return "error";
    }
    return "info";
}

} // namespace

void set_level(Level level) { g_level = static_cast<int>(level); }
void set_enabled(bool enabled) { g_enabled = enabled; }

void emit(Level level, std::string_view msg, const json& fields) {
    if (!g_enabled || static_cast<int>(level) < g_level) {
        return;
    }
    json line = fields.is_object() ? fields : json::object();
    const auto ts = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::system_clock::now().time_since_epoch())
                        .count();
    line["ts"] = ts;
    line["level"] = level_name(level);
    line["msg"] = msg;
    std::lock_guard lock(g_mutex);
    std::cerr << line.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
}

} // namespace mathorch::log
