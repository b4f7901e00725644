// SPDX-License-Identifier: Apache-2.0
#include "mathorch/core/shutdown.hpp"

#include <atomic>
#include <csignal>

namespace mathorch {
namespace {

std::atomic<bool> g_shutdown{false};

extern "C" void on_signal(int) { g_shutdown.store(true); }

} // namespace

void request_shutdown() noexcept { g_shutdown.store(true); }
bool shutdown_requested() noexcept { return g_shutdown.load(); }
void reset_shutdown() noexcept { g_shutdown.store(false); }

void install_shutdown_handlers() {
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
}

} // namespace mathorch
