// SPDX-License-Identifier: Apache-2.0
//
// Process-wide graceful-shutdown flag, set from SIGINT/SIGTERM. Long-running
// loops poll it and cancel their live work.

#pragma once

namespace mathorch {

void request_shutdown() noexcept;
bool shutdown_requested() noexcept;
void reset_shutdown() noexcept;

/// Installs SIGINT and SIGTERM handlers that call request_shutdown().
void install_shutdown_handlers();

} // namespace mathorch
