// SPDX-License-Identifier: Apache-2.0
#include "mathorch/core/clock.hpp"

#include <thread>

namespace mathorch {

SteadyClock::SteadyClock() : epoch_(std::chrono::steady_clock::now()) {}

Millis SteadyClock::now() const {
    return std::chrono::duration_cast<Millis>(std::chrono::steady_clock::now() - epoch_);
}

void SteadyClock::sleep_until(Millis t) {
    std::this_thread::sleep_until(epoch_ + t);
}

void VirtualClock::advance_to(Millis t) {
    auto cur = now_.load();
    while (cur < t.count() && !now_.compare_exchange_weak(cur, t.count())) {
    }
}

} // namespace mathorch
