// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <chrono>

namespace mathorch {

/// Milliseconds since the clock's own epoch.
using Millis = std::chrono::milliseconds;

/// Monotonic time source. Every timeout and deadline in the library goes
/// through this interface so simulations can run on virtual time.
class Clock {
public:
    virtual ~Clock() = default;

    virtual Millis now() const = 0;
    virtual void sleep_until(Millis t) = 0;
    virtual bool is_virtual() const = 0;
};

class SteadyClock final : public Clock {
public:
    SteadyClock();

    Millis now() const override;
    void sleep_until(Millis t) override;
    bool is_virtual() const override { return false; }

private:
    std::chrono::steady_clock::time_point epoch_;
};

/// Time only moves when advanced. sleep_until() jumps forward instantly.
class VirtualClock final : public Clock {
public:
    explicit VirtualClock(Millis start = Millis{0}) : now_(start.count()) {}

    Millis now() const override { return Millis{now_.load()}; }
    void sleep_until(Millis t) override { advance_to(t); }
    bool is_virtual() const override { return true; }

    /// Never moves backwards.
    void advance_to(Millis t);
    void advance_by(Millis d) { advance_to(now() + d); }

private:
    std::atomic<std::int64_t> now_;
};

} // namespace mathorch
