#pragma once

#include <atomic>
#include <cstdint>

namespace albank {

/// Time source shared by the ledger (block timestamps) and the contract
/// (elapsed-time metering). Tests inject FixedClock for reproducible hashes.
class Clock {
public:
    virtual ~Clock() = default;
    /// Milliseconds since the Unix epoch.
    virtual std::int64_t wall_ms() const = 0;
    /// Monotonic milliseconds, arbitrary origin.
    virtual double steady_ms() const = 0;
};

class SystemClock final : public Clock {
public:
    std::int64_t wall_ms() const override;
    double steady_ms() const override;
};

/// Wall time is frozen at a settable value; steady time never advances,
/// so every measured elapsed time is exactly zero.
class FixedClock final : public Clock {
public:
    explicit FixedClock(std::int64_t wall_ms = 1'700'000'000'000) : wall_(wall_ms) {}
    std::int64_t wall_ms() const override { return wall_.load(); }
    double steady_ms() const override { return 0.0; }
    void set(std::int64_t wall_ms) { wall_.store(wall_ms); }
    void advance(std::int64_t ms) { wall_.fetch_add(ms); }

private:
    std::atomic<std::int64_t> wall_;
};

} // namespace albank
