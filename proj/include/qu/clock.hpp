#pragma once

#include <memory>
#include <mutex>

namespace qu {

/// Millisecond clock used by everything that measures or waits, so tests
/// can substitute virtual time.
class Clock {
public:
    virtual ~Clock() = default;
    virtual double now_ms() const = 0;
    virtual void sleep_ms(double ms) = 0;
};

class SteadyClock final : public Clock {
public:
    double now_ms() const override;
    void sleep_ms(double ms) override;
};

/// Virtual time: sleep_ms advances the clock instantly.
class ManualClock final : public Clock {
public:
    explicit ManualClock(double start_ms = 0.0) : now_(start_ms) {}

    double now_ms() const override;
    void sleep_ms(double ms) override;
    void advance(double ms) { sleep_ms(ms); }

private:
    mutable std::mutex mu_;
    double now_;
};

std::shared_ptr<Clock> steady_clock();

/// Measures one interval against a clock.
class Stopwatch {
public:
    explicit Stopwatch(const Clock& clock) : clock_(&clock), start_(clock.now_ms()) {}
    double elapsed_ms() const { return clock_->now_ms() - start_; }
    double start_ms() const { return start_; }

private:
    const Clock* clock_;
    double start_;
};

}  // namespace qu
