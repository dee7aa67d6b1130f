#include "qu/clock.hpp"

#include <chrono>
#include <thread>

namespace qu {

double SteadyClock::now_ms() const {
    using namespace std::chrono;
    return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

void SteadyClock::sleep_ms(double ms) {
    if (ms <= 0) return;
    std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
}

double ManualClock::now_ms() const {
    std::lock_guard lock(mu_);
    return now_;
}

void ManualClock::sleep_ms(double ms) {
    if (ms <= 0) return;
    std::lock_guard lock(mu_);
    now_ += ms;
}

std::shared_ptr<Clock> steady_clock() {
    static auto clock = std::make_shared<SteadyClock>();
    return clock;
}

}  // namespace qu
