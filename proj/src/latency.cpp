#include "qu/latency.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qu/errors.hpp"

namespace qu {

double nearest_rank_percentile(std::vector<double> samples, double q) {
    if (samples.empty()) throw NoSamples("no latency samples recorded");
    if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("percentile must lie in (0, 1]");
    const auto n = samples.size();
    // The epsilon keeps products like 0.07 * 100 = 7.000000000000001 on rank 7.
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, n);
    auto nth = samples.begin() + static_cast<std::ptrdiff_t>(rank - 1);
    std::nth_element(samples.begin(), nth, samples.end());
    return *nth;
}

LatencyRecorder::LatencyRecorder(std::size_t capacity) : capacity_(std::max<std::size_t>(1, capacity)) {}

void LatencyRecorder::record(std::string_view stage, double ms) {
    std::lock_guard lock(mu_);
    auto it = rings_.find(stage);
    if (it == rings_.end()) it = rings_.emplace(std::string(stage), Ring{}).first;
    auto& ring = it->second;
    if (ring.data.size() < capacity_) {
        ring.data.push_back(ms);
    } else {
        ring.data[ring.next] = ms;
        ring.next = (ring.next + 1) % capacity_;
    }
}

std::vector<double> LatencyRecorder::samples(std::string_view stage) const {
    std::lock_guard lock(mu_);
    auto it = rings_.find(stage);
    return it == rings_.end() ? std::vector<double>{} : it->second.data;
}

std::vector<std::string> LatencyRecorder::stages() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& [name, _] : rings_) out.push_back(name);
    return out;
}

double LatencyRecorder::percentile(std::string_view stage, double q) const {
    return nearest_rank_percentile(samples(stage), q);
}

nlohmann::json LatencyRecorder::metrics() const {
    nlohmann::json stages = nlohmann::json::object();
    for (const auto& name : this->stages()) {
        auto snap = samples(name);
        if (snap.empty()) continue;
        stages[name] = {{"count", snap.size()},
                        {"p50", nearest_rank_percentile(snap, 0.50)},
                        {"p95", nearest_rank_percentile(snap, 0.95)},
                        {"p99", nearest_rank_percentile(snap, 0.99)}};
    }
    return {{"capacity", capacity_}, {"stages", stages}};
}

}  // namespace qu
