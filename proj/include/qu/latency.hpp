#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace qu {

/// Nearest-rank percentile: the ceil(q * n)-th smallest sample, q in (0, 1].
/// Throws NoSamples on an empty input and std::invalid_argument for q outside (0, 1].
double nearest_rank_percentile(std::vector<double> samples, double q);

/// Per-stage latency samples in fixed-capacity ring buffers. Safe for
/// concurrent writers and readers.
class LatencyRecorder {
public:
    static constexpr std::size_t kDefaultCapacity = 65536;

    explicit LatencyRecorder(std::size_t capacity = kDefaultCapacity);

    void record(std::string_view stage, double ms);

    /// Snapshot of the retained samples (at most capacity, oldest dropped first).
    std::vector<double> samples(std::string_view stage) const;
    std::vector<std::string> stages() const;
    std::size_t capacity() const { return capacity_; }

    double percentile(std::string_view stage, double q) const;

    /// {"capacity": N, "stages": {"<stage>": {"count", "p50", "p95", "p99"}}}
    /// All percentiles of one stage come from the same snapshot.
    nlohmann::json metrics() const;

private:
    struct Ring {
        std::vector<double> data;
        std::size_t next = 0;
    };

    std::size_t capacity_;
    mutable std::mutex mu_;
    std::map<std::string, Ring, std::less<>> rings_;
};

}  // namespace qu
