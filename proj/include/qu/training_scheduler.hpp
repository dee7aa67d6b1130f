#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace qu {

struct SftExample {
    std::string prompt;
    std::string target;
    std::optional<std::vector<double>> token_logprobs;  // one per target token

    bool operator==(const SftExample&) const = default;
};

struct TaskDataset {
    std::string task_id;
    std::vector<SftExample> examples;

    bool operator==(const TaskDataset&) const = default;
};

/// Throws ValidationError on an empty task id, no examples, an empty target
/// or duplicate task ids.
void validate_datasets(std::span<const TaskDataset> datasets);

enum class BatchMode { Homogeneous, Heterogeneous };

std::string_view to_string(BatchMode mode);
std::optional<BatchMode> batch_mode_from_string(std::string_view name);

struct BatchEntry {
    std::string task_id;
    std::size_t example_index = 0;

    bool operator==(const BatchEntry&) const = default;
    auto operator<=>(const BatchEntry&) const = default;
};

struct BatchManifest {
    BatchMode mode = BatchMode::Homogeneous;
    std::size_t batch_size = 1;
    std::uint64_t seed = 0;
    std::vector<std::vector<BatchEntry>> batches;

    nlohmann::json to_json() const;
    static BatchManifest from_json(const nlohmann::json& doc);
    bool operator==(const BatchManifest&) const = default;
};

/// Seeded generator with a portable draw, so manifests are identical across
/// standard libraries (std::uniform_int_distribution and std::shuffle are not).
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed);
    std::uint64_t next();
    /// Uniform in [0, bound); bound must be > 0.
    std::uint64_t below(std::uint64_t bound);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
        }
    }

private:
    std::uint64_t state_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Brings every task up to the largest task's size by sampling its own
/// examples with replacement. Originals keep their positions; extras are
/// appended.
std::vector<TaskDataset> upsample(std::span<const TaskDataset> datasets, std::uint64_t seed);

struct ScheduleOptions {
    /// Homogeneous mode only: fixed task order instead of a shuffled batch order.
    /// Must name every task exactly once.
    std::optional<std::vector<std::string>> curriculum;
};

/// Heterogeneous: one seeded shuffle of the pooled examples, cut into batches.
/// Homogeneous: each task shuffled and cut separately (the last batch of a task
/// may be short), then the batch order is shuffled. Every example appears
/// exactly once in either mode.
BatchManifest schedule(std::span<const TaskDataset> datasets, BatchMode mode, std::size_t batch_size,
                       std::uint64_t seed, const ScheduleOptions& options = {});

/// Negative summed target-token log-probability. Throws ValidationError when
/// the log-probabilities are missing, positive or not finite.
double sft_loss(const SftExample& example);

/// Sum of sft_loss over the examples.
double corpus_loss(std::span<const SftExample> examples);

/// Line-delimited records {"task_id", "prompt", "target", optional "token_logprobs"},
/// grouped by task in first-appearance order. Blank lines are skipped.
/// Throws DatasetFormatError with the offending line number.
std::vector<TaskDataset> load_task_datasets(std::istream& in);

}  // namespace qu
