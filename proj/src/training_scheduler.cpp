#include "qu/training_scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "qu/errors.hpp"
#include "qu/text.hpp"

namespace qu {

using nlohmann::json;

void validate_datasets(std::span<const TaskDataset> datasets) {
    std::set<std::string> ids;
    for (const auto& d : datasets) {
        if (d.task_id.empty()) throw ValidationError("task_id must be non-empty");
        if (d.examples.empty()) throw ValidationError("task '" + d.task_id + "' has no examples");
        if (!ids.insert(d.task_id).second) throw ValidationError("duplicate task '" + d.task_id + "'");
        for (const auto& e : d.examples) {
            if (e.target.empty()) throw ValidationError("task '" + d.task_id + "' has an empty target");
        }
    }
}

std::string_view to_string(BatchMode mode) {
    return mode == BatchMode::Homogeneous ? "homogeneous" : "heterogeneous";
}

std::optional<BatchMode> batch_mode_from_string(std::string_view name) {
    if (name == "homogeneous" || name == "homo") return BatchMode::Homogeneous;
    if (name == "heterogeneous" || name == "hetero") return BatchMode::Heterogeneous;
    return std::nullopt;
}

json BatchManifest::to_json() const {
    json out = {{"mode", std::string(qu::to_string(mode))},
                {"batch_size", batch_size},
                {"seed", seed},
                {"batches", json::array()}};
    for (const auto& b : batches) {
        json batch = json::array();
        for (const auto& e : b) batch.push_back(json::array({e.task_id, e.example_index}));
        out["batches"].push_back(std::move(batch));
    }
    return out;
}

BatchManifest BatchManifest::from_json(const json& doc) {
    BatchManifest m;
    auto mode = batch_mode_from_string(doc.at("mode").get<std::string>());
    if (!mode) throw ValidationError("unknown batch mode");
    m.mode = *mode;
    m.batch_size = doc.at("batch_size").get<std::size_t>();
    m.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& b : doc.at("batches")) {
        std::vector<BatchEntry> batch;
        for (const auto& e : b) batch.push_back({e.at(0).get<std::string>(), e.at(1).get<std::size_t>()});
        m.batches.push_back(std::move(batch));
    }
    return m;
}

// splitmix64 for both seeding and the generator itself.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

SeededRng::SeededRng(std::uint64_t seed) : state_(seed) {}

std::uint64_t SeededRng::next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t SeededRng::below(std::uint64_t bound) {
    // Rejection sampling removes modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = next();
    } while (x >= limit);
    return x % bound;
}

std::vector<TaskDataset> upsample(std::span<const TaskDataset> datasets, std::uint64_t seed) {
    validate_datasets(datasets);
    std::size_t target = 0;
    for (const auto& d : datasets) target = std::max(target, d.examples.size());

    std::vector<TaskDataset> out(datasets.begin(), datasets.end());
    for (std::size_t k = 0; k < out.size(); ++k) {
        auto& d = out[k];
        const std::size_t originals = d.examples.size();
        SeededRng rng(mix_seed(seed, k));
        while (d.examples.size() < target) {
            d.examples.push_back(d.examples[static_cast<std::size_t>(rng.below(originals))]);
        }
    }
    return out;
}

namespace {

std::vector<std::vector<BatchEntry>> cut(const std::vector<BatchEntry>& entries, std::size_t size) {
    std::vector<std::vector<BatchEntry>> out;
    for (std::size_t i = 0; i < entries.size(); i += size) {
        const auto end = std::min(entries.size(), i + size);
        out.emplace_back(entries.begin() + static_cast<std::ptrdiff_t>(i),
                         entries.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

constexpr std::uint64_t kPoolStream = 0x1000;
constexpr std::uint64_t kOrderStream = 0x2000;

}  // namespace

BatchManifest schedule(std::span<const TaskDataset> datasets, BatchMode mode, std::size_t batch_size,
                       std::uint64_t seed, const ScheduleOptions& options) {
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    validate_datasets(datasets);

    BatchManifest manifest;
    manifest.mode = mode;
    manifest.batch_size = batch_size;
    manifest.seed = seed;

    if (mode == BatchMode::Heterogeneous) {
        std::vector<BatchEntry> pool;
        for (const auto& d : datasets) {
            for (std::size_t i = 0; i < d.examples.size(); ++i) pool.push_back({d.task_id, i});
        }
        SeededRng rng(mix_seed(seed, kPoolStream));
        rng.shuffle(pool);
        manifest.batches = cut(pool, batch_size);
        return manifest;
    }

    std::map<std::string, std::vector<std::vector<BatchEntry>>> per_task;
    for (std::size_t k = 0; k < datasets.size(); ++k) {
        const auto& d = datasets[k];
        std::vector<BatchEntry> entries;
        for (std::size_t i = 0; i < d.examples.size(); ++i) entries.push_back({d.task_id, i});
        SeededRng rng(mix_seed(seed, k));
        rng.shuffle(entries);
        per_task[d.task_id] = cut(entries, batch_size);
    }

    if (options.curriculum) {
        const auto& order = *options.curriculum;
        std::set<std::string> named(order.begin(), order.end());
        if (named.size() != order.size() || named.size() != per_task.size() ||
            !std::all_of(order.begin(), order.end(), [&](const auto& t) { return per_task.count(t); })) {
            throw ValidationError("curriculum must list every task exactly once");
        }
        for (const auto& t : order) {
            for (auto& b : per_task[t]) manifest.batches.push_back(std::move(b));
        }
        return manifest;
    }

    // Keep dataset order before shuffling so the result does not depend on map ordering.
    for (const auto& d : datasets) {
        for (auto& b : per_task[d.task_id]) manifest.batches.push_back(std::move(b));
    }
    SeededRng rng(mix_seed(seed, kOrderStream));
    rng.shuffle(manifest.batches);
    return manifest;
}

double sft_loss(const SftExample& example) {
    if (!example.token_logprobs) throw ValidationError("example has no token log-probabilities");
    double sum = 0.0;
    for (double lp : *example.token_logprobs) {
        if (!std::isfinite(lp)) throw ValidationError("log-probability is not finite");
        if (lp > 0.0) throw ValidationError("log-probability must be <= 0");
        sum += lp;
    }
    return sum == 0.0 ? 0.0 : -sum;
}

double corpus_loss(std::span<const SftExample> examples) {
    double total = 0.0;
    for (const auto& e : examples) total += sft_loss(e);
    return total;
}

std::vector<TaskDataset> load_task_datasets(std::istream& in) {
    std::vector<TaskDataset> out;
    std::map<std::string, std::size_t> index;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            const auto rec = json::parse(line);
            SftExample ex;
            const auto task = rec.at("task_id").get<std::string>();
            ex.prompt = rec.at("prompt").get<std::string>();
            ex.target = rec.at("target").get<std::string>();
            if (task.empty()) throw DatasetFormatError(line_no, "empty task_id");
            if (ex.target.empty()) throw DatasetFormatError(line_no, "empty target");
            if (rec.contains("token_logprobs")) {
                ex.token_logprobs = rec.at("token_logprobs").get<std::vector<double>>();
            }
            auto [it, inserted] = index.emplace(task, out.size());
            if (inserted) out.push_back(TaskDataset{task, {}});
            out[it->second].examples.push_back(std::move(ex));
        } catch (const json::exception& e) {
            throw DatasetFormatError(line_no, e.what());
        }
    }
    return out;
}

}  // namespace qu
