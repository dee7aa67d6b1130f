#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>

#include "qu/clock.hpp"
#include "qu/domain.hpp"
#include "qu/latency.hpp"
#include "qu/llm_gateway.hpp"
#include "qu/prompts.hpp"
#include "qu/taxonomy.hpp"
#include "qu/tools.hpp"

namespace qu {

enum class CallTopology {
    Combined,  // one backend call carries the route, slots and facet tool calls
    Split      // plan, rewrite and tag as separate calls
};

std::string_view to_string(CallTopology topology);
std::optional<CallTopology> call_topology_from_string(std::string_view name);

struct PipelineConfig {
    int timeout_ms = 600;
    CallTopology topology = CallTopology::Combined;
    std::size_t max_in_flight = ConcurrentToolRunner::kDefaultMaxInFlight;
    std::size_t suggest_top_k = 5;
    /// On backend failure return a flagged CriteriaSearch pass-through instead
    /// of throwing. When off, timeouts raise BudgetExhausted and other backend
    /// failures propagate.
    bool degrade_on_backend_failure = true;
    std::string model;
};

struct UnderstandRequest {
    Query query;
    std::optional<MemberProfile> profile;
};

/// End-to-end query understanding. Thread-safe: understand() may be called
/// concurrently as long as the backend is.
class Pipeline {
public:
    Pipeline(std::shared_ptr<const TaxonomyConfig> taxonomy, std::shared_ptr<const ToolRegistry> registry,
             std::shared_ptr<LlmBackend> backend, PipelineConfig config = {},
             std::shared_ptr<Clock> clock = steady_clock(),
             std::shared_ptr<LatencyRecorder> recorder = std::make_shared<LatencyRecorder>(),
             PromptLibrary prompts = PromptLibrary::builtin());

    /// Throws ValidationError on a bad query or profile.
    UnderstandingResult understand(const UnderstandRequest& request) const;

    const PipelineConfig& config() const { return config_; }
    const TaxonomyConfig& taxonomy() const { return *taxonomy_; }
    const ToolRegistry& registry() const { return *registry_; }
    LlmBackend& backend() const { return *backend_; }
    const PromptLibrary& prompts() const { return prompts_; }
    LatencyRecorder& recorder() const { return *recorder_; }
    Clock& clock() const { return *clock_; }

private:
    class Run;

    std::shared_ptr<const TaxonomyConfig> taxonomy_;
    std::shared_ptr<const ToolRegistry> registry_;
    std::shared_ptr<LlmBackend> backend_;
    PipelineConfig config_;
    std::shared_ptr<Clock> clock_;
    std::shared_ptr<LatencyRecorder> recorder_;
    PromptLibrary prompts_;
};

}  // namespace qu
