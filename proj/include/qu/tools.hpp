#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <future>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "qu/domain.hpp"
#include "qu/taxonomy.hpp"

namespace qu {

enum class ArgType { String, Integer, Boolean, StringOrInteger };

std::string_view to_string(ArgType type);

struct ArgSpec {
    std::string name;
    ArgType type = ArgType::String;
    bool required = true;
};

/// Everything an executor may read. Borrowed; must outlive the execution.
struct ExecContext {
    const TaxonomyConfig* taxonomy = nullptr;
    const MemberProfile* profile = nullptr;
    std::string_view query_text;
};

struct Rejected {
    std::string reason;
    bool operator==(const Rejected&) const = default;
};

struct UnknownTool {
    std::string tool_name;
    bool operator==(const UnknownTool&) const = default;
};

using ExecutorOutcome = std::variant<FacetTag, Rejected>;
using ToolOutcome = std::variant<FacetTag, Rejected, UnknownTool>;

/// Executors receive arguments already checked against the ToolSpec argument schema.
using Executor = std::function<ExecutorOutcome(const nlohmann::json& args, const ExecContext&)>;

struct ToolSpec {
    std::string name;
    std::vector<ArgSpec> arguments;
    Facet produces = Facet::Title;
    std::string description;
    Executor executor;
};

struct ToolResult {
    int call_index = 0;
    std::string tool_name;
    ToolOutcome outcome;
    double duration_ms = 0.0;

    bool is_tag() const { return std::holds_alternative<FacetTag>(outcome); }
    bool is_rejected() const { return std::holds_alternative<Rejected>(outcome); }
    bool is_unknown_tool() const { return std::holds_alternative<UnknownTool>(outcome); }
    const FacetTag& tag() const { return std::get<FacetTag>(outcome); }
};

/// Every tool accepts this optional argument in addition to its schema.
inline constexpr std::string_view kConfidenceArg = "confidence";

class ToolRegistry {
public:
    /// Throws ConfigError on a duplicate or empty name.
    void add(ToolSpec spec);
    /// Replaces the executor of a registered tool (used to instrument tools in tests).
    void replace_executor(std::string_view name, Executor executor);

    const ToolSpec* find(std::string_view name) const;
    const std::vector<ToolSpec>& specs() const { return specs_; }
    std::string tool_for(Facet facet) const;

    /// The nine built-in facet tools.
    static ToolRegistry with_defaults();

private:
    std::vector<ToolSpec> specs_;
};

/// Tool name that produces the facet in the default registry.
std::string_view default_tool_for(Facet facet);

/// One prompt line per tool: "name(arg: type, arg?: type) -> facet: description".
std::string describe_tools(const ToolRegistry& registry);

// ---------------------------------------------------------------------------
// Normalizers (each is idempotent on its own output)

struct LocationResolved {
    std::string place_id;
    bool operator==(const LocationResolved&) const = default;
};
struct LocationAmbiguous {
    std::vector<std::string> candidates;  // taxonomy order
    bool operator==(const LocationAmbiguous&) const = default;
};
struct LocationNotFound {
    bool operator==(const LocationNotFound&) const = default;
};
using LocationResolution = std::variant<LocationResolved, LocationAmbiguous, LocationNotFound>;

/// Alias lookup; several matches are narrowed to the one in the member's
/// country when exactly one such candidate exists.
LocationResolution resolve_location(std::string_view raw, const MemberProfile* profile,
                                    const TaxonomyConfig& taxonomy);

/// Integer days >= 1, or one of "past 24 hours" (1), "past week" (7), "past month" (30).
std::variant<int, Rejected> normalize_date_posted(const nlohmann::json& arg);

/// Upper bound on applicants; values < 1 are rejected.
std::variant<int, Rejected> normalize_num_applicants(const nlohmann::json& arg);

/// Company/title normalization: trimmed, whitespace collapsed, case-folded.
std::variant<std::string, Rejected> normalize_free_text(const nlohmann::json& arg);

// ---------------------------------------------------------------------------
// Execution

/// Validates the call against its ToolSpec and runs the executor. Never throws
/// for bad model output: unknown tools and bad arguments become outcomes.
ToolResult execute(const ToolCall& call, const ToolRegistry& registry, const ExecContext& ctx);

/// Runs tools concurrently as calls arrive. submit() starts the call right
/// away (at most max_in_flight run at once); collect() waits for all and
/// returns results in call_index order.
class ConcurrentToolRunner {
public:
    static constexpr std::size_t kDefaultMaxInFlight = 8;

    ConcurrentToolRunner(const ToolRegistry& registry, ExecContext ctx,
                         std::size_t max_in_flight = kDefaultMaxInFlight);
    ~ConcurrentToolRunner();

    ConcurrentToolRunner(const ConcurrentToolRunner&) = delete;
    ConcurrentToolRunner& operator=(const ConcurrentToolRunner&) = delete;

    void submit(ToolCall call);
    std::vector<ToolResult> collect();
    std::size_t submitted() const { return pending_.size(); }

private:
    void acquire();
    void release();

    const ToolRegistry* registry_;
    ExecContext ctx_;
    std::size_t max_in_flight_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::size_t in_flight_ = 0;
    std::vector<std::future<ToolResult>> pending_;
};

std::vector<ToolResult> execute_all(std::span<const ToolCall> calls, const ToolRegistry& registry,
                                    const ExecContext& ctx,
                                    std::size_t max_in_flight = ConcurrentToolRunner::kDefaultMaxInFlight);

}  // namespace qu
