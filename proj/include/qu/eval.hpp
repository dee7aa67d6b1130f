#pragma once

#include <cstddef>
#include <functional>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qu/domain.hpp"
#include "qu/pipeline.hpp"

namespace qu {

struct LabeledExample {
    Query query;
    std::optional<MemberProfile> profile;
    IntentRoute expected_route = IntentRoute::CriteriaSearch;
    std::vector<FacetTag> expected_tags;
};

/// Line-delimited records:
/// {"query": "<text>" | {...}, "profile"?: {...}, "route": "<route>", "tags": [{"facet", "value"}, ...]}
/// Blank lines are skipped. Throws DatasetFormatError with the line number.
std::vector<LabeledExample> load_labeled_dataset(std::istream& in);

struct Counts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    /// nullopt when the denominator is zero.
    std::optional<double> precision() const;
    std::optional<double> recall() const;

    Counts& operator+=(const Counts& other);
    bool operator==(const Counts&) const = default;
};

struct MetricRow {
    std::string name;
    Counts counts;
    bool operator==(const MetricRow&) const = default;
};

inline constexpr std::string_view kMatchingRule =
    "exact match: same facet and same normalized value within one example, no partial credit";

inline constexpr std::string_view kPlannerRow = "query_planner";

struct MetricReport {
    std::size_t examples = 0;
    std::vector<MetricRow> tools;   // sorted by tool name
    std::vector<MetricRow> routes;  // one-vs-rest per route, in route order
    MetricRow planner;              // micro-average over routes

    const MetricRow* tool(std::string_view name) const;

    nlohmann::json to_json() const;
    static MetricReport from_json(const nlohmann::json& doc);

    /// Aligned table: planner first, then one row per tool.
    std::string render_table() const;

    bool operator==(const MetricReport&) const = default;
};

/// Key two tags must share to match: facet plus normalized value.
std::string match_key(const FacetTag& tag);

/// Greedy multiset matching of one example's tags, grouped by tool.
/// Returns per-tool counts (tool names from `tool_for`).
std::vector<MetricRow> match_example(std::span<const FacetTag> predicted, std::span<const FacetTag> expected,
                                     const std::function<std::string(Facet)>& tool_for);

struct Prediction {
    IntentRoute route = IntentRoute::CriteriaSearch;
    std::vector<FacetTag> tags;
};

using Predictor = std::function<Prediction(const LabeledExample&)>;

struct EvalOptions {
    std::size_t threads = 1;
    /// Tool name for each facet; the default registry's names when empty.
    std::function<std::string(Facet)> tool_for;
};

MetricReport evaluate(std::span<const LabeledExample> dataset, const Predictor& predict,
                      const EvalOptions& options = {});

/// Runs each example through the pipeline.
Predictor pipeline_predictor(const Pipeline& pipeline);

struct MetricDelta {
    std::string name;
    std::optional<double> precision;  // b - a; nullopt when either side is undefined
    std::optional<double> recall;
};

struct Comparison {
    std::vector<MetricDelta> deltas;  // tools present in both reports, by name
    MetricDelta planner;
    std::vector<std::string> only_in_a;
    std::vector<std::string> only_in_b;

    nlohmann::json to_json() const;
    std::string render_table() const;
};

/// Signed deltas of b relative to a (the baseline).
Comparison compare(const MetricReport& a, const MetricReport& b);

}  // namespace qu
