#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qu/domain.hpp"
#include "qu/llm_gateway.hpp"
#include "qu/prompts.hpp"

namespace qu {

enum class PlanAction { Deny, Rewrite, Tag, SuggestFacets, ForwardFlagged };

std::string_view to_string(PlanAction action);

struct PlanDecision {
    IntentRoute route = IntentRoute::CriteriaSearch;
    std::vector<PlanAction> actions;
    std::string rationale;
    DenialCategory denial_category = DenialCategory::OtherHarmful;

    bool operator==(const PlanDecision&) const = default;
};

/// Name of the routing tool call the backend emits.
inline constexpr std::string_view kRouteTool = "route_query";

/// Trust > self-reference > criteria > non-job.
int route_precedence(IntentRoute route);

/// Highest-precedence route among the signals. Requires a non-empty set.
IntentRoute resolve_precedence(const std::set<IntentRoute>& signals);

/// Maps one route_query call onto its route. The "category" argument is a
/// category name or a list of names (multi-signal); throws BackendMalformed
/// for a different tool, an absent category or an unknown name.
IntentRoute route_of(const ToolCall& planner_output);

/// All route signals carried by one route_query call.
std::set<IntentRoute> route_signals(const ToolCall& planner_output);

/// Ordered actions for a route.
std::vector<PlanAction> actions_for(IntentRoute route);

/// Builds the decision from every route_query call in a response. Throws
/// BackendMalformed when there is none.
PlanDecision decide(std::span<const ToolCall> route_calls);

/// Empty when the decision satisfies its invariants.
std::vector<std::string> validate_plan(const PlanDecision& decision);

struct PlannerOptions {
    std::string model;
    int timeout_ms = 600;
};

/// One planning call against the backend ("plan" prompt). Throws
/// BackendTimeout / BackendMalformed (and transport errors) as typed failures.
PlanDecision plan(const Query& query, const MemberProfile* profile, LlmBackend& backend,
                  const PromptLibrary& prompts, const PlannerOptions& options = {});

}  // namespace qu
