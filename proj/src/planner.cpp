#include "qu/planner.hpp"

#include <algorithm>

#include "qu/errors.hpp"
#include "qu/stream_parser.hpp"

namespace qu {

std::string_view to_string(PlanAction action) {
    switch (action) {
        case PlanAction::Deny: return "deny";
        case PlanAction::Rewrite: return "rewrite";
        case PlanAction::Tag: return "tag";
        case PlanAction::SuggestFacets: return "suggest_facets";
        case PlanAction::ForwardFlagged: return "forward_flagged";
    }
    return "tag";
}

int route_precedence(IntentRoute route) {
    switch (route) {
        case IntentRoute::TrustViolation: return 3;
        case IntentRoute::SelfReferenceSearch: return 2;
        case IntentRoute::CriteriaSearch: return 1;
        case IntentRoute::NonJobRelated: return 0;
    }
    return 0;
}

IntentRoute resolve_precedence(const std::set<IntentRoute>& signals) {
    if (signals.empty()) throw BackendMalformed("no route signal");
    return *std::max_element(signals.begin(), signals.end(), [](IntentRoute a, IntentRoute b) {
        return route_precedence(a) < route_precedence(b);
    });
}

std::set<IntentRoute> route_signals(const ToolCall& planner_output) {
    if (planner_output.tool_name != kRouteTool) {
        throw BackendMalformed("expected a route_query call, got '" + planner_output.tool_name + "'");
    }
    const auto& args = planner_output.arguments;
    if (!args.is_object() || !args.contains("category")) {
        throw BackendMalformed("route_query call without a category");
    }
    const auto& category = args.at("category");
    std::vector<nlohmann::json> names;
    if (category.is_array()) {
        names.assign(category.begin(), category.end());
    } else {
        names.push_back(category);
    }
    if (names.empty()) throw BackendMalformed("route_query category list is empty");

    std::set<IntentRoute> out;
    for (const auto& n : names) {
        if (!n.is_string()) throw BackendMalformed("route category must be a string");
        auto route = route_from_string(n.get<std::string>());
        if (!route) throw BackendMalformed("unknown route category '" + n.get<std::string>() + "'");
        out.insert(*route);
    }
    return out;
}

IntentRoute route_of(const ToolCall& planner_output) {
    return resolve_precedence(route_signals(planner_output));
}

std::vector<PlanAction> actions_for(IntentRoute route) {
    switch (route) {
        case IntentRoute::TrustViolation: return {PlanAction::Deny};
        case IntentRoute::SelfReferenceSearch: return {PlanAction::Rewrite, PlanAction::Tag};
        case IntentRoute::NonJobRelated: return {PlanAction::ForwardFlagged, PlanAction::Tag};
        case IntentRoute::CriteriaSearch: return {PlanAction::Tag};
    }
    return {PlanAction::Tag};
}

PlanDecision decide(std::span<const ToolCall> route_calls) {
    if (route_calls.empty()) throw BackendMalformed("backend output has no route_query call");
    std::set<IntentRoute> signals;
    PlanDecision decision;
    for (const auto& call : route_calls) {
        auto s = route_signals(call);
        signals.insert(s.begin(), s.end());
        const auto& args = call.arguments;
        if (decision.rationale.empty() && args.contains("rationale") && args.at("rationale").is_string()) {
            decision.rationale = args.at("rationale").get<std::string>();
        }
        if (args.contains("trust_category") && args.at("trust_category").is_string()) {
            if (auto c = denial_category_from_string(args.at("trust_category").get<std::string>())) {
                decision.denial_category = *c;
            }
        }
    }
    decision.route = resolve_precedence(signals);
    decision.actions = actions_for(decision.route);
    return decision;
}

std::vector<std::string> validate_plan(const PlanDecision& d) {
    std::vector<std::string> out;
    const auto& a = d.actions;
    auto pos = [&](PlanAction x) { return std::find(a.begin(), a.end(), x); };
    const bool trust = d.route == IntentRoute::TrustViolation;
    if (trust != (a == std::vector<PlanAction>{PlanAction::Deny})) out.emplace_back("trust-iff-deny-only");
    if (d.route == IntentRoute::SelfReferenceSearch &&
        !(pos(PlanAction::Rewrite) != a.end() && pos(PlanAction::Tag) != a.end() &&
          pos(PlanAction::Rewrite) < pos(PlanAction::Tag))) {
        out.emplace_back("rewrite-before-tag");
    }
    if (d.route == IntentRoute::NonJobRelated &&
        (pos(PlanAction::ForwardFlagged) == a.end() || pos(PlanAction::Deny) != a.end())) {
        out.emplace_back("non-job-forwarded");
    }
    return out;
}

PlanDecision plan(const Query& query, const MemberProfile* profile, LlmBackend& backend,
                  const PromptLibrary& prompts, const PlannerOptions& options) {
    auto request = make_request(prompts, "plan", query.text, prompt_vars(profile, nullptr, nullptr),
                                options.model, options.timeout_ms);
    StreamParser parser;
    std::vector<ToolCall> route_calls;
    std::optional<ParseError> error;
    auto consume = [&](std::vector<ParserEvent> events) {
        for (auto& e : events) {
            if (auto* done = std::get_if<ToolCallComplete>(&e)) {
                if (done->call.tool_name == kRouteTool) route_calls.push_back(std::move(done->call));
            } else if (auto* err = std::get_if<ParseError>(&e)) {
                error = *err;
            }
        }
    };
    backend.complete_stream(request, [&](const ChatChunk& chunk) {
        consume(parser.feed(chunk.delta));
        return !error.has_value();
    });
    if (!error) consume(parser.finish());
    if (error) throw BackendMalformed("planner output: " + error->description);
    return decide(route_calls);
}

}  // namespace qu
