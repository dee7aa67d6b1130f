#include "qu/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qu/errors.hpp"
#include "qu/facet_suggester.hpp"
#include "qu/planner.hpp"
#include "qu/rewriter.hpp"
#include "qu/stream_parser.hpp"
#include "qu/text.hpp"

namespace qu {

std::string_view to_string(CallTopology topology) {
    return topology == CallTopology::Combined ? "combined" : "split";
}

std::optional<CallTopology> call_topology_from_string(std::string_view name) {
    if (name == "combined") return CallTopology::Combined;
    if (name == "split") return CallTopology::Split;
    return std::nullopt;
}

Pipeline::Pipeline(std::shared_ptr<const TaxonomyConfig> taxonomy, std::shared_ptr<const ToolRegistry> registry,
                   std::shared_ptr<LlmBackend> backend, PipelineConfig config, std::shared_ptr<Clock> clock,
                   std::shared_ptr<LatencyRecorder> recorder, PromptLibrary prompts)
    : taxonomy_(std::move(taxonomy)),
      registry_(std::move(registry)),
      backend_(std::move(backend)),
      config_(std::move(config)),
      clock_(std::move(clock)),
      recorder_(std::move(recorder)),
      prompts_(std::move(prompts)) {
    if (!taxonomy_ || !registry_ || !backend_ || !clock_ || !recorder_) {
        throw ConfigError("pipeline needs a taxonomy, registry, backend, clock and recorder");
    }
    if (config_.timeout_ms < 1) throw ConfigError("timeout_ms must be >= 1");
    if (config_.max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
}

namespace {

// Back-to-back stage intervals; they tile [start, last lap].
class Laps {
public:
    explicit Laps(const Clock& clock) : clock_(&clock), start_(clock.now_ms()), last_(start_) {}

    void lap(std::string stage) {
        const double now = clock_->now_ms();
        timings_.push_back({std::move(stage), now - last_});
        last_ = now;
    }

    double elapsed() const { return clock_->now_ms() - start_; }
    std::vector<StageTiming>& timings() { return timings_; }

private:
    const Clock* clock_;
    double start_;
    double last_;
    std::vector<StageTiming> timings_;
};

}  // namespace

class Pipeline::Run {
public:
    Run(const Pipeline& p, const UnderstandRequest& request)
        : p_(p), query_(request.query), laps_(*p.clock_) {
        validate_query(query_);
        if (request.profile) {
            profile_ = normalized(*request.profile);
            validate_profile(*profile_, *p_.taxonomy_);
        }
        laps_.lap("validate");
    }

    UnderstandingResult go() {
        try {
            if (p_.config_.topology == CallTopology::Combined) {
                combined();
            } else {
                split();
            }
        } catch (const BackendError& e) {
            if (!p_.config_.degrade_on_backend_failure) {
                if (e.kind() == BackendErrorKind::Timeout) throw BudgetExhausted(e.what());
                throw;
            }
            laps_.lap("degrade");
            result_ = UnderstandingResult{};
            result_.flags = {"degraded", std::string("degraded:") + to_string(e.kind())};
        }

        result_.flags = text::dedupe(std::move(result_.flags));
        result_.timings = std::move(laps_.timings());
        result_.timings.push_back({"total", laps_.elapsed()});

        if (auto bad = validate_result(result_); !bad.empty()) {
            throw std::logic_error("pipeline produced an invalid result: " + text::join(bad, ", "));
        }
        for (const auto& t : result_.timings) p_.recorder_->record(t.stage, t.ms);
        return std::move(result_);
    }

private:
    const MemberProfile* profile() const { return profile_ ? &*profile_ : nullptr; }

    int remaining() const {
        const double left = p_.config_.timeout_ms - laps_.elapsed();
        if (left < 1.0) throw BackendTimeout("request budget exhausted");
        return static_cast<int>(std::floor(left));
    }

    ExecContext context() const { return {p_.taxonomy_.get(), profile(), query_.text}; }

    void combined() {
        const auto vars = prompt_vars(profile(), p_.registry_.get(), p_.taxonomy_.get());
        const auto request =
            make_request(p_.prompts_, "understand", query_.text, vars, p_.config_.model, remaining());

        ConcurrentToolRunner runner(*p_.registry_, context(), p_.config_.max_in_flight);
        StreamParser parser;
        std::vector<ToolCall> route_calls;
        std::vector<ToolCall> held;  // facet calls seen before the route is known
        std::optional<std::vector<Slot>> slots;
        std::optional<ParseError> error;
        bool routed = false;
        bool trust = false;

        auto on_call = [&](ToolCall call) {
            if (call.tool_name == kRouteTool) {
                if (route_signals(call).count(IntentRoute::TrustViolation)) trust = true;
                route_calls.push_back(std::move(call));
                if (!routed) {
                    routed = true;
                    if (!trust) {
                        for (auto& h : held) runner.submit(std::move(h));
                    }
                    held.clear();
                }
                return;
            }
            if (call.tool_name == kSelfReferenceTool) {
                auto found = slots_from_call(call);
                if (!slots) slots.emplace();
                slots->insert(slots->end(), found.begin(), found.end());
                return;
            }
            if (trust) return;
            if (routed) {
                runner.submit(std::move(call));
            } else {
                held.push_back(std::move(call));
            }
        };
        auto consume = [&](std::vector<ParserEvent> events) {
            for (auto& e : events) {
                if (error || trust) return;
                if (auto* done = std::get_if<ToolCallComplete>(&e)) {
                    on_call(std::move(done->call));
                } else if (auto* err = std::get_if<ParseError>(&e)) {
                    error = *err;
                }
            }
        };

        p_.backend_->complete_stream(request, [&](const ChatChunk& chunk) {
            consume(parser.feed(chunk.delta));
            return !error && !trust;
        });
        if (!error && !trust) consume(parser.finish());
        laps_.lap("backend");
        if (error) throw BackendMalformed("model output: " + error->description);

        const auto decision = decide(route_calls);
        if (decision.route == IntentRoute::TrustViolation) {
            deny(decision);
            return;
        }

        auto results = runner.collect();
        laps_.lap("tools_wait");

        result_.route = decision.route;
        absorb(results);
        if (decision.route == IntentRoute::SelfReferenceSearch) {
            apply_rewrite(slots);
            laps_.lap("rewrite");
        }
        finish_route(decision.route);
    }

    void split() {
        const auto decision =
            plan(query_, profile(), *p_.backend_, p_.prompts_, {p_.config_.model, remaining()});
        laps_.lap("plan");
        if (decision.route == IntentRoute::TrustViolation) {
            deny(decision);
            return;
        }
        result_.route = decision.route;

        std::string tag_text = query_.text;
        if (decision.route == IntentRoute::SelfReferenceSearch) {
            std::optional<std::vector<Slot>> slots;
            if (profile()) {
                slots = detect_slots(query_, *p_.backend_, p_.prompts_, {p_.config_.model, remaining()});
            }
            apply_rewrite(slots);
            if (result_.rewritten_query) tag_text = *result_.rewritten_query;
            laps_.lap("rewrite");
        }

        const auto vars = prompt_vars(profile(), p_.registry_.get(), p_.taxonomy_.get());
        const auto request = make_request(p_.prompts_, "tag", tag_text, vars, p_.config_.model, remaining());
        ConcurrentToolRunner runner(*p_.registry_, context(), p_.config_.max_in_flight);
        StreamParser parser;
        std::optional<ParseError> error;
        auto consume = [&](std::vector<ParserEvent> events) {
            for (auto& e : events) {
                if (error) return;
                if (auto* done = std::get_if<ToolCallComplete>(&e)) {
                    const auto& name = done->call.tool_name;
                    if (name != kRouteTool && name != kSelfReferenceTool) runner.submit(std::move(done->call));
                } else if (auto* err = std::get_if<ParseError>(&e)) {
                    error = *err;
                }
            }
        };
        p_.backend_->complete_stream(request, [&](const ChatChunk& chunk) {
            consume(parser.feed(chunk.delta));
            return !error;
        });
        if (!error) consume(parser.finish());
        laps_.lap("backend");
        if (error) throw BackendMalformed("tagging output: " + error->description);

        auto results = runner.collect();
        laps_.lap("tools_wait");
        absorb(results);
        finish_route(result_.route);
    }

    void deny(const PlanDecision& decision) {
        result_ = UnderstandingResult{};
        result_.route = IntentRoute::TrustViolation;
        result_.denial = DenialNotice{std::string(kDenialMessage), decision.denial_category};
    }

    void absorb(std::vector<ToolResult>& results) {
        for (auto& r : results) {
            if (r.is_tag()) {
                const auto& tag = r.tag();
                const bool dup = std::any_of(result_.tags.begin(), result_.tags.end(),
                                             [&](const FacetTag& t) { return t.same_payload(tag); });
                if (!dup) result_.tags.push_back(tag);
            } else if (r.is_rejected()) {
                result_.flags.push_back("rejected:" + r.tool_name);
            } else {
                result_.flags.push_back("unknown_tool:" + r.tool_name);
            }
        }
    }

    void downgrade(std::string reason) {
        result_.route = IntentRoute::CriteriaSearch;
        result_.rewritten_query.reset();
        result_.flags.push_back("rewrite_skipped:" + std::move(reason));
    }

    void apply_rewrite(const std::optional<std::vector<Slot>>& slots) {
        if (!profile()) return downgrade("no_profile");
        if (!slots || slots->empty()) return downgrade("no_slots");
        auto outcome = rewrite(query_, *slots, *profile(), p_.taxonomy_.get());
        if (outcome.slots_filled.empty()) return downgrade("unfilled");
        result_.rewritten_query = std::move(outcome.rewritten);
        for (auto s : outcome.unfilled) result_.flags.push_back("unfilled_slot:" + std::string(to_string(s)));
    }

    void finish_route(IntentRoute planned) {
        if (planned == IntentRoute::NonJobRelated) result_.flags.push_back("non_job_related");
        result_.facet_suggestions = suggest(query_, result_.tags, profile(), *p_.taxonomy_,
                                            SuggestOptions{p_.config_.suggest_top_k});
        laps_.lap("suggest");
    }

    const Pipeline& p_;
    const Query& query_;
    std::optional<MemberProfile> profile_;
    Laps laps_;
    UnderstandingResult result_;
};

UnderstandingResult Pipeline::understand(const UnderstandRequest& request) const {
    return Run(*this, request).go();
}

}  // namespace qu
