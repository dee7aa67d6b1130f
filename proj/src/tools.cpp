#include "qu/tools.hpp"

#include <algorithm>
#include <chrono>

#include "qu/errors.hpp"
#include "qu/text.hpp"

namespace qu {

using nlohmann::json;

std::string_view to_string(ArgType type) {
    switch (type) {
        case ArgType::String: return "string";
        case ArgType::Integer: return "integer";
        case ArgType::Boolean: return "boolean";
        case ArgType::StringOrInteger: return "string|integer";
    }
    return "string";
}

// ---------------------------------------------------------------------------
// Normalizers

LocationResolution resolve_location(std::string_view raw, const MemberProfile* profile,
                                    const TaxonomyConfig& taxonomy) {
    if (text::trim(raw).empty()) return LocationNotFound{};
    const auto candidates = taxonomy.places_by_alias(raw);
    if (candidates.empty()) {
        // Place ids are accepted too, but only when no alias claims the text.
        if (const auto* exact = taxonomy.find_place(raw)) return LocationResolved{exact->id};
        return LocationNotFound{};
    }
    if (candidates.size() == 1) return LocationResolved{candidates.front()->id};

    if (profile && profile->location && !profile->location->country.empty()) {
        const auto country = text::fold_case(profile->location->country);
        const Place* in_country = nullptr;
        std::size_t hits = 0;
        for (const auto* p : candidates) {
            if (text::fold_case(p->country) == country) {
                in_country = p;
                ++hits;
            }
        }
        if (hits == 1) return LocationResolved{in_country->id};
    }
    LocationAmbiguous out;
    for (const auto* p : candidates) out.candidates.push_back(p->id);
    return out;
}

std::variant<int, Rejected> normalize_date_posted(const json& arg) {
    if (arg.is_number_integer()) {
        const auto days = arg.get<long long>();
        if (days < 1) return Rejected{"date posted window must be at least 1 day"};
        if (days > 36500) return Rejected{"date posted window too large"};
        return static_cast<int>(days);
    }
    if (arg.is_string()) {
        static const std::pair<std::string_view, int> kPhrases[] = {
            {"past 24 hours", 1}, {"past week", 7}, {"past month", 30}};
        const auto phrase = text::normalize_label(arg.get<std::string>());
        for (const auto& [name, days] : kPhrases) {
            if (phrase == name) return days;
        }
        return Rejected{"unknown date posted phrase '" + arg.get<std::string>() + "'"};
    }
    return Rejected{"date posted window must be a phrase or integer days"};
}

std::variant<int, Rejected> normalize_num_applicants(const json& arg) {
    if (!arg.is_number_integer()) return Rejected{"applicant threshold must be an integer"};
    const auto n = arg.get<long long>();
    if (n < 1) return Rejected{"applicant threshold must be at least 1"};
    if (n > 1'000'000'000) return Rejected{"applicant threshold too large"};
    return static_cast<int>(n);
}

std::variant<std::string, Rejected> normalize_free_text(const json& arg) {
    if (!arg.is_string()) return Rejected{"expected a string"};
    auto out = text::normalize_label(arg.get<std::string>());
    if (out.empty()) return Rejected{"empty value"};
    return out;
}

// ---------------------------------------------------------------------------
// Built-in executors

namespace {

template <typename T>
bool rejected(const std::variant<T, Rejected>& v) {
    return std::holds_alternative<Rejected>(v);
}

ExecutorOutcome location_exec(const json& args, const ExecContext& ctx) {
    const auto raw = args.at("place").get<std::string>();
    const auto res = resolve_location(raw, ctx.profile, *ctx.taxonomy);
    if (const auto* hit = std::get_if<LocationResolved>(&res)) {
        const auto* place = ctx.taxonomy->find_place(hit->place_id);
        return FacetTag::geo_location(ResolvedPlace{place->id, place->display()});
    }
    if (const auto* amb = std::get_if<LocationAmbiguous>(&res)) {
        return Rejected{"ambiguous location '" + raw + "': " + text::join(amb->candidates, ", ")};
    }
    return Rejected{"unknown location '" + raw + "'"};
}

ExecutorOutcome company_exec(const json& args, const ExecContext&) {
    auto v = normalize_free_text(args.at("name"));
    if (rejected(v)) return std::get<Rejected>(v);
    return FacetTag::company(std::get<std::string>(std::move(v)));
}

ExecutorOutcome title_exec(const json& args, const ExecContext&) {
    auto v = normalize_free_text(args.at("title"));
    if (rejected(v)) return std::get<Rejected>(v);
    return FacetTag::title(std::get<std::string>(std::move(v)));
}

ExecutorOutcome easy_apply_exec(const json& args, const ExecContext&) {
    return FacetTag::easy_apply(args.at("enabled").get<bool>());
}

ExecutorOutcome date_posted_exec(const json& args, const ExecContext&) {
    auto v = normalize_date_posted(args.at("window"));
    if (rejected(v)) return std::get<Rejected>(v);
    return FacetTag::date_posted_window(std::get<int>(v));
}

ExecutorOutcome num_applicants_exec(const json& args, const ExecContext&) {
    auto v = normalize_num_applicants(args.at("max"));
    if (rejected(v)) return std::get<Rejected>(v);
    return FacetTag::max_applicants(std::get<int>(v));
}

ExecutorOutcome job_in_network_exec(const json& args, const ExecContext& ctx) {
    const bool enabled = args.at("enabled").get<bool>();
    if (enabled && (ctx.profile == nullptr || ctx.profile->network_company_ids.empty())) {
        return Rejected{"member has no network companies to restrict to"};
    }
    return FacetTag::job_in_network(enabled);
}

ExecutorOutcome seniority_exec(const json& args, const ExecContext& ctx) {
    const auto raw = args.at("level").get<std::string>();
    if (const auto* s = ctx.taxonomy->match_seniority(raw)) return FacetTag::seniority(s->id);
    return Rejected{"unknown seniority '" + raw + "'"};
}

ExecutorOutcome industry_exec(const json& args, const ExecContext& ctx) {
    const auto raw = args.at("industry").get<std::string>();
    if (const auto* i = ctx.taxonomy->match_industry(raw)) return FacetTag::industry(i->id);
    return Rejected{"unknown industry '" + raw + "'"};
}

bool type_matches(const json& v, ArgType type) {
    switch (type) {
        case ArgType::String: return v.is_string();
        case ArgType::Integer: return v.is_number_integer();
        case ArgType::Boolean: return v.is_boolean();
        case ArgType::StringOrInteger: return v.is_string() || v.is_number_integer();
    }
    return false;
}

std::optional<std::string> argument_error(const ToolSpec& spec, const json& args) {
    for (const auto& [key, value] : args.items()) {
        if (key == kConfidenceArg) {
            if (!value.is_number() || value.get<double>() < 0.0 || value.get<double>() > 1.0) {
                return std::string("confidence must be a number in [0, 1]");
            }
            continue;
        }
        auto it = std::find_if(spec.arguments.begin(), spec.arguments.end(),
                               [&](const ArgSpec& a) { return a.name == key; });
        if (it == spec.arguments.end()) return "unexpected argument '" + key + "'";
        if (!type_matches(value, it->type)) {
            return "argument '" + key + "' must be " + std::string(to_string(it->type));
        }
    }
    for (const auto& a : spec.arguments) {
        if (a.required && !args.contains(a.name)) return "missing argument '" + a.name + "'";
    }
    return std::nullopt;
}

// Span of the first string argument's text inside the query, when present verbatim.
std::optional<CharSpan> locate(const ToolSpec& spec, const json& args, std::string_view query) {
    if (query.empty()) return std::nullopt;
    for (const auto& a : spec.arguments) {
        if (!args.contains(a.name) || !args.at(a.name).is_string()) continue;
        const auto needle = text::trim(args.at(a.name).get_ref<const std::string&>());
        if (needle.empty()) return std::nullopt;
        for (auto pos = text::ifind(query, needle); pos; pos = text::ifind(query, needle, *pos + 1)) {
            if (text::at_word_boundary(query, *pos, needle.size())) {
                return CharSpan{text::char_index(query, *pos),
                                text::char_index(query, *pos + needle.size())};
            }
        }
        return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------------------
// Registry

void ToolRegistry::add(ToolSpec spec) {
    if (spec.name.empty()) throw ConfigError("tool name must be non-empty");
    if (find(spec.name)) throw ConfigError("duplicate tool '" + spec.name + "'");
    if (!spec.executor) throw ConfigError("tool '" + spec.name + "' has no executor");
    specs_.push_back(std::move(spec));
}

void ToolRegistry::replace_executor(std::string_view name, Executor executor) {
    for (auto& s : specs_) {
        if (s.name == name) {
            s.executor = std::move(executor);
            return;
        }
    }
    throw ConfigError("no tool named '" + std::string(name) + "'");
}

const ToolSpec* ToolRegistry::find(std::string_view name) const {
    for (const auto& s : specs_) {
        if (s.name == name) return &s;
    }
    return nullptr;
}

std::string ToolRegistry::tool_for(Facet facet) const {
    for (const auto& s : specs_) {
        if (s.produces == facet) return s.name;
    }
    return std::string(default_tool_for(facet));
}

std::string_view default_tool_for(Facet facet) {
    switch (facet) {
        case Facet::Title: return "title_tool";
        case Facet::Company: return "company_tool";
        case Facet::GeoLocation: return "location_tool";
        case Facet::Seniority: return "seniority_tool";
        case Facet::Industry: return "industry_tool";
        case Facet::EasyApply: return "easy_apply_tool";
        case Facet::DatePostedWindow: return "date_posted_tool";
        case Facet::MaxApplicants: return "num_applicants_tool";
        case Facet::JobInNetwork: return "job_in_network_tool";
    }
    return "title_tool";
}

ToolRegistry ToolRegistry::with_defaults() {
    ToolRegistry r;
    r.add({"location_tool", {{"place", ArgType::String, true}}, Facet::GeoLocation,
           "geographic location named in the query", location_exec});
    r.add({"company_tool", {{"name", ArgType::String, true}}, Facet::Company,
           "company named in the query", company_exec});
    r.add({"title_tool", {{"title", ArgType::String, true}}, Facet::Title,
           "job title sought", title_exec});
    r.add({"seniority_tool", {{"level", ArgType::String, true}}, Facet::Seniority,
           "seniority level from the taxonomy", seniority_exec});
    r.add({"industry_tool", {{"industry", ArgType::String, true}}, Facet::Industry,
           "industry explicitly mentioned, from the taxonomy", industry_exec});
    r.add({"easy_apply_tool", {{"enabled", ArgType::Boolean, true}}, Facet::EasyApply,
           "restrict to jobs with the easy apply feature", easy_apply_exec});
    r.add({"date_posted_tool", {{"window", ArgType::StringOrInteger, true}},
           Facet::DatePostedWindow,
           "posting recency: days, or 'past 24 hours' | 'past week' | 'past month'",
           date_posted_exec});
    r.add({"num_applicants_tool", {{"max", ArgType::Integer, true}}, Facet::MaxApplicants,
           "at most this many applicants", num_applicants_exec});
    r.add({"job_in_network_tool", {{"enabled", ArgType::Boolean, true}}, Facet::JobInNetwork,
           "restrict to companies where the member has connections", job_in_network_exec});
    return r;
}

std::string describe_tools(const ToolRegistry& registry) {
    std::string out;
    for (const auto& s : registry.specs()) {
        out += "- " + s.name + "(";
        for (std::size_t i = 0; i < s.arguments.size(); ++i) {
            if (i) out += ", ";
            out += s.arguments[i].name + (s.arguments[i].required ? "" : "?") + ": " +
                   std::string(to_string(s.arguments[i].type));
        }
        out += ") -> " + std::string(to_string(s.produces));
        if (!s.description.empty()) out += ": " + s.description;
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Execution

ToolResult execute(const ToolCall& call, const ToolRegistry& registry, const ExecContext& ctx) {
    const auto start = std::chrono::steady_clock::now();
    ToolResult result{call.call_index, call.tool_name, Rejected{}, 0.0};

    const ToolSpec* spec = registry.find(call.tool_name);
    if (spec == nullptr) {
        result.outcome = UnknownTool{call.tool_name};
    } else if (!call.arguments.is_object()) {
        result.outcome = Rejected{"arguments must be an object"};
    } else if (auto err = argument_error(*spec, call.arguments)) {
        result.outcome = Rejected{*err};
    } else {
        try {
            auto outcome = spec->executor(call.arguments, ctx);
            if (auto* tag = std::get_if<FacetTag>(&outcome)) {
                if (tag->facet() != spec->produces) {
                    outcome = Rejected{"executor produced facet " + std::string(to_string(tag->facet()))};
                } else {
                    if (call.arguments.contains(kConfidenceArg)) {
                        tag->set_confidence(call.arguments.at(kConfidenceArg).get<double>());
                    }
                    tag->set_span(locate(*spec, call.arguments, ctx.query_text));
                }
            }
            std::visit([&](auto&& v) { result.outcome = std::move(v); }, std::move(outcome));
        } catch (const std::exception& e) {
            result.outcome = Rejected{std::string("executor failed: ") + e.what()};
        }
    }
    result.duration_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return result;
}

ConcurrentToolRunner::ConcurrentToolRunner(const ToolRegistry& registry, ExecContext ctx,
                                           std::size_t max_in_flight)
    : registry_(&registry), ctx_(ctx), max_in_flight_(std::max<std::size_t>(1, max_in_flight)) {}

ConcurrentToolRunner::~ConcurrentToolRunner() {
    for (auto& f : pending_) {
        if (f.valid()) f.wait();
    }
}

void ConcurrentToolRunner::acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < max_in_flight_; });
    ++in_flight_;
}

void ConcurrentToolRunner::release() {
    {
        std::lock_guard lock(mu_);
        --in_flight_;
    }
    cv_.notify_one();
}

void ConcurrentToolRunner::submit(ToolCall call) {
    pending_.push_back(std::async(std::launch::async, [this, call = std::move(call)] {
        acquire();
        auto result = execute(call, *registry_, ctx_);
        release();
        return result;
    }));
}

std::vector<ToolResult> ConcurrentToolRunner::collect() {
    std::vector<ToolResult> out;
    out.reserve(pending_.size());
    for (auto& f : pending_) out.push_back(f.get());
    pending_.clear();
    std::stable_sort(out.begin(), out.end(),
                     [](const ToolResult& a, const ToolResult& b) { return a.call_index < b.call_index; });
    return out;
}

std::vector<ToolResult> execute_all(std::span<const ToolCall> calls, const ToolRegistry& registry,
                                    const ExecContext& ctx, std::size_t max_in_flight) {
    ConcurrentToolRunner runner(registry, ctx, max_in_flight);
    for (const auto& c : calls) runner.submit(c);
    return runner.collect();
}

}  // namespace qu
