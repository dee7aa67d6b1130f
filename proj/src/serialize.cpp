#include "qu/serialize.hpp"

#include "qu/errors.hpp"

namespace qu {

using nlohmann::json;

namespace {

std::string enum_name(const json& j, const char* what) {
    if (!j.is_string()) throw ValidationError(std::string(what) + " must be a string");
    return j.get<std::string>();
}

template <typename T>
std::vector<T> list_or_empty(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return {};
    return j.at(key).get<std::vector<T>>();
}

}  // namespace

void to_json(json& j, IntentRoute route) { j = std::string(to_string(route)); }
void from_json(const json& j, IntentRoute& route) {
    auto name = enum_name(j, "route");
    auto r = route_from_string(name);
    if (!r) throw ValidationError("unknown route '" + name + "'");
    route = *r;
}

void to_json(json& j, Facet facet) { j = std::string(to_string(facet)); }
void from_json(const json& j, Facet& facet) {
    auto name = enum_name(j, "facet");
    auto f = facet_from_string(name);
    if (!f) throw ValidationError("unknown facet '" + name + "'");
    facet = *f;
}

void to_json(json& j, DenialCategory category) { j = std::string(to_string(category)); }
void from_json(const json& j, DenialCategory& category) {
    auto name = enum_name(j, "denial category");
    auto c = denial_category_from_string(name);
    if (!c) throw ValidationError("unknown denial category '" + name + "'");
    category = *c;
}

void to_json(json& j, const Query& q) {
    j = json{{"text", q.text}, {"request_id", q.request_id}};
    if (q.locale) j["locale"] = *q.locale;
}
void from_json(const json& j, Query& q) {
    q.text = j.at("text").get<std::string>();
    q.request_id = j.value("request_id", "");
    q.locale.reset();
    if (j.contains("locale") && !j.at("locale").is_null()) q.locale = j.at("locale").get<std::string>();
}

void to_json(json& j, const ProfileLocation& loc) {
    j = json{{"city", loc.city}, {"region", loc.region}, {"country", loc.country}};
}
void from_json(const json& j, ProfileLocation& loc) {
    loc.city = j.value("city", "");
    loc.region = j.value("region", "");
    loc.country = j.value("country", "");
}

void to_json(json& j, const MemberProfile& p) {
    j = json{{"titles", p.titles},
             {"skills", p.skills},
             {"industries", p.industries},
             {"education", p.education},
             {"network_company_ids", p.network_company_ids}};
    if (p.location) j["location"] = *p.location;
    if (p.years_experience) j["years_experience"] = *p.years_experience;
}
void from_json(const json& j, MemberProfile& p) {
    p = MemberProfile{};
    if (j.contains("location") && !j.at("location").is_null()) {
        p.location = j.at("location").get<ProfileLocation>();
    }
    p.titles = list_or_empty<std::string>(j, "titles");
    p.skills = list_or_empty<std::string>(j, "skills");
    p.industries = list_or_empty<std::string>(j, "industries");
    p.education = list_or_empty<std::string>(j, "education");
    p.network_company_ids = list_or_empty<std::string>(j, "network_company_ids");
    if (j.contains("years_experience") && !j.at("years_experience").is_null()) {
        p.years_experience = j.at("years_experience").get<int>();
    }
}

void to_json(json& j, const ResolvedPlace& p) {
    j = json{{"place_id", p.place_id}, {"display", p.display}};
}
void from_json(const json& j, ResolvedPlace& p) {
    p.place_id = j.at("place_id").get<std::string>();
    p.display = j.value("display", "");
}

void to_json(json& j, const ToolCall& c) {
    j = json{{"tool", c.tool_name}, {"arguments", c.arguments}, {"call_index", c.call_index}};
}
void from_json(const json& j, ToolCall& c) {
    c.tool_name = j.at("tool").get<std::string>();
    c.arguments = j.value("arguments", json::object());
    c.call_index = j.value("call_index", 0);
}

void to_json(json& j, const DenialNotice& d) {
    j = json{{"message", d.message}, {"category", d.category}};
}
void from_json(const json& j, DenialNotice& d) {
    d.message = j.at("message").get<std::string>();
    d.category = j.at("category").get<DenialCategory>();
}

void to_json(json& j, const FacetSuggestion& s) {
    j = json{{"facet", s.facet}, {"suggested_values", s.suggested_values}, {"trigger", s.trigger}};
}
void from_json(const json& j, FacetSuggestion& s) {
    s.facet = j.at("facet").get<Facet>();
    s.suggested_values = j.at("suggested_values").get<std::vector<std::string>>();
    s.trigger = j.value("trigger", "");
}

void to_json(json& j, const StageTiming& t) { j = json{{"stage", t.stage}, {"ms", t.ms}}; }
void from_json(const json& j, StageTiming& t) {
    t.stage = j.at("stage").get<std::string>();
    t.ms = j.at("ms").get<double>();
}

void to_json(json& j, const UnderstandingResult& r) {
    j = json{{"schema_version", kSchemaVersion},
             {"route", r.route},
             {"tags", r.tags},
             {"rewritten_query", r.rewritten_query ? json(*r.rewritten_query) : json(nullptr)},
             {"facet_suggestions", r.facet_suggestions},
             {"denial", r.denial ? json(*r.denial) : json(nullptr)},
             {"timings", r.timings},
             {"flags", r.flags}};
}
void from_json(const json& j, UnderstandingResult& r) {
    if (j.value("schema_version", kSchemaVersion) != kSchemaVersion) {
        throw ValidationError("unsupported schema_version");
    }
    r = UnderstandingResult{};
    r.route = j.at("route").get<IntentRoute>();
    for (const auto& t : list_or_empty<json>(j, "tags")) r.tags.push_back(t.get<FacetTag>());
    if (j.contains("rewritten_query") && !j.at("rewritten_query").is_null()) {
        r.rewritten_query = j.at("rewritten_query").get<std::string>();
    }
    r.facet_suggestions = list_or_empty<FacetSuggestion>(j, "facet_suggestions");
    if (j.contains("denial") && !j.at("denial").is_null()) r.denial = j.at("denial").get<DenialNotice>();
    r.timings = list_or_empty<StageTiming>(j, "timings");
    r.flags = list_or_empty<std::string>(j, "flags");
}

json payload_to_json(const FacetTag& tag) {
    return std::visit([](const auto& v) { return json(v); }, tag.payload());
}

FacetTag tag_from_payload(Facet facet, const json& value) {
    auto need = [&](bool ok, const char* type) {
        if (!ok) {
            throw ValidationError(std::string("facet ") + std::string(to_string(facet)) +
                                  " expects a " + type + " value");
        }
    };
    switch (facet) {
        case Facet::Title:
            need(value.is_string(), "string");
            return FacetTag::title(value.get<std::string>());
        case Facet::Company:
            need(value.is_string(), "string");
            return FacetTag::company(value.get<std::string>());
        case Facet::Seniority:
            need(value.is_string(), "string");
            return FacetTag::seniority(value.get<std::string>());
        case Facet::Industry:
            need(value.is_string(), "string");
            return FacetTag::industry(value.get<std::string>());
        case Facet::GeoLocation:
            need(value.is_object() && value.contains("place_id"), "place object");
            return FacetTag::geo_location(value.get<ResolvedPlace>());
        case Facet::EasyApply:
            need(value.is_boolean(), "boolean");
            return FacetTag::easy_apply(value.get<bool>());
        case Facet::JobInNetwork:
            need(value.is_boolean(), "boolean");
            return FacetTag::job_in_network(value.get<bool>());
        case Facet::DatePostedWindow:
            need(value.is_number_integer(), "integer");
            return FacetTag::date_posted_window(value.get<int>());
        case Facet::MaxApplicants:
            need(value.is_number_integer(), "integer");
            return FacetTag::max_applicants(value.get<int>());
    }
    throw ValidationError("unknown facet");
}

}  // namespace qu

namespace nlohmann {

void adl_serializer<qu::FacetTag>::to_json(json& j, const qu::FacetTag& tag) {
    j = json{{"facet", tag.facet()},
             {"value", qu::payload_to_json(tag)},
             {"confidence", tag.confidence()}};
    if (tag.span()) j["span"] = json::array({tag.span()->begin, tag.span()->end});
}

qu::FacetTag adl_serializer<qu::FacetTag>::from_json(const json& j) {
    auto tag = qu::tag_from_payload(j.at("facet").get<qu::Facet>(), j.at("value"));
    if (j.contains("confidence")) tag.set_confidence(j.at("confidence").get<double>());
    if (j.contains("span") && !j.at("span").is_null()) {
        const auto& s = j.at("span");
        if (!s.is_array() || s.size() != 2) throw qu::ValidationError("span must be [begin, end]");
        tag.set_span(qu::CharSpan{s[0].get<std::size_t>(), s[1].get<std::size_t>()});
    }
    return tag;
}

}  // namespace nlohmann
