#include <doctest.h>

#include "qu/errors.hpp"
#include "qu/serialize.hpp"
#include "support.hpp"

using namespace qu;
using nlohmann::json;

namespace {

template <typename T>
void check_round_trip(const T& value) {
    const json j = value;
    const T back = j.get<T>();
    CHECK(back == value);
    CHECK(json(back) == j);
}

UnderstandingResult full_result() {
    UnderstandingResult r;
    r.route = IntentRoute::SelfReferenceSearch;
    auto geo = FacetTag::geo_location({"sf_bay_area", "San Francisco Bay Area, California"});
    geo.set_span(CharSpan{3, 11}).set_confidence(0.75);
    r.tags = {FacetTag::title("software engineer"), geo, FacetTag::easy_apply(true),
              FacetTag::date_posted_window(7), FacetTag::max_applicants(50), FacetTag::industry("fintech"),
              FacetTag::seniority("senior"), FacetTag::company("acme"), FacetTag::job_in_network(true)};
    r.rewritten_query = "jobs near Bay Area, CA";
    r.facet_suggestions = {{Facet::Industry, {"banking", "payments"}, "industry:fintech"}};
    r.timings = {{"validate", 0.5}, {"backend", 12.25}, {"total", 13.0}};
    r.flags = {"unfilled_slot:education"};
    return r;
}

}  // namespace

TEST_CASE("round trips") {
    check_round_trip(Query{"find me a job in Naples", std::string("en-US"), "req-1"});
    check_round_trip(Query{"x", std::nullopt, ""});
    check_round_trip(test::bay_area_engineer());
    check_round_trip(MemberProfile{});
    check_round_trip(ToolCall{"location_tool", {{"place", "Naples"}}, 3});
    check_round_trip(DenialNotice{std::string(kDenialMessage), DenialCategory::SelfHarm});
    check_round_trip(FacetSuggestion{Facet::Industry, {"banking"}, "industry:fintech"});
    check_round_trip(full_result());

    UnderstandingResult denied;
    denied.route = IntentRoute::TrustViolation;
    denied.denial = DenialNotice{};
    check_round_trip(denied);
}

TEST_CASE("every facet payload round trips") {
    for (const auto& tag : full_result().tags) {
        const json j = tag;
        CHECK(j.get<FacetTag>() == tag);
    }
}

TEST_CASE("canonical result shape") {
    const json j = full_result();
    CHECK(j.at("schema_version") == 1);
    CHECK(j.at("route") == "self_reference");
    CHECK(j.at("rewritten_query") == "jobs near Bay Area, CA");
    CHECK(j.at("denial").is_null());
    CHECK(j.at("tags")[1].at("facet") == "geo_location");
    CHECK(j.at("tags")[1].at("value").at("place_id") == "sf_bay_area");
    CHECK(j.at("tags")[1].at("span") == json::array({3, 11}));
    CHECK(j.at("tags")[1].at("confidence") == 0.75);
    CHECK_FALSE(j.at("tags")[0].contains("span"));
    CHECK(j.at("timings")[1] == json{{"stage", "backend"}, {"ms", 12.25}});

    UnderstandingResult plain;
    const json p = plain;
    CHECK(p.at("rewritten_query").is_null());
    CHECK(p.at("tags") == json::array());
}

TEST_CASE("confidence defaults to 1 when absent") {
    const auto tag = json{{"facet", "title"}, {"value", "engineer"}}.get<FacetTag>();
    CHECK(tag.confidence() == 1.0);
}

TEST_CASE("payload type must match the facet") {
    CHECK_THROWS((json{{"facet", "easy_apply"}, {"value", "yes"}}.get<FacetTag>()));
    CHECK_THROWS((json{{"facet", "date_posted_window"}, {"value", 0}}.get<FacetTag>()));
    CHECK_THROWS_AS((json{{"facet", "colour"}, {"value", "red"}}.get<FacetTag>()), ValidationError);
    CHECK_THROWS((json{{"facet", "title"}, {"value", "x"}, {"confidence", 2.0}}.get<FacetTag>()));
}

TEST_CASE("unknown enum names are rejected") {
    CHECK_THROWS_AS(json("weather").get<IntentRoute>(), ValidationError);
    CHECK_THROWS_AS(json("rude").get<DenialCategory>(), ValidationError);
}
