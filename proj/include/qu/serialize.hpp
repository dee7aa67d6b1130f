#pragma once

// Canonical JSON forms of the domain types (documented in docs/schema_v1.md).
// Enum names are the lower_snake strings from to_string(); unknown names throw
// ValidationError. Optional fields are omitted (requests) or null (results).

#include <json.hpp>

#include "qu/domain.hpp"

namespace qu {

inline constexpr int kSchemaVersion = 1;

void to_json(nlohmann::json& j, IntentRoute route);
void from_json(const nlohmann::json& j, IntentRoute& route);
void to_json(nlohmann::json& j, Facet facet);
void from_json(const nlohmann::json& j, Facet& facet);
void to_json(nlohmann::json& j, DenialCategory category);
void from_json(const nlohmann::json& j, DenialCategory& category);

void to_json(nlohmann::json& j, const Query& q);
void from_json(const nlohmann::json& j, Query& q);
void to_json(nlohmann::json& j, const ProfileLocation& loc);
void from_json(const nlohmann::json& j, ProfileLocation& loc);
void to_json(nlohmann::json& j, const MemberProfile& p);
void from_json(const nlohmann::json& j, MemberProfile& p);
void to_json(nlohmann::json& j, const ResolvedPlace& p);
void from_json(const nlohmann::json& j, ResolvedPlace& p);
void to_json(nlohmann::json& j, const ToolCall& c);
void from_json(const nlohmann::json& j, ToolCall& c);
void to_json(nlohmann::json& j, const DenialNotice& d);
void from_json(const nlohmann::json& j, DenialNotice& d);
void to_json(nlohmann::json& j, const FacetSuggestion& s);
void from_json(const nlohmann::json& j, FacetSuggestion& s);
void to_json(nlohmann::json& j, const StageTiming& t);
void from_json(const nlohmann::json& j, StageTiming& t);
void to_json(nlohmann::json& j, const UnderstandingResult& r);
void from_json(const nlohmann::json& j, UnderstandingResult& r);

/// Payload-only JSON value of a tag ("value" field of the canonical form).
nlohmann::json payload_to_json(const FacetTag& tag);
FacetTag tag_from_payload(Facet facet, const nlohmann::json& value);

}  // namespace qu

namespace nlohmann {
template <>
struct adl_serializer<qu::FacetTag> {
    static void to_json(json& j, const qu::FacetTag& tag);
    static qu::FacetTag from_json(const json& j);
};
}  // namespace nlohmann
