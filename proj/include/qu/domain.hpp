#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "qu/taxonomy.hpp"

namespace qu {

inline constexpr std::size_t kMaxQueryChars = 512;

struct Query {
    std::string text;
    std::optional<std::string> locale;
    std::string request_id;

    bool operator==(const Query&) const = default;
};

/// Throws ValidationError when text is blank or longer than kMaxQueryChars characters.
void validate_query(const Query& query);

struct ProfileLocation {
    std::string city;
    std::string region;
    std::string country;

    std::string display() const;
    bool operator==(const ProfileLocation&) const = default;
};

struct MemberProfile {
    std::optional<ProfileLocation> location;
    std::vector<std::string> titles;  // most recent first
    std::vector<std::string> skills;
    std::vector<std::string> industries;  // taxonomy ids
    std::vector<std::string> education;
    std::optional<int> years_experience;
    std::vector<std::string> network_company_ids;

    bool operator==(const MemberProfile&) const = default;
};

/// Dedupes every list (order-preserving).
MemberProfile normalized(MemberProfile profile);

/// Throws ValidationError on unknown industry ids or negative experience.
void validate_profile(const MemberProfile& profile, const TaxonomyConfig& taxonomy);

enum class IntentRoute { CriteriaSearch, SelfReferenceSearch, NonJobRelated, TrustViolation };

inline constexpr IntentRoute kAllRoutes[] = {IntentRoute::CriteriaSearch,
                                             IntentRoute::SelfReferenceSearch,
                                             IntentRoute::NonJobRelated,
                                             IntentRoute::TrustViolation};

std::string_view to_string(IntentRoute route);
std::optional<IntentRoute> route_from_string(std::string_view name);

enum class Facet {
    Title,
    Company,
    GeoLocation,
    Seniority,
    Industry,
    EasyApply,
    DatePostedWindow,
    MaxApplicants,
    JobInNetwork
};

inline constexpr Facet kAllFacets[] = {Facet::Title,         Facet::Company,
                                       Facet::GeoLocation,   Facet::Seniority,
                                       Facet::Industry,      Facet::EasyApply,
                                       Facet::DatePostedWindow, Facet::MaxApplicants,
                                       Facet::JobInNetwork};

std::string_view to_string(Facet facet);
std::optional<Facet> facet_from_string(std::string_view name);

struct ResolvedPlace {
    std::string place_id;
    std::string display;

    bool operator==(const ResolvedPlace&) const = default;
};

/// Half-open character (code point) range into the query text.
struct CharSpan {
    std::size_t begin = 0;
    std::size_t end = 0;

    bool operator==(const CharSpan&) const = default;
};

/// One extracted facet. The payload alternative is fixed by the facet and
/// can only be set through the named constructors.
class FacetTag {
public:
    using Payload = std::variant<std::string, ResolvedPlace, bool, int>;

    static FacetTag title(std::string normalized_title);
    static FacetTag company(std::string normalized_company);
    static FacetTag geo_location(ResolvedPlace place);
    static FacetTag seniority(std::string taxonomy_id);
    static FacetTag industry(std::string taxonomy_id);
    static FacetTag easy_apply(bool enabled);
    static FacetTag date_posted_window(int days);
    static FacetTag max_applicants(int threshold);
    static FacetTag job_in_network(bool enabled);

    Facet facet() const { return facet_; }
    const Payload& payload() const { return payload_; }

    const std::string& text() const { return std::get<std::string>(payload_); }
    const ResolvedPlace& place() const { return std::get<ResolvedPlace>(payload_); }
    bool flag() const { return std::get<bool>(payload_); }
    int number() const { return std::get<int>(payload_); }

    const std::optional<CharSpan>& span() const { return span_; }
    double confidence() const { return confidence_; }

    FacetTag& set_span(std::optional<CharSpan> span);
    FacetTag& set_confidence(double confidence);

    /// Facet and payload equal; span and confidence ignored.
    bool same_payload(const FacetTag& other) const {
        return facet_ == other.facet_ && payload_ == other.payload_;
    }

    /// Stable text key for the (facet, payload) pair.
    std::string payload_key() const;

    bool operator==(const FacetTag&) const = default;

private:
    FacetTag(Facet facet, Payload payload) : facet_(facet), payload_(std::move(payload)) {}

    Facet facet_;
    Payload payload_;
    std::optional<CharSpan> span_;
    double confidence_ = 1.0;
};

struct ToolCall {
    std::string tool_name;
    nlohmann::json arguments = nlohmann::json::object();
    int call_index = 0;

    bool operator==(const ToolCall&) const = default;
};

enum class DenialCategory { Offensive, Violent, Discriminatory, SelfHarm, OtherHarmful };

std::string_view to_string(DenialCategory category);
std::optional<DenialCategory> denial_category_from_string(std::string_view name);

inline constexpr std::string_view kDenialMessage =
    "This search query may violate our Professional Community Policies. "
    "Edit your search to try again";

struct DenialNotice {
    std::string message{kDenialMessage};
    DenialCategory category = DenialCategory::OtherHarmful;

    bool operator==(const DenialNotice&) const = default;
};

struct FacetSuggestion {
    Facet facet = Facet::Industry;
    std::vector<std::string> suggested_values;
    std::string trigger;

    bool operator==(const FacetSuggestion&) const = default;
};

struct StageTiming {
    std::string stage;
    double ms = 0.0;

    bool operator==(const StageTiming&) const = default;
};

struct UnderstandingResult {
    IntentRoute route = IntentRoute::CriteriaSearch;
    std::vector<FacetTag> tags;
    std::optional<std::string> rewritten_query;
    std::vector<FacetSuggestion> facet_suggestions;
    std::optional<DenialNotice> denial;
    std::vector<StageTiming> timings;
    /// Free-form markers: "non_job_related", "degraded", "rejected:<tool>", ...
    std::vector<std::string> flags;

    bool has_flag(std::string_view flag) const;
    bool operator==(const UnderstandingResult&) const = default;
};

// Violation names reported by validate_result.
namespace violation {
inline constexpr std::string_view kDenialIffTrust = "denial-iff-trust";
inline constexpr std::string_view kTrustImpliesEmpty = "trust-implies-empty";
inline constexpr std::string_view kRewriteOnlySelfReference = "rewrite-only-self-reference";
inline constexpr std::string_view kDenialMessageExact = "denial-message-exact";
inline constexpr std::string_view kSuggestionNonEmpty = "suggestion-nonempty";
}  // namespace violation

/// Empty when every UnderstandingResult invariant holds, otherwise the name
/// of each violated invariant (each reported once).
std::vector<std::string> validate_result(const UnderstandingResult& result);

/// FacetTag invariants that need the source query (span bounds).
std::vector<std::string> validate_tag(const FacetTag& tag, std::string_view query_text);

}  // namespace qu
