#include "qu/domain.hpp"

#include <algorithm>
#include <cmath>

#include "qu/errors.hpp"
#include "qu/text.hpp"

namespace qu {

const char* to_string(BackendErrorKind kind) {
    switch (kind) {
        case BackendErrorKind::Timeout: return "backend_timeout";
        case BackendErrorKind::Transport: return "transport_error";
        case BackendErrorKind::Protocol: return "protocol_error";
        case BackendErrorKind::Malformed: return "backend_malformed";
    }
    return "backend_error";
}

void validate_query(const Query& query) {
    if (text::trim(query.text).empty()) {
        throw ValidationError("query text is empty");
    }
    if (text::char_count(query.text) > kMaxQueryChars) {
        throw ValidationError("query text exceeds " + std::to_string(kMaxQueryChars) +
                              " characters");
    }
}

std::string ProfileLocation::display() const {
    if (region.empty()) return city;
    if (city.empty()) return region;
    return city + ", " + region;
}

MemberProfile normalized(MemberProfile profile) {
    profile.titles = text::dedupe(profile.titles);
    profile.skills = text::dedupe(profile.skills);
    profile.industries = text::dedupe(profile.industries);
    profile.education = text::dedupe(profile.education);
    profile.network_company_ids = text::dedupe(profile.network_company_ids);
    return profile;
}

void validate_profile(const MemberProfile& profile, const TaxonomyConfig& taxonomy) {
    for (const auto& id : profile.industries) {
        if (taxonomy.find_industry(id) == nullptr) {
            throw ValidationError("profile industry '" + id + "' is not in the taxonomy");
        }
    }
    if (profile.years_experience && *profile.years_experience < 0) {
        throw ValidationError("years_experience must be non-negative");
    }
}

std::string_view to_string(IntentRoute route) {
    switch (route) {
        case IntentRoute::CriteriaSearch: return "criteria";
        case IntentRoute::SelfReferenceSearch: return "self_reference";
        case IntentRoute::NonJobRelated: return "non_job";
        case IntentRoute::TrustViolation: return "trust_violation";
    }
    return "criteria";
}

std::optional<IntentRoute> route_from_string(std::string_view name) {
    for (auto r : kAllRoutes) {
        if (to_string(r) == name) return r;
    }
    return std::nullopt;
}

std::string_view to_string(Facet facet) {
    switch (facet) {
        case Facet::Title: return "title";
        case Facet::Company: return "company";
        case Facet::GeoLocation: return "geo_location";
        case Facet::Seniority: return "seniority";
        case Facet::Industry: return "industry";
        case Facet::EasyApply: return "easy_apply";
        case Facet::DatePostedWindow: return "date_posted_window";
        case Facet::MaxApplicants: return "max_applicants";
        case Facet::JobInNetwork: return "job_in_network";
    }
    return "title";
}

std::optional<Facet> facet_from_string(std::string_view name) {
    for (auto f : kAllFacets) {
        if (to_string(f) == name) return f;
    }
    return std::nullopt;
}

FacetTag FacetTag::title(std::string normalized_title) {
    return FacetTag(Facet::Title, std::move(normalized_title));
}
FacetTag FacetTag::company(std::string normalized_company) {
    return FacetTag(Facet::Company, std::move(normalized_company));
}
FacetTag FacetTag::geo_location(ResolvedPlace place) {
    return FacetTag(Facet::GeoLocation, std::move(place));
}
FacetTag FacetTag::seniority(std::string taxonomy_id) {
    return FacetTag(Facet::Seniority, std::move(taxonomy_id));
}
FacetTag FacetTag::industry(std::string taxonomy_id) {
    return FacetTag(Facet::Industry, std::move(taxonomy_id));
}
FacetTag FacetTag::easy_apply(bool enabled) { return FacetTag(Facet::EasyApply, enabled); }
FacetTag FacetTag::job_in_network(bool enabled) { return FacetTag(Facet::JobInNetwork, enabled); }

FacetTag FacetTag::date_posted_window(int days) {
    if (days < 1) throw ValidationError("date posted window must be at least 1 day");
    return FacetTag(Facet::DatePostedWindow, days);
}

FacetTag FacetTag::max_applicants(int threshold) {
    if (threshold < 1) throw ValidationError("applicant threshold must be at least 1");
    return FacetTag(Facet::MaxApplicants, threshold);
}

FacetTag& FacetTag::set_span(std::optional<CharSpan> span) {
    if (span && span->begin > span->end) throw ValidationError("span begin after end");
    span_ = span;
    return *this;
}

FacetTag& FacetTag::set_confidence(double confidence) {
    if (!std::isfinite(confidence) || confidence < 0.0 || confidence > 1.0) {
        throw ValidationError("confidence must lie in [0, 1]");
    }
    confidence_ = confidence;
    return *this;
}

std::string FacetTag::payload_key() const {
    std::string key{to_string(facet_)};
    key.push_back('=');
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::string>) {
                key += v;
            } else if constexpr (std::is_same_v<T, ResolvedPlace>) {
                key += v.place_id;
            } else if constexpr (std::is_same_v<T, bool>) {
                key += v ? "true" : "false";
            } else {
                key += std::to_string(v);
            }
        },
        payload_);
    return key;
}

std::string_view to_string(DenialCategory category) {
    switch (category) {
        case DenialCategory::Offensive: return "offensive";
        case DenialCategory::Violent: return "violent";
        case DenialCategory::Discriminatory: return "discriminatory";
        case DenialCategory::SelfHarm: return "self_harm";
        case DenialCategory::OtherHarmful: return "other_harmful";
    }
    return "other_harmful";
}

std::optional<DenialCategory> denial_category_from_string(std::string_view name) {
    for (auto c : {DenialCategory::Offensive, DenialCategory::Violent,
                   DenialCategory::Discriminatory, DenialCategory::SelfHarm,
                   DenialCategory::OtherHarmful}) {
        if (to_string(c) == name) return c;
    }
    return std::nullopt;
}

bool UnderstandingResult::has_flag(std::string_view flag) const {
    return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

std::vector<std::string> validate_result(const UnderstandingResult& result) {
    std::vector<std::string> out;
    const bool trust = result.route == IntentRoute::TrustViolation;
    if (trust != result.denial.has_value()) {
        out.emplace_back(violation::kDenialIffTrust);
    }
    if (trust && (!result.tags.empty() || result.rewritten_query.has_value() ||
                  !result.facet_suggestions.empty())) {
        out.emplace_back(violation::kTrustImpliesEmpty);
    }
    if (result.rewritten_query && result.route != IntentRoute::SelfReferenceSearch) {
        out.emplace_back(violation::kRewriteOnlySelfReference);
    }
    if (result.denial && result.denial->message != kDenialMessage) {
        out.emplace_back(violation::kDenialMessageExact);
    }
    for (const auto& s : result.facet_suggestions) {
        if (s.suggested_values.empty()) {
            out.emplace_back(violation::kSuggestionNonEmpty);
            break;
        }
    }
    return out;
}

std::vector<std::string> validate_tag(const FacetTag& tag, std::string_view query_text) {
    std::vector<std::string> out;
    if (tag.span()) {
        const auto n = text::char_count(query_text);
        if (tag.span()->end > n || tag.span()->begin > tag.span()->end) {
            out.emplace_back("span-within-query");
        }
    }
    if (tag.confidence() < 0.0 || tag.confidence() > 1.0) out.emplace_back("confidence-range");
    return out;
}

}  // namespace qu
