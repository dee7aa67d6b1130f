#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qu/domain.hpp"
#include "qu/taxonomy.hpp"

namespace qu {

struct SuggestOptions {
    std::size_t top_k = 5;
};

/// Industry suggestions, triggered only by Industry tags. For each tagged
/// industry: its related industries from the taxonomy, minus every tagged
/// industry, member-profile industries first and then taxonomy order, capped
/// at top_k. Industries with nothing left to suggest produce no entry.
std::vector<FacetSuggestion> suggest(const Query& query, std::span<const FacetTag> tags,
                                     const MemberProfile* profile, const TaxonomyConfig& taxonomy,
                                     const SuggestOptions& options = {});

}  // namespace qu
