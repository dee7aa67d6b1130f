#include "qu/facet_suggester.hpp"

#include <algorithm>
#include <unordered_set>

namespace qu {

std::vector<FacetSuggestion> suggest(const Query& query, std::span<const FacetTag> tags,
                                     const MemberProfile* profile, const TaxonomyConfig& taxonomy,
                                     const SuggestOptions& options) {
    (void)query;
    std::vector<std::string> tagged;
    for (const auto& t : tags) {
        if (t.facet() == Facet::Industry &&
            std::find(tagged.begin(), tagged.end(), t.text()) == tagged.end()) {
            tagged.push_back(t.text());
        }
    }
    const std::unordered_set<std::string> excluded(tagged.begin(), tagged.end());
    std::unordered_set<std::string> preferred;
    if (profile) preferred.insert(profile->industries.begin(), profile->industries.end());

    std::vector<FacetSuggestion> out;
    for (const auto& id : tagged) {
        const auto* industry = taxonomy.find_industry(id);
        if (industry == nullptr) continue;

        std::vector<std::string> values;
        for (const auto& rel : industry->related) {
            if (excluded.count(rel) || !taxonomy.find_industry(rel)) continue;
            if (std::find(values.begin(), values.end(), rel) == values.end()) values.push_back(rel);
        }
        // Profile industries first, then taxonomy declaration order.
        std::sort(values.begin(), values.end(), [&](const std::string& a, const std::string& b) {
            const bool pa = preferred.count(a) > 0, pb = preferred.count(b) > 0;
            if (pa != pb) return pa;
            return taxonomy.industry_rank(a) < taxonomy.industry_rank(b);
        });
        if (values.size() > options.top_k) values.resize(options.top_k);
        if (values.empty()) continue;

        out.push_back(FacetSuggestion{Facet::Industry, std::move(values), "industry:" + id});
    }
    return out;
}

}  // namespace qu
