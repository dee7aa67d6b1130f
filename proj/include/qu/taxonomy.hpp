#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace qu {

struct Place {
    std::string id;
    std::string city;
    std::string region;
    std::string country;
    std::vector<std::string> aliases;

    /// "City, Region" (or just the city when no region is configured).
    std::string display() const;
};

struct Industry {
    std::string id;
    std::string name;
    std::vector<std::string> aliases;
    std::vector<std::string> related;
};

struct SeniorityLevel {
    std::string id;
    std::string name;
    std::vector<std::string> aliases;
};

/// Closed vocabularies for the taxonomy-backed facets. Immutable after
/// construction; the constructor validates and indexes.
///
/// Invariants enforced at construction:
///   - ids unique per dictionary
///   - every related-industry id names a configured industry
///   - every place has at least one alias (one alias may map to several places)
class TaxonomyConfig {
public:
    TaxonomyConfig() = default;
    TaxonomyConfig(std::vector<Industry> industries, std::vector<SeniorityLevel> seniorities,
                   std::vector<Place> places);

    static TaxonomyConfig from_json(const nlohmann::json& doc);
    static TaxonomyConfig load(const std::filesystem::path& path);
    nlohmann::json to_json() const;

    const std::vector<Industry>& industries() const { return industries_; }
    const std::vector<SeniorityLevel>& seniorities() const { return seniorities_; }
    const std::vector<Place>& places() const { return places_; }

    const Industry* find_industry(std::string_view id) const;
    const SeniorityLevel* find_seniority(std::string_view id) const;
    const Place* find_place(std::string_view id) const;

    /// Match by id, display name or alias, case-insensitively.
    const Industry* match_industry(std::string_view label) const;
    const SeniorityLevel* match_seniority(std::string_view label) const;

    /// All places carrying the alias (or city name), in taxonomy order.
    std::vector<const Place*> places_by_alias(std::string_view alias) const;

    /// Position of an industry in declaration order; npos when unknown.
    std::size_t industry_rank(std::string_view id) const;

private:
    std::vector<Industry> industries_;
    std::vector<SeniorityLevel> seniorities_;
    std::vector<Place> places_;
    std::unordered_map<std::string, std::size_t> industry_index_;
    std::unordered_map<std::string, std::size_t> industry_labels_;
    std::unordered_map<std::string, std::size_t> seniority_index_;
    std::unordered_map<std::string, std::size_t> seniority_labels_;
    std::unordered_map<std::string, std::size_t> place_index_;
    std::unordered_map<std::string, std::vector<std::size_t>> place_aliases_;
};

}  // namespace qu
