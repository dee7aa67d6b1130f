#include "qu/taxonomy.hpp"

#include <fstream>

#include "qu/errors.hpp"
#include "qu/text.hpp"

namespace qu {

using nlohmann::json;

std::string Place::display() const {
    if (region.empty()) return city;
    return city + ", " + region;
}

namespace {

template <typename Entry>
void index_ids(const std::vector<Entry>& entries, std::unordered_map<std::string, std::size_t>& index,
               const char* what) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].id.empty()) throw ConfigError(std::string(what) + " with empty id");
        if (!index.emplace(entries[i].id, i).second) {
            throw ConfigError(std::string("duplicate ") + what + " id '" + entries[i].id + "'");
        }
    }
}

template <typename Entry>
void index_labels(const std::vector<Entry>& entries,
                  std::unordered_map<std::string, std::size_t>& labels) {
    // First declaration wins when two entries share a label.
    for (std::size_t i = 0; i < entries.size(); ++i) {
        labels.emplace(text::normalize_label(entries[i].id), i);
        labels.emplace(text::normalize_label(entries[i].name), i);
        for (const auto& a : entries[i].aliases) labels.emplace(text::normalize_label(a), i);
    }
}

std::vector<std::string> string_list(const json& doc, const char* key) {
    if (!doc.contains(key)) return {};
    return doc.at(key).get<std::vector<std::string>>();
}

}  // namespace

TaxonomyConfig::TaxonomyConfig(std::vector<Industry> industries,
                               std::vector<SeniorityLevel> seniorities,
                               std::vector<Place> places)
    : industries_(std::move(industries)),
      seniorities_(std::move(seniorities)),
      places_(std::move(places)) {
    index_ids(industries_, industry_index_, "industry");
    index_ids(seniorities_, seniority_index_, "seniority");
    index_ids(places_, place_index_, "place");

    for (const auto& ind : industries_) {
        for (const auto& rel : ind.related) {
            if (!industry_index_.count(rel)) {
                throw ConfigError("industry '" + ind.id + "' relates to unknown industry '" +
                                  rel + "'");
            }
        }
    }
    index_labels(industries_, industry_labels_);
    index_labels(seniorities_, seniority_labels_);

    for (std::size_t i = 0; i < places_.size(); ++i) {
        const auto& p = places_[i];
        if (p.aliases.empty()) throw ConfigError("place '" + p.id + "' has no aliases");
        std::vector<std::string> keys;
        for (const auto& a : p.aliases) {
            if (text::trim(a).empty()) throw ConfigError("place '" + p.id + "' has a blank alias");
            keys.push_back(text::normalize_label(a));
        }
        keys.push_back(text::normalize_label(p.city));
        for (const auto& k : text::dedupe(keys)) {
            if (!k.empty()) place_aliases_[k].push_back(i);
        }
    }
}

TaxonomyConfig TaxonomyConfig::from_json(const json& doc) {
    try {
        std::vector<Industry> industries;
        for (const auto& e : doc.value("industries", json::array())) {
            industries.push_back(Industry{e.at("id").get<std::string>(),
                                          e.value("name", e.at("id").get<std::string>()),
                                          string_list(e, "aliases"), string_list(e, "related")});
        }
        std::vector<SeniorityLevel> seniorities;
        for (const auto& e : doc.value("seniorities", json::array())) {
            seniorities.push_back(SeniorityLevel{e.at("id").get<std::string>(),
                                                 e.value("name", e.at("id").get<std::string>()),
                                                 string_list(e, "aliases")});
        }
        std::vector<Place> places;
        for (const auto& e : doc.value("places", json::array())) {
            places.push_back(Place{e.at("id").get<std::string>(), e.at("city").get<std::string>(),
                                   e.value("region", ""), e.value("country", ""),
                                   string_list(e, "aliases")});
        }
        return TaxonomyConfig(std::move(industries), std::move(seniorities), std::move(places));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("taxonomy: ") + e.what());
    }
}

TaxonomyConfig TaxonomyConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open taxonomy file " + path.string());
    try {
        return from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError("taxonomy " + path.string() + ": " + e.what());
    }
}

json TaxonomyConfig::to_json() const {
    json doc = {{"version", 1},
                {"industries", json::array()},
                {"seniorities", json::array()},
                {"places", json::array()}};
    for (const auto& i : industries_) {
        doc["industries"].push_back(
            {{"id", i.id}, {"name", i.name}, {"aliases", i.aliases}, {"related", i.related}});
    }
    for (const auto& s : seniorities_) {
        doc["seniorities"].push_back({{"id", s.id}, {"name", s.name}, {"aliases", s.aliases}});
    }
    for (const auto& p : places_) {
        doc["places"].push_back({{"id", p.id},
                                 {"city", p.city},
                                 {"region", p.region},
                                 {"country", p.country},
                                 {"aliases", p.aliases}});
    }
    return doc;
}

const Industry* TaxonomyConfig::find_industry(std::string_view id) const {
    auto it = industry_index_.find(std::string(id));
    return it == industry_index_.end() ? nullptr : &industries_[it->second];
}

const SeniorityLevel* TaxonomyConfig::find_seniority(std::string_view id) const {
    auto it = seniority_index_.find(std::string(id));
    return it == seniority_index_.end() ? nullptr : &seniorities_[it->second];
}

const Place* TaxonomyConfig::find_place(std::string_view id) const {
    auto it = place_index_.find(std::string(id));
    return it == place_index_.end() ? nullptr : &places_[it->second];
}

const Industry* TaxonomyConfig::match_industry(std::string_view label) const {
    if (const auto* exact = find_industry(label)) return exact;
    auto it = industry_labels_.find(text::normalize_label(label));
    return it == industry_labels_.end() ? nullptr : &industries_[it->second];
}

const SeniorityLevel* TaxonomyConfig::match_seniority(std::string_view label) const {
    if (const auto* exact = find_seniority(label)) return exact;
    auto it = seniority_labels_.find(text::normalize_label(label));
    return it == seniority_labels_.end() ? nullptr : &seniorities_[it->second];
}

std::vector<const Place*> TaxonomyConfig::places_by_alias(std::string_view alias) const {
    std::vector<const Place*> out;
    auto it = place_aliases_.find(text::normalize_label(alias));
    if (it == place_aliases_.end()) return out;
    for (auto i : it->second) out.push_back(&places_[i]);
    return out;
}

std::size_t TaxonomyConfig::industry_rank(std::string_view id) const {
    auto it = industry_index_.find(std::string(id));
    return it == industry_index_.end() ? std::string::npos : it->second;
}

}  // namespace qu
