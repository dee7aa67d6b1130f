#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "qu/domain.hpp"
#include "qu/llm_gateway.hpp"
#include "qu/taxonomy.hpp"

namespace qu::test {

inline std::string data_path(const std::string& name) { return std::string(QU_DATA_DIR) + "/" + name; }
inline std::string testdata_path(const std::string& name) { return std::string(QU_TESTDATA_DIR) + "/" + name; }

inline const TaxonomyConfig& taxonomy() {
    static const TaxonomyConfig t = TaxonomyConfig::load(data_path("taxonomy.json"));
    return t;
}

inline std::shared_ptr<const TaxonomyConfig> shared_taxonomy() {
    static const auto t = std::make_shared<const TaxonomyConfig>(taxonomy());
    return t;
}

/// Software engineer living in the Bay Area.
inline MemberProfile bay_area_engineer() {
    MemberProfile p;
    p.location = ProfileLocation{"Bay Area", "CA", "US"};
    p.titles = {"Software Engineer", "Intern"};
    p.skills = {"C++", "Distributed Systems", "Go", "SQL"};
    p.industries = {"software", "fintech"};
    p.education = {"BS Computer Science"};
    p.years_experience = 6;
    p.network_company_ids = {"acme"};
    return p;
}

inline MemberProfile us_member() {
    MemberProfile p;
    p.location = ProfileLocation{"Orlando", "Florida", "US"};
    return p;
}

inline std::string call(const std::string& tool, const nlohmann::json& args) {
    return nlohmann::json{{"tool", tool}, {"arguments", args}}.dump();
}

inline MockScript script(const nlohmann::json& rules) { return MockScript::from_json(rules); }

inline MockScript fixture_script() { return MockScript::load(data_path("mock_script.json")); }

}  // namespace qu::test
