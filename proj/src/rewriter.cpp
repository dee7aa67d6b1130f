#include "qu/rewriter.hpp"

#include <algorithm>
#include <map>

#include "qu/errors.hpp"
#include "qu/stream_parser.hpp"
#include "qu/text.hpp"

namespace qu {

std::string_view to_string(Slot slot) {
    switch (slot) {
        case Slot::Location: return "location";
        case Slot::Title: return "title";
        case Slot::Skills: return "skills";
        case Slot::Industry: return "industry";
        case Slot::Education: return "education";
        case Slot::Experience: return "experience";
    }
    return "location";
}

std::optional<Slot> slot_from_string(std::string_view name) {
    for (auto s : kAllSlots) {
        if (to_string(s) == name) return s;
    }
    return std::nullopt;
}

namespace {

struct Phrase {
    std::string_view text;
    std::vector<Slot> slots;
};

// Single-slot phrases are tried before compound ones; longer before shorter.
const std::vector<Phrase>& phrase_table() {
    static const std::vector<Phrase> table = [] {
        std::vector<Phrase> t = {
            {"my current location", {Slot::Location}},
            {"my location", {Slot::Location}},
            {"my area", {Slot::Location}},
            {"my city", {Slot::Location}},
            {"my region", {Slot::Location}},
            {"my current job title", {Slot::Title}},
            {"my current title", {Slot::Title}},
            {"my current role", {Slot::Title}},
            {"my job title", {Slot::Title}},
            {"my title", {Slot::Title}},
            {"my role", {Slot::Title}},
            {"my position", {Slot::Title}},
            {"my skill set", {Slot::Skills}},
            {"my skillset", {Slot::Skills}},
            {"my skills", {Slot::Skills}},
            {"my industry", {Slot::Industry}},
            {"my field", {Slot::Industry}},
            {"my sector", {Slot::Industry}},
            {"my education", {Slot::Education}},
            {"my degree", {Slot::Education}},
            {"my major", {Slot::Education}},
            {"my years of experience", {Slot::Experience}},
            {"my experience", {Slot::Experience}},
            {"my background", {Slot::Experience}},
            {"my qualifications", {Slot::Title, Slot::Skills, Slot::Experience, Slot::Education}},
            {"my profile",
             {Slot::Title, Slot::Skills, Slot::Industry, Slot::Education, Slot::Experience,
              Slot::Location}},
        };
        std::stable_sort(t.begin(), t.end(), [](const Phrase& a, const Phrase& b) {
            const bool a_single = a.slots.size() == 1, b_single = b.slots.size() == 1;
            if (a_single != b_single) return a_single;
            return a.text.size() > b.text.size();
        });
        return t;
    }();
    return table;
}

// Canonical rendering order inside a compound phrase.
int slot_order(Slot s) {
    switch (s) {
        case Slot::Title: return 0;
        case Slot::Skills: return 1;
        case Slot::Industry: return 2;
        case Slot::Education: return 3;
        case Slot::Experience: return 4;
        case Slot::Location: return 5;
    }
    return 6;
}

std::string_view profile_field(Slot s) {
    switch (s) {
        case Slot::Location: return "location";
        case Slot::Title: return "titles";
        case Slot::Skills: return "skills";
        case Slot::Industry: return "industries";
        case Slot::Education: return "education";
        case Slot::Experience: return "years_experience";
    }
    return "";
}

struct Group {
    std::size_t begin;
    std::size_t end;
    std::vector<Slot> slots;
};

}  // namespace

std::vector<Slot> slots_from_call(const ToolCall& call) {
    if (call.tool_name != kSelfReferenceTool) {
        throw BackendMalformed("expected detect_self_reference, got '" + call.tool_name + "'");
    }
    if (!call.arguments.contains("slots")) throw BackendMalformed("detect_self_reference without slots");
    const auto& raw = call.arguments.at("slots");
    std::vector<nlohmann::json> names;
    if (raw.is_array()) {
        names.assign(raw.begin(), raw.end());
    } else {
        names.push_back(raw);
    }
    std::vector<Slot> out;
    for (const auto& n : names) {
        if (!n.is_string()) throw BackendMalformed("slot names must be strings");
        auto s = slot_from_string(n.get<std::string>());
        if (!s) throw BackendMalformed("unknown slot '" + n.get<std::string>() + "'");
        if (std::find(out.begin(), out.end(), *s) == out.end()) out.push_back(*s);
    }
    return out;
}

std::vector<Slot> detect_slots(const Query& query, LlmBackend& backend, const PromptLibrary& prompts,
                               const RewriterOptions& options) {
    auto request = make_request(prompts, "rewrite", query.text, prompt_vars(nullptr, nullptr, nullptr),
                                options.model, options.timeout_ms);
    const auto text = complete_text(backend, request);
    std::vector<ToolCall> calls;
    try {
        calls = parse_complete(text);
    } catch (const ToolCallParseFailure& e) {
        throw BackendMalformed(std::string("slot output: ") + e.what());
    }
    for (const auto& c : calls) {
        if (c.tool_name == kSelfReferenceTool) return slots_from_call(c);
    }
    throw BackendMalformed("backend output has no detect_self_reference call");
}

std::optional<std::string> render_slot(Slot slot, const MemberProfile& profile,
                                       const TaxonomyConfig* taxonomy) {
    switch (slot) {
        case Slot::Location:
            if (profile.location && !profile.location->display().empty()) {
                return profile.location->display();
            }
            return std::nullopt;
        case Slot::Title:
            if (profile.titles.empty()) return std::nullopt;
            return profile.titles.front();
        case Slot::Skills: {
            if (profile.skills.empty()) return std::nullopt;
            const auto n = std::min<std::size_t>(3, profile.skills.size());
            return text::join({profile.skills.begin(), profile.skills.begin() + n}, ", ");
        }
        case Slot::Industry: {
            if (profile.industries.empty()) return std::nullopt;
            const auto& id = profile.industries.front();
            if (taxonomy) {
                if (const auto* ind = taxonomy->find_industry(id)) return ind->name;
            }
            return id;
        }
        case Slot::Education:
            if (profile.education.empty()) return std::nullopt;
            return profile.education.front();
        case Slot::Experience:
            if (!profile.years_experience) return std::nullopt;
            return std::to_string(*profile.years_experience) +
                   (*profile.years_experience == 1 ? " year" : " years") + " of experience";
    }
    return std::nullopt;
}

RewriteOutcome rewrite(const Query& query, std::span<const Slot> slots, const MemberProfile& profile,
                       const TaxonomyConfig* taxonomy) {
    const std::string& text = query.text;
    RewriteOutcome outcome;
    std::vector<Group> groups;

    auto overlaps = [&](std::size_t b, std::size_t e) {
        for (const auto& g : groups) {
            if (b < g.end && g.begin < e) return true;
        }
        return false;
    };

    std::vector<Slot> seen;
    for (Slot slot : slots) {
        if (std::find(seen.begin(), seen.end(), slot) != seen.end()) continue;
        seen.push_back(slot);

        bool placed = false;
        for (const auto& phrase : phrase_table()) {
            if (std::find(phrase.slots.begin(), phrase.slots.end(), slot) == phrase.slots.end()) continue;
            for (auto pos = text::ifind(text, phrase.text); pos && !placed;
                 pos = text::ifind(text, phrase.text, *pos + 1)) {
                const std::size_t b = *pos, e = *pos + phrase.text.size();
                if (!text::at_word_boundary(text, b, phrase.text.size())) continue;
                auto same = std::find_if(groups.begin(), groups.end(),
                                         [&](const Group& g) { return g.begin == b && g.end == e; });
                if (same != groups.end()) {
                    same->slots.push_back(slot);
                    placed = true;
                } else if (!overlaps(b, e)) {
                    groups.push_back(Group{b, e, {slot}});
                    placed = true;
                }
            }
            if (placed) break;
        }
        if (!placed) outcome.unfilled.push_back(slot);
    }

    std::sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) { return a.begin < b.begin; });

    std::size_t cursor = 0;
    for (auto& g : groups) {
        std::sort(g.slots.begin(), g.slots.end(),
                  [](Slot a, Slot b) { return slot_order(a) < slot_order(b); });
        std::vector<std::string> parts;
        for (Slot s : g.slots) {
            if (auto value = render_slot(s, profile, taxonomy)) {
                outcome.slots_filled.push_back(SlotFill{s, std::string(profile_field(s)), *value});
                parts.push_back(*value);
            } else {
                outcome.unfilled.push_back(s);
            }
        }
        outcome.rewritten.append(text, cursor, g.begin - cursor);
        if (parts.empty()) {
            outcome.rewritten.append(text, g.begin, g.end - g.begin);
        } else {
            outcome.rewritten += text::join(parts, "; ");
        }
        cursor = g.end;
    }
    outcome.rewritten.append(text, cursor, std::string::npos);
    return outcome;
}

}  // namespace qu
