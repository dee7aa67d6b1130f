#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qu/domain.hpp"
#include "qu/llm_gateway.hpp"
#include "qu/prompts.hpp"

namespace qu {

enum class Slot { Location, Title, Skills, Industry, Education, Experience };

inline constexpr Slot kAllSlots[] = {Slot::Location, Slot::Title,     Slot::Skills,
                                     Slot::Industry, Slot::Education, Slot::Experience};

std::string_view to_string(Slot slot);
std::optional<Slot> slot_from_string(std::string_view name);

/// Name of the tool call carrying detected slots.
inline constexpr std::string_view kSelfReferenceTool = "detect_self_reference";

struct SlotFill {
    Slot slot = Slot::Location;
    std::string profile_field;  // MemberProfile field the value came from
    std::string text;           // rendered value
    bool operator==(const SlotFill&) const = default;
};

struct RewriteOutcome {
    std::string rewritten;
    std::vector<SlotFill> slots_filled;
    std::vector<Slot> unfilled;
};

/// Slots from a detect_self_reference call ("slots": name or list of names).
/// Throws BackendMalformed on another tool or an unknown slot name.
std::vector<Slot> slots_from_call(const ToolCall& call);

struct RewriterOptions {
    std::string model;
    int timeout_ms = 600;
};

/// Asks the backend ("rewrite" prompt) which profile attributes the query
/// refers to. Empty means no self-reference.
std::vector<Slot> detect_slots(const Query& query, LlmBackend& backend, const PromptLibrary& prompts,
                               const RewriterOptions& options = {});

/// Rendered profile value for a slot, or nullopt when the profile lacks it.
/// Location renders "City, Region"; title the most recent title; skills the
/// first three, comma-joined; industry its taxonomy name (id without a
/// taxonomy); education the first entry; experience "N years of experience".
std::optional<std::string> render_slot(Slot slot, const MemberProfile& profile,
                                       const TaxonomyConfig* taxonomy = nullptr);

/// Replaces each self-referential phrase ("my location", "my profile", ...)
/// with the member's values. A phrase may stand for several slots; their
/// values are joined with "; " in slot order. Slots without profile data, or
/// with no locatable phrase, are listed in `unfilled` and their text is kept.
/// Bytes outside replaced phrases are preserved exactly.
RewriteOutcome rewrite(const Query& query, std::span<const Slot> slots, const MemberProfile& profile,
                       const TaxonomyConfig* taxonomy = nullptr);

}  // namespace qu
