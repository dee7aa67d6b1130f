#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Small text helpers shared across modules. All offsets are byte offsets
// unless a function says otherwise; "characters" means Unicode code points.
namespace qu::text {

std::string_view trim(std::string_view s);

/// ASCII case fold; non-ASCII bytes pass through untouched.
std::string fold_case(std::string_view s);

/// Trim, collapse internal whitespace runs to one space, fold case.
std::string normalize_label(std::string_view s);

/// Number of code points; invalid bytes count as one character each.
std::size_t char_count(std::string_view s);

/// Code point index of a byte offset (offset must lie on a boundary or at end).
std::size_t char_index(std::string_view s, std::size_t byte_offset);

/// Length in bytes of the sequence started by a UTF-8 lead byte, 0 for a continuation/invalid byte.
std::size_t utf8_sequence_length(unsigned char lead);

/// True when s does not end in the middle of a multi-byte sequence.
bool utf8_complete(std::string_view s);

/// Case-insensitive (ASCII) search, returns byte offset.
std::optional<std::size_t> ifind(std::string_view haystack, std::string_view needle,
                                 std::size_t from = 0);

/// True when [pos, pos+len) is bounded by non-alphanumeric bytes or the string ends.
bool at_word_boundary(std::string_view s, std::size_t pos, std::size_t len);

/// Deduplicate, keeping first occurrences in order.
std::vector<std::string> dedupe(const std::vector<std::string>& values);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace qu::text
