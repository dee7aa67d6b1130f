#include "qu/text.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace qu::text {

namespace {
bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
char lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}
bool is_word_byte(unsigned char c) {
    return std::isalnum(c) != 0 || c >= 0x80;
}
}  // namespace

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

std::string fold_case(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), lower);
    return out;
}

std::string normalize_label(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : trim(s)) {
        if (is_space(c)) {
            pending_space = true;
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(lower(c));
    }
    return out;
}

std::size_t utf8_sequence_length(unsigned char lead) {
    if (lead < 0x80) return 1;
    if ((lead & 0xE0) == 0xC0) return 2;
    if ((lead & 0xF0) == 0xE0) return 3;
    if ((lead & 0xF8) == 0xF0) return 4;
    return 0;
}

std::size_t char_count(std::string_view s) {
    return char_index(s, s.size());
}

std::size_t char_index(std::string_view s, std::size_t byte_offset) {
    std::size_t chars = 0;
    std::size_t i = 0;
    const std::size_t end = std::min(byte_offset, s.size());
    while (i < end) {
        std::size_t len = utf8_sequence_length(static_cast<unsigned char>(s[i]));
        i += len == 0 ? 1 : len;
        ++chars;
    }
    return chars;
}

bool utf8_complete(std::string_view s) {
    // Walk back over at most three continuation bytes to find the last lead byte.
    std::size_t back = 0;
    std::size_t i = s.size();
    while (i > 0 && back < 4) {
        auto c = static_cast<unsigned char>(s[i - 1]);
        --i;
        ++back;
        if ((c & 0xC0) != 0x80) {
            std::size_t need = utf8_sequence_length(c);
            return need == 0 || need <= back;
        }
    }
    return true;
}

std::optional<std::size_t> ifind(std::string_view haystack, std::string_view needle,
                                 std::size_t from) {
    if (needle.empty()) return from <= haystack.size() ? std::optional<std::size_t>(from) : std::nullopt;
    if (needle.size() > haystack.size()) return std::nullopt;
    for (std::size_t i = from; i + needle.size() <= haystack.size(); ++i) {
        bool match = true;
        for (std::size_t j = 0; j < needle.size(); ++j) {
            if (lower(haystack[i + j]) != lower(needle[j])) {
                match = false;
                break;
            }
        }
        if (match) return i;
    }
    return std::nullopt;
}

bool at_word_boundary(std::string_view s, std::size_t pos, std::size_t len) {
    bool left = pos == 0 || !is_word_byte(static_cast<unsigned char>(s[pos - 1]));
    bool right = pos + len >= s.size() || !is_word_byte(static_cast<unsigned char>(s[pos + len]));
    return left && right;
}

std::vector<std::string> dedupe(const std::vector<std::string>& values) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& v : values) {
        if (seen.insert(v).second) out.push_back(v);
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out.append(sep);
        out.append(parts[i]);
    }
    return out;
}

}  // namespace qu::text
