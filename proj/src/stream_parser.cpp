#include "qu/stream_parser.hpp"

#include <set>
#include <stdexcept>

#include "qu/text.hpp"

namespace qu {

using nlohmann::json;

namespace {

bool is_hex(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

bool is_simple_escape(unsigned char c) {
    switch (c) {
        case '"': case '\\': case '/': case 'b': case 'f': case 'n': case 'r': case 't':
            return true;
        default:
            return false;
    }
}

}  // namespace

std::optional<std::string> tool_call_shape_error(const json& object) {
    if (!object.is_object()) return "tool call is not an object";
    for (const auto& [key, _] : object.items()) {
        if (key != "tool" && key != "arguments") return "unknown key '" + key + "' in tool call";
    }
    if (!object.contains("tool")) return "tool call missing key 'tool'";
    if (!object.contains("arguments")) return "tool call missing key 'arguments'";
    const auto& tool = object.at("tool");
    if (!tool.is_string() || tool.get_ref<const std::string&>().empty()) {
        return "tool name must be a non-empty string";
    }
    if (!object.at("arguments").is_object()) return "tool call arguments must be an object";
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// StreamParser

void StreamParser::fail(std::size_t position, std::string description,
                        std::vector<ParserEvent>& out) {
    error_ = ParseError{position, std::move(description)};
    out.emplace_back(*error_);
}

void StreamParser::flush_text(std::vector<ParserEvent>& out) {
    if (text_run_.empty()) return;
    out.emplace_back(TextDelta{std::move(text_run_)});
    text_run_.clear();
}

void StreamParser::step_string(unsigned char c, std::vector<ParserEvent>& out) {
    const std::size_t pos = offset_ - 1;
    if (hex_remaining_ > 0) {
        if (!is_hex(c)) return fail(pos, "invalid \\u escape", out);
        --hex_remaining_;
    } else if (escape_) {
        escape_ = false;
        if (c == 'u') {
            hex_remaining_ = 4;
        } else if (!is_simple_escape(c)) {
            fail(pos, "invalid escape sequence", out);
        }
    } else if (c == '\\') {
        escape_ = true;
    } else if (c == '"') {
        in_string_ = false;
    } else if (c < 0x20) {
        fail(pos, "control character in string", out);
    }
}

void StreamParser::close_object(std::vector<ParserEvent>& out) {
    json parsed;
    // Duplicate keys are rejected at every level; nlohmann would keep the last one.
    std::vector<std::set<std::string>> keys;
    std::optional<std::string> duplicate;
    auto track = [&](int, json::parse_event_t event, json& value) {
        if (event == json::parse_event_t::object_start) {
            keys.emplace_back();
        } else if (event == json::parse_event_t::object_end) {
            keys.pop_back();
        } else if (event == json::parse_event_t::key && !keys.back().insert(value.get<std::string>()).second) {
            if (!duplicate) duplicate = value.get<std::string>();
        }
        return true;
    };
    try {
        parsed = json::parse(object_, track);
    } catch (const json::parse_error& e) {
        const std::size_t rel = e.byte > 0 ? e.byte - 1 : 0;
        return fail(object_start_ + rel, "malformed tool call JSON", out);
    } catch (const json::exception& e) {
        return fail(object_start_, std::string("malformed tool call JSON: ") + e.what(), out);
    }
    if (duplicate) return fail(object_start_, "duplicate key '" + *duplicate + "'", out);
    if (auto err = tool_call_shape_error(parsed)) return fail(object_start_, *err, out);

    ToolCall call;
    call.tool_name = parsed.at("tool").get<std::string>();
    call.arguments = std::move(parsed.at("arguments"));
    call.call_index = next_index_++;
    out.emplace_back(ToolCallComplete{std::move(call)});

    mode_ = Mode::Text;
    object_.clear();
}

std::vector<ParserEvent> StreamParser::feed(std::string_view chunk) {
    if (finished_) throw std::logic_error("StreamParser::feed after finish");
    if (error_) return {*error_};

    std::vector<ParserEvent> out;
    for (char ch : chunk) {
        const auto c = static_cast<unsigned char>(ch);
        const std::size_t pos = offset_++;

        if (mode_ == Mode::Text) {
            if (c == '{') {
                flush_text(out);
                mode_ = Mode::Object;
                object_.assign(1, ch);
                object_start_ = pos;
                stack_.assign(1, '{');
            } else {
                text_run_.push_back(ch);
            }
            continue;
        }

        object_.push_back(ch);
        if (in_string_) {
            step_string(c, out);
        } else if (c == '"') {
            in_string_ = true;
        } else if (c == '{' || c == '[') {
            if (stack_.size() >= kMaxDepth) {
                fail(pos, "nesting too deep", out);
            } else {
                stack_.push_back(static_cast<char>(c));
            }
        } else if (c == '}' || c == ']') {
            const char open = c == '}' ? '{' : '[';
            if (stack_.back() != open) {
                fail(pos, std::string("unbalanced '") + ch + "'", out);
            } else {
                stack_.pop_back();
                if (stack_.empty()) close_object(out);
            }
        }
        if (error_) return out;
    }
    return out;
}

std::vector<ParserEvent> StreamParser::finish() {
    if (finished_) return {};
    finished_ = true;
    if (error_) return {*error_};

    std::vector<ParserEvent> out;
    if (mode_ == Mode::Object) {
        fail(offset_, "unterminated tool call object", out);
    } else if (!text::utf8_complete(text_run_)) {
        fail(offset_, "truncated UTF-8 sequence", out);
    } else {
        flush_text(out);
    }
    return out;
}

std::vector<ParserEvent> parse_events(std::string_view text) {
    StreamParser parser;
    auto events = parser.feed(text);
    auto tail = parser.finish();
    if (!parser.poisoned() || events.empty() ||
        !std::holds_alternative<ParseError>(events.back())) {
        events.insert(events.end(), tail.begin(), tail.end());
    }
    return events;
}

// ---------------------------------------------------------------------------
// Recursive-descent batch parser

namespace {

class Descent {
public:
    Descent(std::string_view s, std::size_t pos) : s_(s), i_(pos) {}

    std::size_t pos() const { return i_; }

    json object(std::size_t depth) {
        expect('{');
        json out = json::object();
        skip_ws();
        if (peek() == '}') {
            ++i_;
            return out;
        }
        while (true) {
            skip_ws();
            if (peek() != '"') fail("expected object key");
            const std::size_t key_at = i_;
            std::string key = string_literal();
            if (out.contains(key)) fail_at(key_at, "duplicate key '" + key + "'");
            skip_ws();
            expect(':');
            out[key] = value(depth);
            skip_ws();
            const int c = peek();
            ++i_;
            if (c == '}') return out;
            if (c != ',') fail_at(i_ - 1, "expected ',' or '}'");
        }
    }

private:
    [[noreturn]] void fail(const std::string& what) { fail_at(i_, what); }
    [[noreturn]] void fail_at(std::size_t at, const std::string& what) {
        throw ToolCallParseFailure(at, what);
    }

    int peek() const { return i_ < s_.size() ? static_cast<unsigned char>(s_[i_]) : -1; }

    void expect(char c) {
        if (peek() != static_cast<unsigned char>(c)) fail(std::string("expected '") + c + "'");
        ++i_;
    }

    void skip_ws() {
        while (i_ < s_.size() &&
               (s_[i_] == ' ' || s_[i_] == '\t' || s_[i_] == '\n' || s_[i_] == '\r')) {
            ++i_;
        }
    }

    json value(std::size_t depth) {
        skip_ws();
        const int c = peek();
        if (c == '{' || c == '[') {
            if (depth + 1 > StreamParser::kMaxDepth) fail("nesting too deep");
            return c == '{' ? object(depth + 1) : array(depth + 1);
        }
        if (c == '"') return string_literal();
        if (c == 't') return literal("true", json(true));
        if (c == 'f') return literal("false", json(false));
        if (c == 'n') return literal("null", json(nullptr));
        if (c == '-' || (c >= '0' && c <= '9')) return number();
        fail("unexpected character");
    }

    json array(std::size_t depth) {
        expect('[');
        json out = json::array();
        skip_ws();
        if (peek() == ']') {
            ++i_;
            return out;
        }
        while (true) {
            out.push_back(value(depth));
            skip_ws();
            const int c = peek();
            ++i_;
            if (c == ']') return out;
            if (c != ',') fail_at(i_ - 1, "expected ',' or ']'");
        }
    }

    json literal(std::string_view word, json v) {
        if (s_.substr(i_, word.size()) != word) fail("invalid literal");
        i_ += word.size();
        return v;
    }

    json number() {
        const std::size_t start = i_;
        auto digits = [&] {
            std::size_t n = 0;
            while (peek() >= '0' && peek() <= '9') {
                ++i_;
                ++n;
            }
            return n;
        };
        if (peek() == '-') ++i_;
        if (peek() == '0') {
            ++i_;
        } else if (digits() == 0) {
            fail("invalid number");
        }
        if (peek() == '.') {
            ++i_;
            if (digits() == 0) fail("invalid number fraction");
        }
        if (peek() == 'e' || peek() == 'E') {
            ++i_;
            if (peek() == '+' || peek() == '-') ++i_;
            if (digits() == 0) fail("invalid number exponent");
        }
        // The grammar is checked above; the library only converts the token.
        try {
            return json::parse(s_.substr(start, i_ - start));
        } catch (const json::exception&) {
            fail_at(start, "number out of range");
        }
    }

    unsigned hex4() {
        unsigned v = 0;
        for (int k = 0; k < 4; ++k) {
            const int c = peek();
            if (c < 0 || !is_hex(static_cast<unsigned char>(c))) fail("invalid \\u escape");
            v = v * 16 + static_cast<unsigned>(c <= '9' ? c - '0' : (c | 0x20) - 'a' + 10);
            ++i_;
        }
        return v;
    }

    static void append_utf8(std::string& out, unsigned cp) {
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else if (cp < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        }
    }

    // Well-formed UTF-8 per RFC 3629 (no overlongs, no surrogates, <= U+10FFFF).
    void utf8_sequence(std::string& out) {
        const auto lead = static_cast<unsigned char>(s_[i_]);
        unsigned char lo = 0x80, hi = 0xBF;
        std::size_t len = 0;
        if (lead >= 0xC2 && lead <= 0xDF) {
            len = 2;
        } else if (lead >= 0xE0 && lead <= 0xEF) {
            len = 3;
            if (lead == 0xE0) lo = 0xA0;
            if (lead == 0xED) hi = 0x9F;
        } else if (lead >= 0xF0 && lead <= 0xF4) {
            len = 4;
            if (lead == 0xF0) lo = 0x90;
            if (lead == 0xF4) hi = 0x8F;
        } else {
            fail("invalid UTF-8 byte");
        }
        for (std::size_t k = 1; k < len; ++k) {
            const int c = i_ + k < s_.size() ? static_cast<unsigned char>(s_[i_ + k]) : -1;
            const unsigned char min = k == 1 ? lo : 0x80;
            const unsigned char max = k == 1 ? hi : 0xBF;
            if (c < min || c > max) fail_at(i_ + k, "invalid UTF-8 byte");
        }
        out.append(s_.substr(i_, len));
        i_ += len;
    }

    std::string string_literal() {
        expect('"');
        std::string out;
        while (true) {
            const int c = peek();
            if (c < 0) fail("unterminated string");
            if (c == '"') {
                ++i_;
                return out;
            }
            if (c < 0x20) fail("control character in string");
            if (c >= 0x80) {
                utf8_sequence(out);
                continue;
            }
            ++i_;
            if (c != '\\') {
                out.push_back(static_cast<char>(c));
                continue;
            }
            const int e = peek();
            ++i_;
            switch (e) {
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                case '/': out.push_back('/'); break;
                case 'b': out.push_back('\b'); break;
                case 'f': out.push_back('\f'); break;
                case 'n': out.push_back('\n'); break;
                case 'r': out.push_back('\r'); break;
                case 't': out.push_back('\t'); break;
                case 'u': {
                    unsigned cp = hex4();
                    if (cp >= 0xDC00 && cp <= 0xDFFF) fail("lone low surrogate");
                    if (cp >= 0xD800 && cp <= 0xDBFF) {
                        if (s_.substr(i_, 2) != "\\u") fail("unpaired high surrogate");
                        i_ += 2;
                        const unsigned low = hex4();
                        if (low < 0xDC00 || low > 0xDFFF) fail("unpaired high surrogate");
                        cp = 0x10000 + ((cp - 0xD800) << 10) + (low - 0xDC00);
                    }
                    append_utf8(out, cp);
                    break;
                }
                default:
                    fail_at(i_ - 1, "invalid escape sequence");
            }
        }
    }

    std::string_view s_;
    std::size_t i_;
};

}  // namespace

std::vector<ToolCall> parse_complete(std::string_view text) {
    std::vector<ToolCall> calls;
    std::size_t i = 0;
    std::size_t prose_start = 0;
    while (i < text.size()) {
        if (text[i] != '{') {
            ++i;
            continue;
        }
        const std::size_t start = i;
        Descent descent(text, i);
        json object = descent.object(1);
        if (auto err = tool_call_shape_error(object)) throw ToolCallParseFailure(start, *err);
        ToolCall call;
        call.tool_name = object.at("tool").get<std::string>();
        call.arguments = std::move(object.at("arguments"));
        call.call_index = static_cast<int>(calls.size());
        calls.push_back(std::move(call));
        i = descent.pos();
        prose_start = i;
    }
    if (!text::utf8_complete(text.substr(prose_start))) {
        throw ToolCallParseFailure(text.size(), "truncated UTF-8 sequence");
    }
    return calls;
}

}  // namespace qu
