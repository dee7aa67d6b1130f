#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qu/domain.hpp"
#include "qu/errors.hpp"

namespace qu {

struct ToolCallComplete {
    ToolCall call;
    bool operator==(const ToolCallComplete&) const = default;
};

struct TextDelta {
    std::string text;
    bool operator==(const TextDelta&) const = default;
};

struct ParseError {
    std::size_t position = 0;  // byte offset into everything fed so far
    std::string description;
    bool operator==(const ParseError&) const = default;
};

using ParserEvent = std::variant<ToolCallComplete, TextDelta, ParseError>;

/// Push parser for model output made of free text interleaved with tool-call
/// objects of the form {"tool": "<name>", "arguments": {...}}.
///
/// A '{' outside any object opens a tool call. Every other top-level byte is
/// prose. A tool call is reported from the feed() that delivers its closing
/// brace; prose is reported as one TextDelta per maximal run, when the run is
/// ended by a tool call or by finish(). The event sequence therefore does not
/// depend on how the input is chunked.
///
/// After the first ParseError the parser is poisoned: feed() and finish()
/// return that same error and nothing else.
class StreamParser {
public:
    static constexpr std::size_t kMaxDepth = 64;

    std::vector<ParserEvent> feed(std::string_view chunk);
    std::vector<ParserEvent> finish();

    bool poisoned() const { return error_.has_value(); }
    bool finished() const { return finished_; }
    std::size_t bytes_consumed() const { return offset_; }
    int calls_emitted() const { return next_index_; }
    std::size_t depth() const { return stack_.size(); }

private:
    void fail(std::size_t position, std::string description, std::vector<ParserEvent>& out);
    void flush_text(std::vector<ParserEvent>& out);
    void close_object(std::vector<ParserEvent>& out);
    void step_string(unsigned char c, std::vector<ParserEvent>& out);

    enum class Mode { Text, Object };

    Mode mode_ = Mode::Text;
    std::string text_run_;
    std::string object_;
    std::size_t object_start_ = 0;
    std::vector<char> stack_;
    bool in_string_ = false;
    bool escape_ = false;
    int hex_remaining_ = 0;
    std::size_t offset_ = 0;
    int next_index_ = 0;
    bool finished_ = false;
    std::optional<ParseError> error_;
};

/// Thrown by parse_complete on malformed input.
class ToolCallParseFailure : public Error {
public:
    ToolCallParseFailure(std::size_t position, const std::string& description)
        : Error("parse error at byte " + std::to_string(position) + ": " + description),
          position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Whole-response parse by recursive descent. Shares no scanning code with
/// StreamParser, so the two can check each other. Accepts and rejects the same
/// inputs; reported error positions may differ.
std::vector<ToolCall> parse_complete(std::string_view text);

/// Tool-call shape check shared by both parsers: returns an error description
/// or nullopt when the object is {"tool": non-empty string, "arguments": object}.
std::optional<std::string> tool_call_shape_error(const nlohmann::json& object);

/// Convenience: feed a whole string in one chunk and finish.
std::vector<ParserEvent> parse_events(std::string_view text);

}  // namespace qu
