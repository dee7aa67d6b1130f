#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qu/clock.hpp"
#include "qu/errors.hpp"

namespace qu {

enum class Role { System, User };

struct ChatMessage {
    Role role = Role::User;
    std::string content;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    std::string model;
    bool stream = true;
    int timeout_ms = 600;
};

/// Throws ValidationError unless there is a user message and timeout_ms >= 1.
void validate_request(const ChatRequest& request);

/// Task name from a leading "# task: <name>" line in the first system message.
std::string task_of(const ChatRequest& request);

/// Content of the last user message ("" when none).
std::string last_user_content(const ChatRequest& request);

struct ChatChunk {
    std::string delta;
    bool finished = false;
    std::optional<std::string> finish_reason;

    bool operator==(const ChatChunk&) const = default;
};

/// Receives chunks in order. Returning false stops the stream early; that is
/// not an error.
using ChunkSink = std::function<bool(const ChatChunk&)>;

class LlmBackend {
public:
    virtual ~LlmBackend() = default;

    /// Streams the completion for `request` into `sink`. Throws BackendTimeout,
    /// TransportError or ProtocolError; chunks delivered before the throw stay delivered.
    virtual void complete_stream(const ChatRequest& request, const ChunkSink& sink) = 0;

    virtual std::string name() const = 0;
};

/// Runs complete_stream and concatenates every delta.
std::string complete_text(LlmBackend& backend, const ChatRequest& request);

// ---------------------------------------------------------------------------
// Scripted mock

struct MockRule {
    enum class Match { Exact, Pattern, Any };

    Match match = Match::Any;
    std::string matcher;              // exact text or ECMAScript pattern (case-insensitive)
    std::optional<std::string> task;  // restricts the rule to one prompt task
    std::string response;
    std::vector<std::size_t> splits;  // strictly increasing byte offsets inside response
    double delay_ms = 0.0;            // before every chunk
    double jitter_ms = 0.0;           // seeded extra delay in [0, jitter_ms)

    bool matches(const ChatRequest& request) const;
    std::vector<std::string> chunks() const;

private:
    friend class MockScript;
    std::shared_ptr<const std::regex> compiled_;
};

/// Ordered rules; the first match wins and the last rule must be an
/// unrestricted catch-all.
class MockScript {
public:
    explicit MockScript(std::vector<MockRule> rules);

    static MockScript from_json(const nlohmann::json& doc);
    static MockScript load(const std::filesystem::path& path);

    const MockRule& match(const ChatRequest& request) const;
    const std::vector<MockRule>& rules() const { return rules_; }

private:
    std::vector<MockRule> rules_;
};

class MockBackend final : public LlmBackend {
public:
    explicit MockBackend(MockScript script, std::shared_ptr<Clock> clock = steady_clock(),
                         std::uint64_t seed = 0);

    void complete_stream(const ChatRequest& request, const ChunkSink& sink) override;
    std::string name() const override { return "mock"; }

    std::size_t call_count() const { return calls_.load(); }
    void reset_call_count() { calls_ = 0; }

private:
    MockScript script_;
    std::shared_ptr<Clock> clock_;
    std::uint64_t seed_;
    std::atomic<std::size_t> calls_{0};
};

// ---------------------------------------------------------------------------
// Chat-completion wire protocol (docs/protocol.md)

/// JSON request body for POST {endpoint}/chat/completions.
nlohmann::json chat_request_body(const ChatRequest& request);

/// Incremental decoder for the server-sent-event response stream.
class SseChatDecoder {
public:
    /// Throws ProtocolError on a malformed event or data after the done marker.
    std::vector<ChatChunk> push(std::string_view bytes);

    /// Throws ProtocolError if the done marker never arrived.
    void finish() const;

    bool done() const { return done_; }

private:
    void handle_line(std::string_view line, std::vector<ChatChunk>& out);

    std::string line_;
    bool done_ = false;
    std::optional<std::string> finish_reason_;
};

struct LiveBackendConfig {
    std::string endpoint;  // e.g. http://127.0.0.1:8000/v1
    std::string api_key;
    std::string model;

    /// From QU_LLM_ENDPOINT, QU_LLM_API_KEY, QU_LLM_MODEL.
    static LiveBackendConfig from_env();
};

class LiveBackend final : public LlmBackend {
public:
    explicit LiveBackend(LiveBackendConfig config, std::shared_ptr<Clock> clock = steady_clock());

    void complete_stream(const ChatRequest& request, const ChunkSink& sink) override;
    std::string name() const override { return "live"; }

private:
    LiveBackendConfig config_;
    std::shared_ptr<Clock> clock_;
    std::string scheme_host_port_;
    std::string base_path_;
};

}  // namespace qu
