#include "qu/llm_gateway.hpp"

#include <cstdlib>
#include <fstream>
#include <random>

#include <httplib.h>

#include "qu/text.hpp"

namespace qu {

using nlohmann::json;

void validate_request(const ChatRequest& request) {
    bool has_user = false;
    for (const auto& m : request.messages) has_user = has_user || m.role == Role::User;
    if (!has_user) throw ValidationError("chat request needs at least one user message");
    if (request.timeout_ms < 1) throw ValidationError("chat request timeout_ms must be >= 1");
}

std::string task_of(const ChatRequest& request) {
    for (const auto& m : request.messages) {
        if (m.role != Role::System) continue;
        constexpr std::string_view prefix = "# task:";
        std::string_view content = m.content;
        if (content.substr(0, prefix.size()) != prefix) return "";
        auto line = content.substr(prefix.size());
        line = line.substr(0, line.find('\n'));
        return std::string(text::trim(line));
    }
    return "";
}

std::string last_user_content(const ChatRequest& request) {
    for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
        if (it->role == Role::User) return it->content;
    }
    return "";
}

std::string complete_text(LlmBackend& backend, const ChatRequest& request) {
    std::string out;
    backend.complete_stream(request, [&](const ChatChunk& chunk) {
        out += chunk.delta;
        return true;
    });
    return out;
}

// ---------------------------------------------------------------------------
// MockRule / MockScript

bool MockRule::matches(const ChatRequest& request) const {
    if (task && task_of(request) != *task) return false;
    switch (match) {
        case Match::Any:
            return true;
        case Match::Exact:
            return text::trim(last_user_content(request)) == text::trim(matcher);
        case Match::Pattern:
            return compiled_ && std::regex_search(last_user_content(request), *compiled_);
    }
    return false;
}

std::vector<std::string> MockRule::chunks() const {
    std::vector<std::string> out;
    std::size_t prev = 0;
    for (auto s : splits) {
        out.push_back(response.substr(prev, s - prev));
        prev = s;
    }
    out.push_back(response.substr(prev));
    return out;
}

MockScript::MockScript(std::vector<MockRule> rules) : rules_(std::move(rules)) {
    if (rules_.empty()) throw ConfigError("mock script has no rules");
    const auto& last = rules_.back();
    if (last.match != MockRule::Match::Any || last.task) {
        throw ConfigError("mock script must end with an unrestricted catch-all rule");
    }
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        auto& r = rules_[i];
        std::size_t prev = 0;
        for (auto s : r.splits) {
            if (s <= prev || s >= r.response.size()) {
                throw ConfigError("mock rule " + std::to_string(i) +
                                  ": splits must be strictly increasing offsets inside the response");
            }
            prev = s;
        }
        if (r.delay_ms < 0 || r.jitter_ms < 0) {
            throw ConfigError("mock rule " + std::to_string(i) + ": negative delay");
        }
        if (r.match == MockRule::Match::Pattern) {
            try {
                r.compiled_ = std::make_shared<const std::regex>(
                    r.matcher, std::regex::ECMAScript | std::regex::icase);
            } catch (const std::regex_error& e) {
                throw ConfigError("mock rule " + std::to_string(i) + ": bad pattern: " + e.what());
            }
        }
    }
}

MockScript MockScript::from_json(const json& doc) {
    try {
        const auto& rules_doc = doc.is_array() ? doc : doc.at("rules");
        std::vector<MockRule> rules;
        for (const auto& r : rules_doc) {
            MockRule rule;
            if (r.contains("exact")) {
                rule.match = MockRule::Match::Exact;
                rule.matcher = r.at("exact").get<std::string>();
            } else if (r.contains("pattern")) {
                rule.match = MockRule::Match::Pattern;
                rule.matcher = r.at("pattern").get<std::string>();
            } else if (!r.value("catch_all", false)) {
                throw ConfigError("mock rule needs 'exact', 'pattern' or 'catch_all'");
            }
            if (r.contains("task")) rule.task = r.at("task").get<std::string>();
            const auto& resp = r.at("response");
            if (resp.is_array()) {
                // Array form: response pieces; piece boundaries become splits.
                for (const auto& piece : resp) {
                    if (!rule.response.empty()) rule.splits.push_back(rule.response.size());
                    rule.response += piece.get<std::string>();
                }
            } else {
                rule.response = resp.get<std::string>();
            }
            if (r.contains("splits")) {
                if (resp.is_array()) throw ConfigError("mock rule: give 'splits' or a response array, not both");
                rule.splits = r.at("splits").get<std::vector<std::size_t>>();
            }
            rule.delay_ms = r.value("delay_ms", 0.0);
            rule.jitter_ms = r.value("jitter_ms", 0.0);
            rules.push_back(std::move(rule));
        }
        return MockScript(std::move(rules));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("mock script: ") + e.what());
    }
}

MockScript MockScript::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open mock script " + path.string());
    try {
        return from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError("mock script " + path.string() + ": " + e.what());
    }
}

const MockRule& MockScript::match(const ChatRequest& request) const {
    for (const auto& r : rules_) {
        if (r.matches(request)) return r;
    }
    return rules_.back();
}

// ---------------------------------------------------------------------------
// MockBackend

namespace {
std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}
}  // namespace

MockBackend::MockBackend(MockScript script, std::shared_ptr<Clock> clock, std::uint64_t seed)
    : script_(std::move(script)), clock_(std::move(clock)), seed_(seed) {}

void MockBackend::complete_stream(const ChatRequest& request, const ChunkSink& sink) {
    validate_request(request);
    ++calls_;
    const Stopwatch watch(*clock_);
    const auto& rule = script_.match(request);
    std::mt19937_64 rng(seed_ ^ fnv1a(task_of(request), fnv1a(last_user_content(request))));

    const auto pieces = rule.chunks();
    for (std::size_t k = 0; k < pieces.size(); ++k) {
        double delay = rule.delay_ms;
        if (rule.jitter_ms > 0) {
            delay += rule.jitter_ms * static_cast<double>(rng() >> 11) * 0x1.0p-53;
        }
        const double remaining = request.timeout_ms - watch.elapsed_ms();
        if (delay > remaining) {
            clock_->sleep_ms(remaining);
            throw BackendTimeout("mock backend exceeded " + std::to_string(request.timeout_ms) +
                                 "ms budget after " + std::to_string(k) + " chunk(s)");
        }
        clock_->sleep_ms(delay);
        ChatChunk chunk{pieces[k], k + 1 == pieces.size(), std::nullopt};
        if (chunk.finished) chunk.finish_reason = "stop";
        if (!sink(chunk)) return;
    }
}

// ---------------------------------------------------------------------------
// Wire protocol

json chat_request_body(const ChatRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", m.role == Role::System ? "system" : "user"},
                            {"content", m.content}});
    }
    return json{{"model", request.model}, {"messages", messages}, {"stream", request.stream}};
}

std::vector<ChatChunk> SseChatDecoder::push(std::string_view bytes) {
    std::vector<ChatChunk> out;
    for (char c : bytes) {
        if (c != '\n') {
            line_.push_back(c);
            continue;
        }
        std::string line = std::move(line_);
        line_.clear();
        if (!line.empty() && line.back() == '\r') line.pop_back();
        handle_line(line, out);
    }
    return out;
}

void SseChatDecoder::handle_line(std::string_view line, std::vector<ChatChunk>& out) {
    if (line.empty() || line.front() == ':') return;  // event boundary or comment
    constexpr std::string_view data = "data:";
    if (line.substr(0, data.size()) != data) return;  // event:, id:, retry:
    auto payload = line.substr(data.size());
    if (!payload.empty() && payload.front() == ' ') payload.remove_prefix(1);

    if (done_) throw ProtocolError("data after [DONE]");
    if (payload == "[DONE]") {
        done_ = true;
        out.push_back(ChatChunk{"", true, finish_reason_.value_or("stop")});
        return;
    }
    json event;
    try {
        event = json::parse(payload);
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("malformed stream event: ") + e.what());
    }
    if (event.contains("error")) {
        throw ProtocolError("backend error event: " + event.at("error").dump());
    }
    if (!event.contains("choices") || !event.at("choices").is_array()) {
        throw ProtocolError("stream event without choices array");
    }
    if (event.at("choices").empty()) return;
    const auto& choice = event.at("choices").at(0);
    if (choice.contains("finish_reason") && choice.at("finish_reason").is_string()) {
        finish_reason_ = choice.at("finish_reason").get<std::string>();
    }
    if (!choice.contains("delta")) return;
    const auto& delta = choice.at("delta");
    if (!delta.is_object()) throw ProtocolError("stream event delta is not an object");
    if (delta.contains("content") && !delta.at("content").is_null()) {
        if (!delta.at("content").is_string()) throw ProtocolError("delta content is not a string");
        auto content = delta.at("content").get<std::string>();
        if (!content.empty()) out.push_back(ChatChunk{std::move(content), false, std::nullopt});
    }
}

void SseChatDecoder::finish() const {
    if (!done_) throw ProtocolError("stream ended without [DONE]");
}

// ---------------------------------------------------------------------------
// LiveBackend

LiveBackendConfig LiveBackendConfig::from_env() {
    auto env = [](const char* name) {
        const char* v = std::getenv(name);
        return v ? std::string(v) : std::string();
    };
    return LiveBackendConfig{env("QU_LLM_ENDPOINT"), env("QU_LLM_API_KEY"), env("QU_LLM_MODEL")};
}

LiveBackend::LiveBackend(LiveBackendConfig config, std::shared_ptr<Clock> clock)
    : config_(std::move(config)), clock_(std::move(clock)) {
    const auto scheme_end = config_.endpoint.find("://");
    if (config_.endpoint.empty() || scheme_end == std::string::npos) {
        throw ConfigError("live backend endpoint must be an absolute http(s) URL");
    }
    const auto path_start = config_.endpoint.find('/', scheme_end + 3);
    scheme_host_port_ = config_.endpoint.substr(0, path_start);
    base_path_ = path_start == std::string::npos ? "" : config_.endpoint.substr(path_start);
    while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
}

void LiveBackend::complete_stream(const ChatRequest& request_in, const ChunkSink& sink) {
    validate_request(request_in);
    ChatRequest request = request_in;
    if (request.model.empty()) request.model = config_.model;

    const Stopwatch watch(*clock_);
    const auto budget = std::chrono::milliseconds(request.timeout_ms);

    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(budget);
    client.set_read_timeout(budget);
    client.set_write_timeout(budget);

    httplib::Request req;
    req.method = "POST";
    req.path = base_path_ + "/chat/completions";
    req.body = chat_request_body(request).dump();
    req.set_header("Content-Type", "application/json");
    req.set_header("Accept", request.stream ? "text/event-stream" : "application/json");
    if (!config_.api_key.empty()) req.set_header("Authorization", "Bearer " + config_.api_key);

    int status = 0;
    bool timed_out = false;
    bool stopped = false;
    std::string raw;  // non-streaming body or error body
    SseChatDecoder decoder;
    std::exception_ptr failure;

    req.response_handler = [&](const httplib::Response& res) {
        status = res.status;
        return true;
    };
    req.content_receiver = [&](const char* data, std::size_t len, std::uint64_t, std::uint64_t) {
        if (watch.elapsed_ms() > request.timeout_ms) {
            timed_out = true;
            return false;
        }
        if (status != 200 || !request.stream) {
            raw.append(data, len);
            return true;
        }
        try {
            for (const auto& chunk : decoder.push(std::string_view(data, len))) {
                if (!sink(chunk)) {
                    stopped = true;
                    return false;
                }
            }
        } catch (...) {
            failure = std::current_exception();
            return false;
        }
        return true;
    };

    httplib::Response res;
    httplib::Error err = httplib::Error::Success;
    const bool ok = client.send(req, res, err);
    if (failure) std::rethrow_exception(failure);
    if (stopped) return;
    if (timed_out || (!ok && watch.elapsed_ms() >= request.timeout_ms)) {
        throw BackendTimeout("live backend exceeded " + std::to_string(request.timeout_ms) +
                             "ms budget");
    }
    if (!ok) throw TransportError("live backend: " + httplib::to_string(err));
    if (status != 200) {
        throw ProtocolError("live backend returned HTTP " + std::to_string(status) + ": " + raw);
    }
    if (!request.stream) {
        json body;
        try {
            body = json::parse(raw);
            const auto& message = body.at("choices").at(0).at("message");
            std::string content = message.value("content", "");
            sink(ChatChunk{std::move(content), true,
                           body.at("choices").at(0).value("finish_reason", std::string("stop"))});
        } catch (const json::exception& e) {
            throw ProtocolError(std::string("malformed completion body: ") + e.what());
        }
        return;
    }
    decoder.finish();
}

}  // namespace qu
