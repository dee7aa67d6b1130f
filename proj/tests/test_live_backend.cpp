#include <doctest.h>

#include <httplib.h>

#include <thread>

#include "qu/llm_gateway.hpp"

using namespace qu;
using nlohmann::json;

namespace {

std::string delta_event(const std::string& content) {
    return "data: " + json{{"choices", {{{"index", 0}, {"delta", {{"content", content}}}}}}}.dump() + "\n\n";
}

std::string finish_event(const std::string& reason) {
    return "data: " + json{{"choices", {{{"index", 0}, {"delta", json::object()}, {"finish_reason", reason}}}}}.dump() +
           "\n\n";
}

std::vector<ChatChunk> decode_all(const std::string& wire, std::size_t step) {
    SseChatDecoder d;
    std::vector<ChatChunk> out;
    for (std::size_t i = 0; i < wire.size(); i += step) {
        auto got = d.push(std::string_view(wire).substr(i, step));
        out.insert(out.end(), got.begin(), got.end());
    }
    d.finish();
    return out;
}

// Fake chat-completion endpoint on an ephemeral port.
class FakeEndpoint {
public:
    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    explicit FakeEndpoint(Handler h) {
        server_.Post("/v1/chat/completions", std::move(h));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeEndpoint() {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

ChatRequest request(int timeout_ms = 2000) {
    ChatRequest r;
    r.messages = {{Role::System, "# task: plan"}, {Role::User, "hello"}};
    r.timeout_ms = timeout_ms;
    return r;
}

std::vector<ChatChunk> collect(LlmBackend& backend, const ChatRequest& req) {
    std::vector<ChatChunk> out;
    backend.complete_stream(req, [&](const ChatChunk& c) {
        out.push_back(c);
        return true;
    });
    return out;
}

}  // namespace

TEST_CASE("decoder: deltas then done marker") {
    const std::string wire = ": keep-alive\n\n" + delta_event("Hel") + delta_event("lo") + finish_event("stop") +
                             "data: [DONE]\n\n";
    for (std::size_t step : {1, 2, 3, 7, 1000}) {
        CAPTURE(step);
        const auto chunks = decode_all(wire, step);
        REQUIRE(chunks.size() == 3);
        CHECK(chunks[0] == ChatChunk{"Hel", false, std::nullopt});
        CHECK(chunks[1] == ChatChunk{"lo", false, std::nullopt});
        CHECK(chunks[2] == ChatChunk{"", true, "stop"});
    }
}

TEST_CASE("decoder: CRLF lines, event/id fields and empty choices are tolerated") {
    const std::string wire = "event: message\r\nid: 1\r\n" + std::string("data: {\"choices\":[]}\r\n\r\n") +
                             "data:{\"choices\":[{\"delta\":{\"content\":\"x\"}}]}\r\n\r\ndata: [DONE]\r\n\r\n";
    const auto chunks = decode_all(wire, 4);
    REQUIRE(chunks.size() == 2);
    CHECK(chunks[0].delta == "x");
    CHECK(chunks[1].finished);
    CHECK(chunks[1].finish_reason == "stop");
}

TEST_CASE("decoder: finish reason carried onto the final chunk") {
    const auto chunks = decode_all(delta_event("a") + finish_event("length") + "data: [DONE]\n\n", 5);
    REQUIRE(chunks.size() == 2);
    CHECK(chunks[1].finish_reason == "length");
}

TEST_CASE("decoder: protocol errors") {
    SUBCASE("malformed json") {
        SseChatDecoder d;
        CHECK_THROWS_AS(d.push("data: {nope\n\n"), ProtocolError);
    }
    SUBCASE("no choices") {
        SseChatDecoder d;
        CHECK_THROWS_AS(d.push("data: {\"id\":1}\n\n"), ProtocolError);
    }
    SUBCASE("error event") {
        SseChatDecoder d;
        CHECK_THROWS_AS(d.push("data: {\"error\":{\"message\":\"overloaded\"}}\n\n"), ProtocolError);
    }
    SUBCASE("non-string content") {
        SseChatDecoder d;
        CHECK_THROWS_AS(d.push("data: {\"choices\":[{\"delta\":{\"content\":5}}]}\n\n"), ProtocolError);
    }
    SUBCASE("data after done") {
        SseChatDecoder d;
        d.push("data: [DONE]\n\n");
        CHECK_THROWS_AS(d.push(delta_event("late")), ProtocolError);
    }
    SUBCASE("no done marker") {
        SseChatDecoder d;
        d.push(delta_event("a"));
        CHECK_FALSE(d.done());
        CHECK_THROWS_AS(d.finish(), ProtocolError);
    }
}

TEST_CASE("config needs an absolute endpoint") {
    CHECK_THROWS_AS(LiveBackend(LiveBackendConfig{"", "", ""}), ConfigError);
    CHECK_THROWS_AS(LiveBackend(LiveBackendConfig{"localhost:8000", "", ""}), ConfigError);
    CHECK_NOTHROW(LiveBackend(LiveBackendConfig{"http://localhost:8000/v1/", "k", "m"}));
}

TEST_CASE("live client streams from a conforming endpoint") {
    json seen_body;
    std::string seen_auth;
    FakeEndpoint endpoint([&](const httplib::Request& req, httplib::Response& res) {
        seen_body = json::parse(req.body);
        seen_auth = req.get_header_value("Authorization");
        res.set_content(delta_event("{\"tool\": ") + delta_event("\"route_query\"}") + "data: [DONE]\n\n",
                        "text/event-stream");
    });
    LiveBackend backend(LiveBackendConfig{endpoint.url(), "secret", "qu-model"});
    const auto chunks = collect(backend, request());
    REQUIRE(chunks.size() == 3);
    CHECK(chunks[0].delta + chunks[1].delta == "{\"tool\": \"route_query\"}");
    CHECK(chunks[2].finished);
    CHECK(seen_auth == "Bearer secret");
    CHECK(seen_body.at("model") == "qu-model");
    CHECK(seen_body.at("stream") == true);
    CHECK(seen_body.at("messages").size() == 2);
}

TEST_CASE("live client: non-streaming body") {
    FakeEndpoint endpoint([](const httplib::Request&, httplib::Response& res) {
        res.set_content(json{{"choices", {{{"message", {{"role", "assistant"}, {"content", "pong"}}},
                                           {"finish_reason", "stop"}}}}}
                            .dump(),
                        "application/json");
    });
    LiveBackend backend(LiveBackendConfig{endpoint.url(), "", "m"});
    auto req = request();
    req.stream = false;
    const auto chunks = collect(backend, req);
    REQUIRE(chunks.size() == 1);
    CHECK(chunks[0] == ChatChunk{"pong", true, "stop"});
}

TEST_CASE("live client: HTTP error status is a protocol error") {
    FakeEndpoint endpoint([](const httplib::Request&, httplib::Response& res) {
        res.status = 500;
        res.set_content("boom", "text/plain");
    });
    LiveBackend backend(LiveBackendConfig{endpoint.url(), "", "m"});
    CHECK_THROWS_AS(collect(backend, request()), ProtocolError);
}

TEST_CASE("live client: stream cut before the done marker") {
    FakeEndpoint endpoint([](const httplib::Request&, httplib::Response& res) {
        res.set_content(delta_event("partial"), "text/event-stream");
    });
    LiveBackend backend(LiveBackendConfig{endpoint.url(), "", "m"});
    std::vector<ChatChunk> got;
    CHECK_THROWS_AS(backend.complete_stream(request(),
                                            [&](const ChatChunk& c) {
                                                got.push_back(c);
                                                return true;
                                            }),
                    ProtocolError);
    REQUIRE(got.size() == 1);
    CHECK(got[0].delta == "partial");
}

TEST_CASE("live client: slow endpoint exceeds the budget") {
    FakeEndpoint endpoint([](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(400));
        res.set_content(delta_event("late") + "data: [DONE]\n\n", "text/event-stream");
    });
    LiveBackend backend(LiveBackendConfig{endpoint.url(), "", "m"});
    std::vector<ChatChunk> got;
    CHECK_THROWS_AS(backend.complete_stream(request(100),
                                            [&](const ChatChunk& c) {
                                                got.push_back(c);
                                                return true;
                                            }),
                    BackendTimeout);
    CHECK(got.empty());
}

TEST_CASE("live client: nothing listening is a transport error") {
    // Port 1 (tcpmux) is reserved and has no listener here, so connect is refused.
    LiveBackend backend(LiveBackendConfig{"http://127.0.0.1:1/v1", "", "m"});
    CHECK_THROWS_AS(collect(backend, request()), TransportError);
}
