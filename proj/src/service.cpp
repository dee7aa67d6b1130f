#include "qu/service.hpp"

#include <httplib.h>

#include "qu/errors.hpp"
#include "qu/serialize.hpp"

namespace qu {

using nlohmann::json;

UnderstandRequest understand_request_from_json(const json& body) {
    if (!body.is_object()) throw ValidationError("request body must be an object");
    if (!body.contains("query")) throw ValidationError("request needs a query");
    UnderstandRequest req;
    try {
        const auto& q = body.at("query");
        if (q.is_string()) {
            req.query.text = q.get<std::string>();
        } else if (q.is_object()) {
            req.query = q.get<Query>();
        } else {
            throw ValidationError("query must be a string or an object");
        }
        if (body.contains("locale") && body.at("locale").is_string()) req.query.locale = body.at("locale").get<std::string>();
        if (body.contains("profile") && !body.at("profile").is_null()) {
            if (!body.at("profile").is_object()) throw ValidationError("profile must be an object");
            req.profile = body.at("profile").get<MemberProfile>();
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad request body: ") + e.what());
    }
    return req;
}

namespace {

HttpReply error_reply(int status, const char* code, const std::string& message) {
    return {status, json{{"error", {{"code", code}, {"message", message}}}}.dump()};
}

}  // namespace

ServiceHandlers::ServiceHandlers(std::shared_ptr<const Pipeline> pipeline) : pipeline_(std::move(pipeline)) {}

HttpReply ServiceHandlers::understand(const std::string& body) const {
    try {
        const auto doc = json::parse(body);
        const auto result = pipeline_->understand(understand_request_from_json(doc));
        return {200, json(result).dump()};
    } catch (const json::parse_error& e) {
        return error_reply(400, "invalid_json", e.what());
    } catch (const ValidationError& e) {
        return error_reply(400, "validation_error", e.what());
    } catch (const BudgetExhausted& e) {
        return error_reply(504, "budget_exhausted", e.what());
    } catch (const BackendError& e) {
        return error_reply(502, to_string(e.kind()), e.what());
    } catch (const std::exception& e) {
        return error_reply(500, "internal", e.what());
    }
}

HttpReply ServiceHandlers::health() const {
    return {200, json{{"status", "ok"},
                      {"backend", pipeline_->backend().name()},
                      {"topology", std::string(to_string(pipeline_->config().topology))},
                      {"schema_version", kSchemaVersion}}
                     .dump()};
}

HttpReply ServiceHandlers::metrics() const {
    return {200, pipeline_->recorder().metrics().dump()};
}

struct HttpService::Impl {
    explicit Impl(std::shared_ptr<const Pipeline> p) : handlers(std::move(p)) {}

    ServiceHandlers handlers;
    httplib::Server server;
    bool bound = false;
};

HttpService::HttpService(std::shared_ptr<const Pipeline> pipeline)
    : impl_(std::make_unique<Impl>(std::move(pipeline))) {
    auto send = [](httplib::Response& res, const HttpReply& reply) {
        res.status = reply.status;
        res.set_content(reply.body, reply.content_type);
    };
    auto* impl = impl_.get();
    // Headers and body are separate writes; with Nagle on, each reply waits on a delayed ACK.
    impl->server.set_tcp_nodelay(true);
    impl->server.Post("/v1/query/understand", [impl, send](const httplib::Request& req, httplib::Response& res) {
        send(res, impl->handlers.understand(req.body));
    });
    impl->server.Get("/v1/health", [impl, send](const httplib::Request&, httplib::Response& res) {
        send(res, impl->handlers.health());
    });
    impl->server.Get("/v1/metrics", [impl, send](const httplib::Request&, httplib::Response& res) {
        send(res, impl->handlers.metrics());
    });
}

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
    int bound = 0;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else {
        bound = impl_->server.bind_to_port(host, port) ? port : -1;
    }
    if (bound <= 0) throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
    impl_->bound = true;
    return bound;
}

void HttpService::run() {
    if (!impl_->bound) throw std::logic_error("HttpService::run before bind");
    impl_->server.listen_after_bind();
}

void HttpService::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void HttpService::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace qu
