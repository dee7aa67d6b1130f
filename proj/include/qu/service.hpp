#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "qu/pipeline.hpp"

namespace qu {

struct HttpReply {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

/// Body of POST /v1/query/understand:
/// {"query": {"text", "locale"?, "request_id"?} | "<text>", "profile"?: {...}}
UnderstandRequest understand_request_from_json(const nlohmann::json& body);

/// Route handlers without the socket layer. Error replies carry
/// {"error": {"code", "message"}}: 400 for invalid input, 504 for an exhausted
/// budget, 502 for other backend failures when degradation is off.
class ServiceHandlers {
public:
    explicit ServiceHandlers(std::shared_ptr<const Pipeline> pipeline);

    HttpReply understand(const std::string& body) const;
    HttpReply health() const;
    HttpReply metrics() const;

private:
    std::shared_ptr<const Pipeline> pipeline_;
};

/// POST /v1/query/understand, GET /v1/health, GET /v1/metrics.
class HttpService {
public:
    explicit HttpService(std::shared_ptr<const Pipeline> pipeline);
    ~HttpService();

    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    /// Binds without serving; port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves until stop(). Requires bind().
    void run();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace qu
