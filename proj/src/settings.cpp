#include "qu/settings.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>

#include "qu/errors.hpp"

namespace qu {

using nlohmann::json;

namespace {

template <typename T>
void take(const json& doc, const char* key, std::optional<T>& out) {
    if (!doc.contains(key)) return;
    try {
        out = doc.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

std::optional<int> parse_int(const char* name, const std::optional<std::string>& raw) {
    if (!raw) return std::nullopt;
    int value = 0;
    const auto* end = raw->data() + raw->size();
    auto [ptr, ec] = std::from_chars(raw->data(), end, value);
    if (ec != std::errc() || ptr != end) throw ConfigError(std::string(name) + " is not an integer");
    return value;
}

std::optional<bool> parse_bool(const char* name, const std::optional<std::string>& raw) {
    if (!raw) return std::nullopt;
    if (*raw == "1" || *raw == "true") return true;
    if (*raw == "0" || *raw == "false") return false;
    throw ConfigError(std::string(name) + " must be 0, 1, true or false");
}

}  // namespace

SettingsLayer settings_from_json(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config file must hold an object");
    SettingsLayer l;
    take(doc, "taxonomy", l.taxonomy_path);
    take(doc, "backend", l.backend);
    take(doc, "mock_script", l.mock_script_path);
    take(doc, "timeout_ms", l.timeout_ms);
    take(doc, "topology", l.topology);
    take(doc, "prompts_dir", l.prompts_dir);
    take(doc, "degrade", l.degrade);
    take(doc, "host", l.host);
    take(doc, "port", l.port);
    take(doc, "llm_endpoint", l.llm_endpoint);
    take(doc, "llm_api_key", l.llm_api_key);
    take(doc, "llm_model", l.llm_model);
    return l;
}

SettingsLayer settings_from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    try {
        return settings_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }
}

SettingsLayer settings_from_env(const EnvLookup& env) {
    SettingsLayer l;
    l.taxonomy_path = env("QU_TAXONOMY");
    l.backend = env("QU_BACKEND");
    l.mock_script_path = env("QU_MOCK_SCRIPT");
    l.timeout_ms = parse_int("QU_TIMEOUT_MS", env("QU_TIMEOUT_MS"));
    l.topology = env("QU_TOPOLOGY");
    l.prompts_dir = env("QU_PROMPTS_DIR");
    l.degrade = parse_bool("QU_DEGRADE", env("QU_DEGRADE"));
    l.host = env("QU_HOST");
    l.port = parse_int("QU_PORT", env("QU_PORT"));
    l.llm_endpoint = env("QU_LLM_ENDPOINT");
    l.llm_api_key = env("QU_LLM_API_KEY");
    l.llm_model = env("QU_LLM_MODEL");
    return l;
}

SettingsLayer settings_from_process_env() {
    return settings_from_env([](const char* name) -> std::optional<std::string> {
        const char* v = std::getenv(name);
        if (v == nullptr || *v == '\0') return std::nullopt;
        return std::string(v);
    });
}

Settings resolve_settings(const std::vector<SettingsLayer>& layers) {
    Settings s;
    std::optional<std::string> topology;
    for (const auto& l : layers) {
        if (l.taxonomy_path) s.taxonomy_path = *l.taxonomy_path;
        if (l.backend) s.backend = *l.backend;
        if (l.mock_script_path) s.mock_script_path = *l.mock_script_path;
        if (l.timeout_ms) s.timeout_ms = *l.timeout_ms;
        if (l.topology) topology = l.topology;
        if (l.prompts_dir) s.prompts_dir = *l.prompts_dir;
        if (l.degrade) s.degrade = *l.degrade;
        if (l.host) s.host = *l.host;
        if (l.port) s.port = *l.port;
        if (l.llm_endpoint) s.live.endpoint = *l.llm_endpoint;
        if (l.llm_api_key) s.live.api_key = *l.llm_api_key;
        if (l.llm_model) s.live.model = *l.llm_model;
    }
    if (s.backend != "mock" && s.backend != "live") throw ConfigError("backend must be mock or live");
    if (s.timeout_ms < 1) throw ConfigError("timeout_ms must be >= 1");
    if (s.port < 0 || s.port > 65535) throw ConfigError("port out of range");
    if (topology) {
        auto t = call_topology_from_string(*topology);
        if (!t) throw ConfigError("topology must be combined or split");
        s.topology = *t;
    }
    return s;
}

std::shared_ptr<LlmBackend> make_backend(const Settings& settings, std::shared_ptr<Clock> clock) {
    if (settings.backend == "live") return std::make_shared<LiveBackend>(settings.live, std::move(clock));
    return std::make_shared<MockBackend>(MockScript::load(settings.mock_script_path), std::move(clock));
}

std::shared_ptr<Pipeline> make_pipeline(const Settings& settings, std::shared_ptr<Clock> clock) {
    auto taxonomy = std::make_shared<const TaxonomyConfig>(TaxonomyConfig::load(settings.taxonomy_path));
    auto registry = std::make_shared<const ToolRegistry>(ToolRegistry::with_defaults());
    PipelineConfig config;
    config.timeout_ms = settings.timeout_ms;
    config.topology = settings.topology;
    config.model = settings.live.model;
    config.degrade_on_backend_failure = settings.degrade;
    auto prompts = settings.prompts_dir.empty() ? PromptLibrary::builtin()
                                                : PromptLibrary::load_dir(settings.prompts_dir);
    auto backend = make_backend(settings, clock);
    return std::make_shared<Pipeline>(std::move(taxonomy), std::move(registry), std::move(backend), config,
                                      std::move(clock), std::make_shared<LatencyRecorder>(), std::move(prompts));
}

}  // namespace qu
