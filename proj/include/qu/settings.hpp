#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qu/llm_gateway.hpp"
#include "qu/pipeline.hpp"

namespace qu {

/// One configuration source. Unset fields defer to lower layers.
struct SettingsLayer {
    std::optional<std::string> taxonomy_path;
    std::optional<std::string> backend;  // "mock" | "live"
    std::optional<std::string> mock_script_path;
    std::optional<int> timeout_ms;
    std::optional<std::string> topology;  // "combined" | "split"
    std::optional<std::string> prompts_dir;
    std::optional<bool> degrade;
    std::optional<std::string> host;
    std::optional<int> port;
    std::optional<std::string> llm_endpoint;
    std::optional<std::string> llm_api_key;
    std::optional<std::string> llm_model;
};

struct Settings {
    std::string taxonomy_path = "data/taxonomy.json";
    std::string backend = "mock";
    std::string mock_script_path = "data/mock_script.json";
    int timeout_ms = 600;
    CallTopology topology = CallTopology::Combined;
    std::string prompts_dir;  // empty: compiled-in templates
    bool degrade = true;      // false: backend failures surface as errors
    std::string host = "127.0.0.1";
    int port = 8080;
    LiveBackendConfig live;
};

/// Config file keys: taxonomy, backend, mock_script, timeout_ms, topology,
/// prompts_dir, degrade, host, port, llm_endpoint, llm_api_key, llm_model.
SettingsLayer settings_from_json(const nlohmann::json& doc);
SettingsLayer settings_from_file(const std::filesystem::path& path);

using EnvLookup = std::function<std::optional<std::string>(const char*)>;

/// QU_TAXONOMY, QU_BACKEND, QU_MOCK_SCRIPT, QU_TIMEOUT_MS, QU_TOPOLOGY,
/// QU_PROMPTS_DIR, QU_DEGRADE, QU_HOST, QU_PORT, QU_LLM_ENDPOINT, QU_LLM_API_KEY, QU_LLM_MODEL.
SettingsLayer settings_from_env(const EnvLookup& lookup);
SettingsLayer settings_from_process_env();

/// Layers from lowest to highest priority (config file, env, flags).
/// Throws ConfigError on out-of-range or unknown values.
Settings resolve_settings(const std::vector<SettingsLayer>& layers);

std::shared_ptr<LlmBackend> make_backend(const Settings& settings,
                                         std::shared_ptr<Clock> clock = steady_clock());

std::shared_ptr<Pipeline> make_pipeline(const Settings& settings,
                                        std::shared_ptr<Clock> clock = steady_clock());

}  // namespace qu
