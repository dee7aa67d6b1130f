#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "qu/domain.hpp"
#include "qu/llm_gateway.hpp"

namespace qu {

class ToolRegistry;

/// Prompt templates keyed by task ("understand", "plan", "rewrite", "tag").
/// The shipped templates live in prompts/*.txt and are compiled in; a
/// directory of the same files can override them at runtime.
///
/// Templates use {{name}} placeholders. Each starts with a "# task: <name>"
/// line, which is how the mock backend tells tasks apart.
class PromptLibrary {
public:
    static PromptLibrary builtin();
    static PromptLibrary load_dir(const std::filesystem::path& dir);

    bool has(std::string_view task) const;
    const std::string& raw(std::string_view task) const;

    /// Substitutes every {{name}}; throws ConfigError on a placeholder without a value.
    std::string render(std::string_view task, const std::map<std::string, std::string>& vars) const;

private:
    std::map<std::string, std::string, std::less<>> templates_;
};

/// Standard placeholder values: {{tools}}, {{profile}}, {{industries}},
/// {{seniorities}}, {{routes}}, {{slots}}.
std::map<std::string, std::string> prompt_vars(const MemberProfile* profile,
                                               const ToolRegistry* registry,
                                               const TaxonomyConfig* taxonomy);

/// System message from the task template, user message = the query text.
ChatRequest make_request(const PromptLibrary& prompts, std::string_view task, std::string_view query,
                         const std::map<std::string, std::string>& vars, std::string model,
                         int timeout_ms);

}  // namespace qu
