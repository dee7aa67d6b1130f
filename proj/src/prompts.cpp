#include "qu/prompts.hpp"

#include <fstream>
#include <sstream>

#include "qu/errors.hpp"
#include "qu/serialize.hpp"
#include "qu/text.hpp"
#include "qu/tools.hpp"

namespace qu {

// Generated at configure time from prompts/*.txt.
const std::map<std::string, std::string>& builtin_prompt_templates();

PromptLibrary PromptLibrary::builtin() {
    PromptLibrary lib;
    for (const auto& [task, body] : builtin_prompt_templates()) lib.templates_.emplace(task, body);
    return lib;
}

PromptLibrary PromptLibrary::load_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) throw ConfigError("prompt directory " + dir.string() + " not found");
    PromptLibrary lib = builtin();
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() != ".txt") continue;
        const auto task = entry.path().stem().string();
        std::ifstream in(entry.path());
        std::ostringstream body;
        body << in.rdbuf();
        const std::string header = "# task: " + task;
        if (body.str().compare(0, header.size(), header) != 0) {
            throw ConfigError(entry.path().string() + " must start with '" + header + "'");
        }
        lib.templates_[task] = body.str();
    }
    return lib;
}

bool PromptLibrary::has(std::string_view task) const {
    return templates_.find(task) != templates_.end();
}

const std::string& PromptLibrary::raw(std::string_view task) const {
    auto it = templates_.find(task);
    if (it == templates_.end()) throw ConfigError("no prompt template for task '" + std::string(task) + "'");
    return it->second;
}

std::string PromptLibrary::render(std::string_view task,
                                  const std::map<std::string, std::string>& vars) const {
    const std::string& tpl = raw(task);
    std::string out;
    out.reserve(tpl.size());
    std::size_t i = 0;
    while (i < tpl.size()) {
        const auto open = tpl.find("{{", i);
        if (open == std::string::npos) {
            out.append(tpl, i, std::string::npos);
            break;
        }
        const auto close = tpl.find("}}", open + 2);
        if (close == std::string::npos) throw ConfigError("unclosed placeholder in prompt '" + std::string(task) + "'");
        out.append(tpl, i, open - i);
        const auto name = tpl.substr(open + 2, close - open - 2);
        auto it = vars.find(name);
        if (it == vars.end()) {
            throw ConfigError("prompt '" + std::string(task) + "' needs a value for {{" + name + "}}");
        }
        out += it->second;
        i = close + 2;
    }
    return out;
}

std::map<std::string, std::string> prompt_vars(const MemberProfile* profile,
                                               const ToolRegistry* registry,
                                               const TaxonomyConfig* taxonomy) {
    std::map<std::string, std::string> vars;
    vars["profile"] = profile ? nlohmann::json(*profile).dump() : "none";
    vars["tools"] = registry ? describe_tools(*registry) : "";
    std::vector<std::string> industries, seniorities;
    if (taxonomy) {
        for (const auto& i : taxonomy->industries()) industries.push_back(i.id + " (" + i.name + ")");
        for (const auto& s : taxonomy->seniorities()) seniorities.push_back(s.id);
    }
    vars["industries"] = text::join(industries, ", ");
    vars["seniorities"] = text::join(seniorities, ", ");
    std::vector<std::string> routes;
    for (auto r : kAllRoutes) routes.emplace_back(to_string(r));
    vars["routes"] = text::join(routes, ", ");
    vars["slots"] = "location, title, skills, industry, education, experience";
    return vars;
}

ChatRequest make_request(const PromptLibrary& prompts, std::string_view task, std::string_view query,
                         const std::map<std::string, std::string>& vars, std::string model,
                         int timeout_ms) {
    ChatRequest req;
    req.messages.push_back({Role::System, prompts.render(task, vars)});
    req.messages.push_back({Role::User, std::string(query)});
    req.model = std::move(model);
    req.stream = true;
    req.timeout_ms = timeout_ms;
    return req;
}

}  // namespace qu
