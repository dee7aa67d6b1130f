// qu: command-line front end for the query-understanding library.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "qu/errors.hpp"
#include "qu/eval.hpp"
#include "qu/planner.hpp"
#include "qu/rewriter.hpp"
#include "qu/serialize.hpp"
#include "qu/service.hpp"
#include "qu/settings.hpp"
#include "qu/stream_parser.hpp"
#include "qu/text.hpp"
#include "qu/training_scheduler.hpp"

using nlohmann::json;

namespace {

enum Exit { kOk = 0, kFailure = 1, kUsage = 2, kConfig = 3, kBackend = 4 };

struct GlobalFlags {
    std::string config;
    qu::SettingsLayer layer;
};

qu::Settings settings_for(const GlobalFlags& flags) {
    std::vector<qu::SettingsLayer> layers;
    if (!flags.config.empty()) layers.push_back(qu::settings_from_file(flags.config));
    layers.push_back(qu::settings_from_process_env());
    layers.push_back(flags.layer);
    return qu::resolve_settings(layers);
}

json read_json_arg(const std::string& arg) {
    const auto t = qu::text::trim(arg);
    if (!t.empty() && t.front() == '{') return json::parse(t);
    std::ifstream in(arg);
    if (!in) throw qu::ValidationError("cannot open " + arg);
    return json::parse(in);
}

std::optional<qu::MemberProfile> profile_arg(const std::string& arg) {
    if (arg.empty()) return std::nullopt;
    return read_json_arg(arg).get<qu::MemberProfile>();
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw qu::ValidationError("cannot open " + path);
    return in;
}

void write_output(const std::string& path, const std::string& body) {
    if (path.empty() || path == "-") {
        std::cout << body << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw qu::ValidationError("cannot write " + path);
    out << body << '\n';
}

// "\n", "\t", "\\" and "\xHH" escapes, so control separators fit on a command line.
std::string unescape(const std::string& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\' || i + 1 == s.size()) {
            out += s[i];
            continue;
        }
        const char c = s[++i];
        if (c == 'n') {
            out += '\n';
        } else if (c == 't') {
            out += '\t';
        } else if (c == 'x' && i + 2 < s.size()) {
            out += static_cast<char>(std::stoi(s.substr(i + 1, 2), nullptr, 16));
            i += 2;
        } else {
            out += c;
        }
    }
    return out;
}

json event_json(const qu::ParserEvent& e) {
    if (const auto* call = std::get_if<qu::ToolCallComplete>(&e)) {
        return {{"event", "tool_call"}, {"call", call->call}};
    }
    if (const auto* t = std::get_if<qu::TextDelta>(&e)) return {{"event", "text"}, {"text", t->text}};
    const auto& err = std::get<qu::ParseError>(e);
    return {{"event", "error"}, {"position", err.position}, {"description", err.description}};
}

json plan_json(const qu::PlanDecision& d) {
    json actions = json::array();
    for (auto a : d.actions) actions.push_back(std::string(qu::to_string(a)));
    json out = {{"route", d.route}, {"actions", actions}, {"rationale", d.rationale}};
    if (d.route == qu::IntentRoute::TrustViolation) out["denial_category"] = d.denial_category;
    return out;
}

int run_parse_stream(const std::string& separator_arg) {
    const auto sep = unescape(separator_arg);
    if (sep.empty()) throw qu::ValidationError("separator must be non-empty");
    qu::StreamParser parser;
    auto emit = [](const std::vector<qu::ParserEvent>& events) {
        for (const auto& e : events) std::cout << event_json(e).dump() << '\n';
        std::cout.flush();
    };
    std::string pending;
    char buf[4096];
    while (std::cin.read(buf, sizeof buf) || std::cin.gcount() > 0) {
        pending.append(buf, static_cast<std::size_t>(std::cin.gcount()));
        for (auto pos = pending.find(sep); pos != std::string::npos; pos = pending.find(sep)) {
            emit(parser.feed(std::string_view(pending).substr(0, pos)));
            pending.erase(0, pos + sep.size());
        }
    }
    if (!pending.empty()) emit(parser.feed(pending));
    const auto tail = parser.finish();
    emit(tail);
    return parser.poisoned() ? kFailure : kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Job-search query understanding"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags g;
    app.add_option("--config", g.config, "JSON config file (lowest precedence)");
    app.add_option("--taxonomy", g.layer.taxonomy_path, "taxonomy JSON file");
    app.add_option("--backend", g.layer.backend, "mock or live")->check(CLI::IsMember({"mock", "live"}));
    app.add_option("--mock-script", g.layer.mock_script_path, "mock backend script");
    app.add_option("--timeout-ms", g.layer.timeout_ms, "per-request budget in milliseconds");
    app.add_option("--topology", g.layer.topology, "combined or split backend calls")
        ->check(CLI::IsMember({"combined", "split"}));
    app.add_option("--prompts-dir", g.layer.prompts_dir, "override the compiled-in prompt templates");
    app.add_flag_callback("--no-degrade", [&g] { g.layer.degrade = false; },
                          "report backend failures instead of degrading");

    // understand
    auto* understand = app.add_subcommand("understand", "run the full pipeline on one query");
    std::string query, profile, locale;
    understand->add_option("query,--query", query, "query text")->required();
    understand->add_option("--profile", profile, "member profile (JSON file or inline JSON)");
    understand->add_option("--locale", locale);

    // plan
    auto* plan_cmd = app.add_subcommand("plan", "route a query");
    plan_cmd->add_option("query,--query", query)->required();
    plan_cmd->add_option("--profile", profile);

    // rewrite
    auto* rewrite_cmd = app.add_subcommand("rewrite", "rewrite a self-referential query");
    std::vector<std::string> slot_names;
    rewrite_cmd->add_option("query,--query", query)->required();
    rewrite_cmd->add_option("--profile", profile)->required();
    rewrite_cmd->add_option("--slots", slot_names, "slots to fill; asks the backend when omitted")->delimiter(',');

    // eval / compare
    auto* eval_cmd = app.add_subcommand("eval", "per-tool precision/recall on a labeled dataset");
    std::string dataset, out_path;
    std::size_t threads = 1;
    eval_cmd->add_option("--dataset", dataset)->required();
    eval_cmd->add_option("--out", out_path, "write the JSON report here");
    eval_cmd->add_option("--threads", threads)->check(CLI::PositiveNumber);

    auto* compare_cmd = app.add_subcommand("compare", "deltas between two eval reports");
    std::string baseline, candidate;
    compare_cmd->add_option("baseline", baseline)->required();
    compare_cmd->add_option("candidate", candidate)->required();
    compare_cmd->add_option("--out", out_path);

    // schedule / loss
    auto* schedule_cmd = app.add_subcommand("schedule", "build a training batch manifest");
    std::string data_path, mode = "homogeneous";
    std::size_t batch_size = 0;
    std::uint64_t seed = 0;
    bool do_upsample = false;
    std::vector<std::string> curriculum;
    schedule_cmd->add_option("--data", data_path, "JSONL training records")->required();
    schedule_cmd->add_option("--mode", mode)->check(
        CLI::IsMember({"homogeneous", "heterogeneous", "homo", "hetero"}));
    schedule_cmd->add_option("--batch-size", batch_size)->required();
    schedule_cmd->add_option("--seed", seed);
    schedule_cmd->add_flag("--upsample", do_upsample, "balance task sizes first");
    schedule_cmd->add_option("--curriculum", curriculum, "fixed task order (homogeneous)")->delimiter(',');
    schedule_cmd->add_option("--out", out_path);

    auto* loss_cmd = app.add_subcommand("loss", "per-task loss from supplied token log-probabilities");
    loss_cmd->add_option("--data", data_path)->required();

    // parse-stream
    auto* parse_cmd = app.add_subcommand("parse-stream", "parse chunked model output from stdin");
    std::string separator = "\\x1e";
    parse_cmd->add_option("--separator", separator, "chunk separator (escapes allowed)")->capture_default_str();

    // tools list
    auto* tools_cmd = app.add_subcommand("tools", "tool registry");
    tools_cmd->require_subcommand(1);
    auto* tools_list = tools_cmd->add_subcommand("list", "list registered tools");
    bool as_json = false;
    tools_list->add_flag("--json", as_json);

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
    serve_cmd->add_option("--host", g.layer.host);
    serve_cmd->add_option("--port", g.layer.port);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*parse_cmd) return run_parse_stream(separator);

        if (*tools_list) {
            const auto registry = qu::ToolRegistry::with_defaults();
            if (!as_json) {
                std::cout << qu::describe_tools(registry);
                return kOk;
            }
            json out = json::array();
            for (const auto& spec : registry.specs()) {
                json args = json::array();
                for (const auto& a : spec.arguments) {
                    args.push_back({{"name", a.name},
                                    {"type", std::string(qu::to_string(a.type))},
                                    {"required", a.required}});
                }
                out.push_back({{"name", spec.name},
                               {"produces", spec.produces},
                               {"arguments", args},
                               {"description", spec.description}});
            }
            std::cout << out.dump(2) << '\n';
            return kOk;
        }

        if (*compare_cmd) {
            auto a_in = open_input(baseline);
            auto b_in = open_input(candidate);
            const auto a = qu::MetricReport::from_json(json::parse(a_in));
            const auto b = qu::MetricReport::from_json(json::parse(b_in));
            const auto cmp = qu::compare(a, b);
            std::cout << cmp.render_table();
            if (!out_path.empty()) write_output(out_path, cmp.to_json().dump(2));
            return kOk;
        }

        if (*schedule_cmd) {
            auto in = open_input(data_path);
            auto datasets = qu::load_task_datasets(in);
            if (do_upsample) datasets = qu::upsample(datasets, seed);
            qu::ScheduleOptions options;
            if (!curriculum.empty()) options.curriculum = curriculum;
            const auto manifest =
                qu::schedule(datasets, *qu::batch_mode_from_string(mode), batch_size, seed, options);
            write_output(out_path, manifest.to_json().dump());
            return kOk;
        }

        if (*loss_cmd) {
            auto in = open_input(data_path);
            json out = json::object();
            for (const auto& d : qu::load_task_datasets(in)) out[d.task_id] = qu::corpus_loss(d.examples);
            std::cout << out.dump(2) << '\n';
            return kOk;
        }

        const auto settings = settings_for(g);

        if (*serve_cmd) {
            auto pipeline = qu::make_pipeline(settings);
            qu::HttpService service(pipeline);
            const int port = service.bind(settings.host, settings.port);
            std::cerr << "listening on " << settings.host << ":" << port << " (backend "
                      << pipeline->backend().name() << ")\n";
            service.run();
            return kOk;
        }

        if (*rewrite_cmd) {
            const auto taxonomy = qu::TaxonomyConfig::load(settings.taxonomy_path);
            const auto member = qu::normalized(*profile_arg(profile));
            qu::validate_profile(member, taxonomy);
            const qu::Query q{query, std::nullopt, ""};
            qu::validate_query(q);
            std::vector<qu::Slot> slots;
            if (slot_names.empty()) {
                auto backend = qu::make_backend(settings);
                const auto prompts = settings.prompts_dir.empty() ? qu::PromptLibrary::builtin()
                                                                  : qu::PromptLibrary::load_dir(settings.prompts_dir);
                slots = qu::detect_slots(q, *backend, prompts, {settings.live.model, settings.timeout_ms});
            } else {
                for (const auto& n : slot_names) {
                    auto s = qu::slot_from_string(n);
                    if (!s) throw qu::ValidationError("unknown slot '" + n + "'");
                    slots.push_back(*s);
                }
            }
            const auto outcome = qu::rewrite(q, slots, member, &taxonomy);
            json filled = json::array();
            for (const auto& f : outcome.slots_filled) {
                filled.push_back({{"slot", std::string(qu::to_string(f.slot))},
                                  {"profile_field", f.profile_field},
                                  {"text", f.text}});
            }
            json unfilled = json::array();
            for (auto s : outcome.unfilled) unfilled.push_back(std::string(qu::to_string(s)));
            std::cout << json{{"rewritten", outcome.rewritten}, {"slots_filled", filled}, {"unfilled", unfilled}}.dump(2)
                      << '\n';
            return kOk;
        }

        if (*plan_cmd) {
            auto backend = qu::make_backend(settings);
            const auto prompts = settings.prompts_dir.empty() ? qu::PromptLibrary::builtin()
                                                              : qu::PromptLibrary::load_dir(settings.prompts_dir);
            const qu::Query q{query, std::nullopt, ""};
            qu::validate_query(q);
            const auto member = profile_arg(profile);
            const auto decision = qu::plan(q, member ? &*member : nullptr, *backend, prompts,
                                           {settings.live.model, settings.timeout_ms});
            std::cout << plan_json(decision).dump(2) << '\n';
            return kOk;
        }

        auto pipeline = qu::make_pipeline(settings);

        if (*understand) {
            qu::UnderstandRequest req;
            req.query.text = query;
            if (!locale.empty()) req.query.locale = locale;
            req.profile = profile_arg(profile);
            std::cout << json(pipeline->understand(req)).dump(2) << '\n';
            return kOk;
        }

        if (*eval_cmd) {
            auto in = open_input(dataset);
            const auto examples = qu::load_labeled_dataset(in);
            qu::EvalOptions options;
            options.threads = threads;
            const auto report = qu::evaluate(examples, qu::pipeline_predictor(*pipeline), options);
            std::cout << report.render_table();
            if (!out_path.empty()) write_output(out_path, report.to_json().dump(2));
            return kOk;
        }
    } catch (const qu::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const qu::DatasetFormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const qu::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const qu::BackendError& e) {
        std::cerr << "backend error (" << qu::to_string(e.kind()) << "): " << e.what() << '\n';
        return kBackend;
    } catch (const qu::BudgetExhausted& e) {
        std::cerr << "budget exhausted: " << e.what() << '\n';
        return kBackend;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kOk;
}
