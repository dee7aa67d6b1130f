// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "qu/errors.hpp"
#include "qu/eval.hpp"
#include "qu/pipeline.hpp"
#include "qu/planner.hpp"
#include "qu/serialize.hpp"
#include "qu/service.hpp"
#include "qu/stream_parser.hpp"
#include "qu/training_scheduler.hpp"

using namespace qu;
using nlohmann::json;
using WallClock = std::chrono::steady_clock;

namespace {

std::string data_path(const std::string& name) { return std::string(QU_DATA_DIR) + "/" + name; }
std::string testdata_path(const std::string& name) { return std::string(QU_TESTDATA_DIR) + "/" + name; }

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

double ms_since(WallClock::time_point start) {
    return std::chrono::duration<double, std::milli>(WallClock::now() - start).count();
}

std::shared_ptr<const TaxonomyConfig> taxonomy() {
    static const auto t = std::make_shared<const TaxonomyConfig>(TaxonomyConfig::load(data_path("taxonomy.json")));
    return t;
}

MockScript fixture_script() { return MockScript::load(data_path("mock_script.json")); }

std::string call_text(const std::string& tool, const json& args) {
    return json{{"tool", tool}, {"arguments", args}}.dump();
}

MemberProfile us_member() {
    MemberProfile p;
    p.location = ProfileLocation{"Orlando", "Florida", "US"};
    return p;
}

MemberProfile bay_area_engineer() {
    MemberProfile p;
    p.location = ProfileLocation{"Bay Area", "CA", "US"};
    p.titles = {"Software Engineer"};
    p.skills = {"C++", "Distributed Systems", "Go"};
    p.industries = {"software"};
    p.years_experience = 6;
    return p;
}

// Registry whose executors count how often they run.
std::shared_ptr<const ToolRegistry> counting_registry(std::shared_ptr<std::atomic<int>> counter) {
    auto registry = ToolRegistry::with_defaults();
    const auto specs = registry.specs();
    for (const auto& spec : specs) {
        registry.replace_executor(spec.name, [inner = spec.executor, counter](const json& a, const ExecContext& c) {
            ++*counter;
            return inner(a, c);
        });
    }
    return std::make_shared<const ToolRegistry>(std::move(registry));
}

// ---------------------------------------------------------------------------
// 1, 2: streaming parser

std::string random_scalar(std::mt19937_64& rng) {
    static const std::vector<std::string> strings = {
        "\"Naples\"", "\"caf\xC3\xA9\"", "\"brace } { inside\"", "\"esc \\\" \\\\ \\n\"", "\"\\u00e9\"",
        "\"\xF0\x9F\x9A\x80\"", "\"\\ud83d\\ude80\"", "\"\""};
    switch (rng() % 5) {
        case 0: return std::to_string(static_cast<long>(rng() % 200000) - 1000);
        case 1: return rng() % 2 ? "true" : "false";
        case 2: return "null";
        case 3: return "-2.5e-3";
        default: return strings[rng() % strings.size()];
    }
}

std::string random_value(std::mt19937_64& rng, int depth) {
    if (depth > 2 || rng() % 3) return random_scalar(rng);
    std::string out;
    const auto n = rng() % 4;
    if (rng() % 2) {
        out = "[";
        for (std::size_t i = 0; i < n; ++i) out += (i ? "," : "") + random_value(rng, depth + 1);
        return out + "]";
    }
    out = "{";
    for (std::size_t i = 0; i < n; ++i) out += (i ? ", " : "") + ("\"f" + std::to_string(i) + "\": ") + random_value(rng, depth + 1);
    return out + "}";
}

std::string random_response(std::mt19937_64& rng) {
    static const std::vector<std::string> tools = {"route_query", "location_tool", "title_tool", "company_tool",
                                                   "date_posted_tool"};
    static const std::vector<std::string> prose = {"", "", "Sure:\n", " ", "ok ] ) ", "\xE2\x9C\x93 ", "\n\n"};
    std::string out = prose[rng() % prose.size()];
    const auto calls = 1 + rng() % 5;
    for (std::size_t c = 0; c < calls; ++c) {
        std::string args = "{";
        const auto n = rng() % 4;
        for (std::size_t i = 0; i < n; ++i) args += (i ? ", " : "") + ("\"a" + std::to_string(i) + "\":") + random_value(rng, 0);
        args += "}";
        const auto& tool = tools[rng() % tools.size()];
        out += rng() % 2 ? "{\"tool\": \"" + tool + "\", \"arguments\": " + args + "}"
                         : "{ \"arguments\":" + args + ",\n \"tool\":\"" + tool + "\" }";
        out += prose[rng() % prose.size()];
    }
    return out;
}

std::vector<std::string> random_chunking(const std::string& s, std::mt19937_64& rng) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < s.size();) {
        std::size_t len = 0;
        switch (rng() % 4) {
            case 0: len = 1; break;
            case 1: len = 1 + rng() % 3; break;
            case 2: len = 1 + rng() % 40; break;
            default: len = rng() % (s.size() + 1); break;  // may be 0: empty chunk
        }
        out.push_back(s.substr(i, len));
        i += len;
    }
    return out;
}

std::vector<ParserEvent> run_chunks(const std::vector<std::string>& chunks) {
    StreamParser p;
    std::vector<ParserEvent> out;
    for (const auto& c : chunks) {
        auto ev = p.feed(c);
        out.insert(out.end(), ev.begin(), ev.end());
    }
    auto tail = p.finish();
    out.insert(out.end(), tail.begin(), tail.end());
    return out;
}

Verdict criterion_parser_equivalence() {
    Verdict v;
    const auto start = WallClock::now();
    std::mt19937_64 rng(0xC0FFEE);
    int responses = 0, chunkings = 0, divergences = 0;
    for (; responses < 60; ++responses) {
        const auto text = random_response(rng);
        const auto oracle = run_chunks({text});
        std::vector<ToolCall> calls;
        for (const auto& e : oracle) {
            if (const auto* c = std::get_if<ToolCallComplete>(&e)) calls.push_back(c->call);
            v.require(!std::holds_alternative<ParseError>(e), "generated response failed to parse");
        }
        v.require(calls == parse_complete(text), "single-chunk parse disagrees with parse_complete");
        for (int k = 0; k < 20; ++k, ++chunkings) {
            if (run_chunks(random_chunking(text, rng)) != oracle) ++divergences;
        }
    }
    const double ms = ms_since(start);
    v.require(divergences == 0, std::to_string(divergences) + " divergences");
    v.require(ms < 30000.0, "runtime over 30s");
    if (v.pass) {
        v.detail = std::to_string(chunkings) + " chunkings of " + std::to_string(responses) +
                   " responses, 0 divergences, " + std::to_string(static_cast<int>(ms)) + " ms";
    }
    return v;
}

Verdict criterion_earliest_emission() {
    Verdict v;
    const std::string text = "Tags: " + call_text("location_tool", {{"place", "Naples"}}) + "\n" +
                             call_text("title_tool", {{"title", "data {scientist}"}}) + " " +
                             call_text("company_tool", {{"name", "Acme \"Labs\""}});
    // Closing byte of each top-level object, found with a plain scanner.
    std::vector<std::size_t> closes;
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
        } else if (c == '"' && depth > 0) {
            in_string = true;
        } else if (c == '{' || c == '[') {
            ++depth;
        } else if ((c == '}' || c == ']') && --depth == 0) {
            closes.push_back(i);
        }
    }
    v.require(closes.size() == 3, "fixture should hold 3 calls");

    std::mt19937_64 rng(7);
    int chunkings = 0;
    for (; chunkings < 200 && v.pass; ++chunkings) {
        auto chunks = chunkings == 0 ? std::vector<std::string>{} : random_chunking(text, rng);
        if (chunkings == 0) {
            for (char c : text) chunks.emplace_back(1, c);
        }
        std::vector<std::size_t> expected;  // chunk index holding each closing byte
        std::size_t offset = 0, k = 0;
        for (std::size_t ci = 0; ci < chunks.size(); ++ci) {
            while (k < closes.size() && closes[k] < offset + chunks[ci].size()) {
                expected.push_back(ci);
                ++k;
            }
            offset += chunks[ci].size();
        }
        StreamParser p;
        std::vector<std::size_t> actual;
        for (std::size_t ci = 0; ci < chunks.size(); ++ci) {
            for (const auto& e : p.feed(chunks[ci])) {
                if (std::holds_alternative<ToolCallComplete>(e)) actual.push_back(ci);
            }
        }
        for (const auto& e : p.finish()) {
            if (std::holds_alternative<ToolCallComplete>(e)) actual.push_back(chunks.size());
        }
        v.require(actual == expected, "emission chunk index differs on chunking " + std::to_string(chunkings));
    }
    if (v.pass) v.detail = "3 calls at their closing-byte chunk over " + std::to_string(chunkings) + " chunkings";
    return v;
}

// ---------------------------------------------------------------------------
// 3, 4: planner and end-to-end

const char* route_name(IntentRoute r) {
    switch (r) {
        case IntentRoute::TrustViolation: return "trust_violation";
        case IntentRoute::SelfReferenceSearch: return "self_reference";
        case IntentRoute::CriteriaSearch: return "criteria";
        case IntentRoute::NonJobRelated: return "non_job";
    }
    return "";
}

Verdict criterion_precedence() {
    Verdict v;
    const std::vector<IntentRoute> order = {IntentRoute::TrustViolation, IntentRoute::SelfReferenceSearch,
                                            IntentRoute::CriteriaSearch, IntentRoute::NonJobRelated};
    int combos = 0;
    for (unsigned mask = 1; mask < 16; ++mask, ++combos) {
        json names = json::array();
        std::vector<ToolCall> separate;
        std::optional<IntentRoute> expected;
        for (unsigned bit = 0; bit < 4; ++bit) {
            if (!(mask & (1u << bit))) continue;
            if (!expected) expected = order[bit];
            names.push_back(route_name(order[bit]));
            separate.push_back(ToolCall{"route_query", {{"category", route_name(order[bit])}}, 0});
        }
        const auto listed = route_of(ToolCall{"route_query", {{"category", names}}, 0});
        const auto decided = decide(separate);
        v.require(listed == *expected && decided.route == *expected && validate_plan(decided).empty(),
                  "wrong route for signal mask " + std::to_string(mask));
    }

    for (auto topology : {CallTopology::Combined, CallTopology::Split}) {
        auto counter = std::make_shared<std::atomic<int>>(0);
        auto backend = std::make_shared<MockBackend>(fixture_script());
        PipelineConfig config;
        config.topology = topology;
        const Pipeline pipeline(taxonomy(), counting_registry(counter), backend, config);
        const auto r = pipeline.understand({Query{"how do I hurt my coworkers", std::nullopt, ""}, std::nullopt});
        v.require(r.route == IntentRoute::TrustViolation, "trust fixture not denied");
        v.require(backend->call_count() == 1, "trust short-circuit made " + std::to_string(backend->call_count()) +
                                                  " backend calls (" + std::string(to_string(topology)) + ")");
        v.require(*counter == 0, "trust short-circuit executed tools");
    }
    if (v.pass) v.detail = std::to_string(combos) + "/15 combinations; trust: 1 backend call, 0 tool executions";
    return v;
}

Verdict criterion_examples() {
    Verdict v;
    auto backend = std::make_shared<MockBackend>(fixture_script());
    const Pipeline pipeline(taxonomy(), std::make_shared<const ToolRegistry>(ToolRegistry::with_defaults()), backend);
    auto run = [&](const std::string& text, std::optional<MemberProfile> profile) {
        auto r = pipeline.understand({Query{text, std::nullopt, ""}, std::move(profile)});
        r.timings.clear();
        return r;
    };

    UnderstandingResult naples;
    naples.route = IntentRoute::CriteriaSearch;
    naples.tags = {FacetTag::geo_location({"naples_fl", "Naples, Florida"}).set_span(CharSpan{17, 23})};
    v.require(run("find me a job in Naples", us_member()) == naples, "Naples result differs");

    const auto profile = run("jobs that match my profile", bay_area_engineer());
    UnderstandingResult rewritten;
    rewritten.route = IntentRoute::SelfReferenceSearch;
    rewritten.tags = {FacetTag::title("software engineer")};
    rewritten.rewritten_query = "jobs that match Software Engineer; Bay Area, CA";
    v.require(profile == rewritten, "profile-match result differs");

    UnderstandingResult mermaid;
    mermaid.route = IntentRoute::NonJobRelated;
    mermaid.tags = {FacetTag::title("mermaid").set_span(CharSpan{15, 22})};
    mermaid.flags = {"non_job_related"};
    v.require(run("I want to be a mermaid", std::nullopt) == mermaid, "mermaid result differs");

    UnderstandingResult denied;
    denied.route = IntentRoute::TrustViolation;
    denied.denial = DenialNotice{
        "This search query may violate our Professional Community Policies. Edit your search to try again",
        DenialCategory::Violent};
    v.require(run("how do I hurt my coworkers", std::nullopt) == denied, "trust result differs");

    if (v.pass) v.detail = "Naples, profile match, mermaid and trust fixtures equal the expected results";
    return v;
}

// ---------------------------------------------------------------------------
// 5: concurrent tools

Verdict criterion_concurrent_tools() {
    Verdict v;
    auto registry = ToolRegistry::with_defaults();
    for (const char* name : {"location_tool", "title_tool", "company_tool"}) {
        registry.replace_executor(name, [](const json&, const ExecContext&) -> ExecutorOutcome {
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
            return FacetTag::easy_apply(true);
        });
    }
    const std::vector<ToolCall> calls = {{"location_tool", {{"place", "x"}}, 0},
                                         {"title_tool", {{"title", "x"}}, 1},
                                         {"company_tool", {{"name", "x"}}, 2}};
    const ExecContext ctx{taxonomy().get(), nullptr, "x"};
    int ok = 0;
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const auto start = WallClock::now();
        const auto results = execute_all(calls, registry, ctx);
        const double ms = ms_since(start);
        worst = std::max(worst, ms);
        if (ms < 120.0 && results.size() == 3 && results[0].call_index == 0 && results[2].call_index == 2) ++ok;
    }
    v.require(ok == 20, std::to_string(ok) + "/20 repetitions under 120 ms (worst " + std::to_string(worst) + " ms)");
    if (v.pass) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "20/20 repetitions under 120 ms, worst %.1f ms", worst);
        v.detail = buf;
    }
    return v;
}

// ---------------------------------------------------------------------------
// 6, 7, 9: training data

TaskDataset task(const std::string& id, std::size_t n) {
    TaskDataset d{id, {}};
    for (std::size_t i = 0; i < n; ++i) d.examples.push_back({id + " x" + std::to_string(i), "y" + std::to_string(i), {}});
    return d;
}

std::multiset<std::pair<std::string, std::size_t>> entries(const BatchManifest& m) {
    std::multiset<std::pair<std::string, std::size_t>> out;
    for (const auto& b : m.batches) {
        for (const auto& e : b) out.insert({e.task_id, e.example_index});
    }
    return out;
}

Verdict criterion_scheduler() {
    Verdict v;
    const std::vector<TaskDataset> ds = {task("planner", 4), task("location", 4)};
    std::multiset<std::pair<std::string, std::size_t>> all;
    for (const auto& d : ds) {
        for (std::size_t i = 0; i < d.examples.size(); ++i) all.insert({d.task_id, i});
    }
    const auto homo = schedule(ds, BatchMode::Homogeneous, 2, 1);
    v.require(homo.batches.size() == 4, "expected 4 homogeneous batches");
    for (const auto& b : homo.batches) {
        v.require(std::all_of(b.begin(), b.end(), [&](const BatchEntry& e) { return e.task_id == b[0].task_id; }),
                  "mixed homogeneous batch");
    }
    v.require(entries(homo) == all, "homogeneous coverage not exact");

    int mixed_seeds = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto m = schedule(ds, BatchMode::Heterogeneous, 2, seed);
        v.require(entries(m) == all, "heterogeneous coverage not exact");
        const bool mixed = std::any_of(m.batches.begin(), m.batches.end(), [](const auto& b) {
            return std::any_of(b.begin(), b.end(), [&](const BatchEntry& e) { return e.task_id != b[0].task_id; });
        });
        if (mixed) ++mixed_seeds;
    }
    v.require(mixed_seeds >= 1, "no mixed heterogeneous batch over 100 seeds");

    for (auto mode : {BatchMode::Homogeneous, BatchMode::Heterogeneous}) {
        v.require(schedule(ds, mode, 2, 42).to_json().dump() == schedule(ds, mode, 2, 42).to_json().dump(),
                  "same-seed manifests differ");
    }
    if (v.pass) {
        v.detail = "4 single-task batches, exact coverage; mixed batches on " + std::to_string(mixed_seeds) +
                   "/100 seeds; same-seed manifests byte-identical";
    }
    return v;
}

Verdict criterion_loss() {
    Verdict v;
    const double loss = sft_loss(SftExample{"x", "y", std::vector<double>{-0.1, -0.2, -0.3}});
    v.require(std::abs(loss - 0.6) < 1e-9, "loss of [-0.1,-0.2,-0.3] is " + std::to_string(loss));

    std::mt19937 rng(11);
    std::uniform_real_distribution<double> lp(-8.0, 0.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<SftExample> corpus(1 + rng() % 10);
        double sum = 0.0;
        for (auto& e : corpus) {
            e.token_logprobs.emplace(1 + rng() % 12);
            for (auto& x : *e.token_logprobs) x = lp(rng);
            sum += sft_loss(e);
        }
        v.require(corpus_loss(corpus) == sum, "corpus loss differs from the sum of example losses");
    }
    v.require(corpus_loss(std::vector<SftExample>{{"a", "b", std::vector<double>{-0.6}},
                                                  {"c", "d", std::vector<double>{-1.4}}}) == 2.0,
              "0.6 + 1.4 != 2.0");

    bool rejected = false;
    try {
        sft_loss(SftExample{"x", "y", std::vector<double>{-0.1, 0.3}});
    } catch (const ValidationError&) {
        rejected = true;
    }
    v.require(rejected, "positive log-prob accepted");
    if (v.pass) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "loss %.12f; corpus loss equals summed example losses; positive log-prob rejected",
                      loss);
        v.detail = buf;
    }
    return v;
}

Verdict criterion_upsample() {
    Verdict v;
    const std::vector<TaskDataset> uneven = {task("a", 3), task("b", 6)};
    const auto up = upsample(uneven, 5);
    v.require(up.size() == 2 && up[0].examples.size() == 6 && up[1].examples.size() == 6, "sizes not [6, 6]");
    for (std::size_t i = 0; i < 3 && v.pass; ++i) v.require(up[0].examples[i] == uneven[0].examples[i], "original lost");

    const std::vector<TaskDataset> even = {task("a", 4), task("b", 4), task("c", 4)};
    auto dump = [](const std::vector<TaskDataset>& ds) {
        json j = json::array();
        for (const auto& d : ds) {
            for (const auto& e : d.examples) j.push_back({d.task_id, e.prompt, e.target});
        }
        return j.dump();
    };
    v.require(dump(upsample(even, 5)) == dump(even), "all-equal input changed");
    if (v.pass) v.detail = "[3, 6] -> [6, 6]; all-equal input byte-identical";
    return v;
}

// ---------------------------------------------------------------------------
// 8: eval harness

std::string oracle_key(const FacetTag& t) {
    std::string v;
    if (const auto* s = std::get_if<std::string>(&t.payload())) {
        std::istringstream words(*s);
        std::string w;
        while (words >> w) {
            if (!v.empty()) v += ' ';
            for (char c : w) v += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    } else if (const auto* p = std::get_if<ResolvedPlace>(&t.payload())) {
        v = p->place_id;
    } else if (const auto* b = std::get_if<bool>(&t.payload())) {
        v = *b ? "1" : "0";
    } else {
        v = std::to_string(t.number());
    }
    return std::string(to_string(t.facet())) + ":" + v;
}

std::size_t best_matching(const std::vector<std::string>& pred, const std::vector<std::string>& exp, std::size_t i,
                          std::vector<bool>& used) {
    if (i == pred.size()) return 0;
    std::size_t best = best_matching(pred, exp, i + 1, used);
    for (std::size_t j = 0; j < exp.size(); ++j) {
        if (used[j] || exp[j] != pred[i]) continue;
        used[j] = true;
        best = std::max(best, 1 + best_matching(pred, exp, i + 1, used));
        used[j] = false;
    }
    return best;
}

// Brute-force per-tool counts for a dataset and its predictions.
std::map<std::string, Counts> oracle_counts(const std::vector<LabeledExample>& ds,
                                            const std::vector<Prediction>& preds) {
    std::map<std::string, Counts> out;
    for (std::size_t k = 0; k < ds.size(); ++k) {
        std::map<std::string, std::pair<std::vector<std::string>, std::vector<std::string>>> per_tool;
        for (const auto& t : preds[k].tags) per_tool[std::string(default_tool_for(t.facet()))].first.push_back(oracle_key(t));
        for (const auto& t : ds[k].expected_tags) {
            per_tool[std::string(default_tool_for(t.facet()))].second.push_back(oracle_key(t));
        }
        for (const auto& [tool, lists] : per_tool) {
            std::vector<bool> used(lists.second.size(), false);
            const auto tp = best_matching(lists.first, lists.second, 0, used);
            out[tool] += Counts{tp, lists.first.size() - tp, lists.second.size() - tp};
        }
    }
    return out;
}

bool report_matches(const MetricReport& report, const std::map<std::string, Counts>& want) {
    if (report.tools.size() != want.size()) return false;
    for (const auto& row : report.tools) {
        auto it = want.find(row.name);
        if (it == want.end() || it->second != row.counts) return false;
    }
    return true;
}

FacetTag random_tag(std::mt19937& rng) {
    switch (rng() % 5) {
        case 0: return FacetTag::title(rng() % 2 ? "Data  Scientist" : "data scientist");
        case 1: return FacetTag::company(rng() % 2 ? "Acme" : "Initech");
        case 2: return FacetTag::geo_location({rng() % 2 ? "naples_fl" : "naples_it", "Naples"});
        case 3: return FacetTag::max_applicants(rng() % 2 ? 10 : 50);
        default: return FacetTag::job_in_network(rng() % 2 == 0);
    }
}

MetricReport load_report(const std::string& name) {
    std::ifstream in(testdata_path(name));
    if (!in) throw std::runtime_error("missing fixture " + name);
    return MetricReport::from_json(json::parse(in));
}

Verdict criterion_eval() {
    Verdict v;
    int datasets = 0;
    std::mt19937 rng(2024);
    for (; datasets < 300; ++datasets) {
        std::vector<LabeledExample> ds(rng() % 21);
        std::vector<Prediction> preds(ds.size());
        for (std::size_t i = 0; i < ds.size(); ++i) {
            ds[i].query.text = "q" + std::to_string(i);
            for (auto n = rng() % 5; n > 0; --n) ds[i].expected_tags.push_back(random_tag(rng));
            for (auto n = rng() % 5; n > 0; --n) preds[i].tags.push_back(random_tag(rng));
        }
        const auto report = evaluate(ds, [&](const LabeledExample& ex) { return preds.at(std::stoul(ex.query.text.substr(1))); });
        v.require(report_matches(report, oracle_counts(ds, preds)), "random dataset " + std::to_string(datasets));
    }

    // The fixture dataset through the mock pipeline.
    std::ifstream in(testdata_path("eval_fixture.jsonl"));
    const auto fixture = load_labeled_dataset(in);
    auto backend = std::make_shared<MockBackend>(fixture_script());
    const Pipeline pipeline(taxonomy(), std::make_shared<const ToolRegistry>(ToolRegistry::with_defaults()), backend);
    const auto predict = pipeline_predictor(pipeline);
    std::vector<Prediction> preds;
    for (const auto& ex : fixture) preds.push_back(predict(ex));
    v.require(report_matches(evaluate(fixture, predict), oracle_counts(fixture, preds)), "fixture dataset");
    ++datasets;

    const auto cmp = compare(load_report("report_legacy_ner.json"), load_report("report_finetuned.json"));
    const auto loc = std::find_if(cmp.deltas.begin(), cmp.deltas.end(),
                                  [](const MetricDelta& d) { return d.name == "location_tool"; });
    v.require(loc != cmp.deltas.end() && loc->precision && loc->recall, "no location row");
    if (v.pass) {
        v.require(std::abs(*loc->precision - 0.020) < 1e-9, "precision delta " + std::to_string(*loc->precision));
        v.require(std::abs(*loc->recall - 0.087) < 1e-9, "recall delta " + std::to_string(*loc->recall));
    }
    if (v.pass) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%d datasets match the oracle; location deltas %+.3f / %+.3f", datasets,
                      *loc->precision, *loc->recall);
        v.detail = buf;
    }
    return v;
}

// ---------------------------------------------------------------------------
// 10: service floor

double offline_p95(std::vector<double> samples) {
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    const std::size_t rank = (95 * n + 99) / 100;  // ceil(0.95 n) in integers
    return samples[rank - 1];
}

Verdict criterion_service() {
    Verdict v;
    auto backend = std::make_shared<MockBackend>(fixture_script());
    auto pipeline = std::make_shared<Pipeline>(taxonomy(),
                                               std::make_shared<const ToolRegistry>(ToolRegistry::with_defaults()),
                                               backend);
    HttpService service(pipeline);
    const int port = service.bind("127.0.0.1", 0);
    std::thread server([&] { service.run(); });
    service.wait_until_ready();

    const std::vector<std::string> bodies = {
        json{{"query", "find me a job in Naples"}, {"profile", us_member()}}.dump(),
        json{{"query", "jobs that match my profile"}, {"profile", bay_area_engineer()}}.dump(),
        json{{"query", "I want to be a mermaid"}}.dump(),
        json{{"query", "how do I hurt my coworkers"}}.dump(),
        json{{"query", "fintech jobs in the bay area"}}.dump(),
    };
    std::atomic<long> ok{0}, errors{0};
    std::atomic<bool> stop{false};
    const auto start = WallClock::now();
    std::vector<std::thread> clients;
    for (int t = 0; t < 4; ++t) {
        clients.emplace_back([&, t] {
            httplib::Client client("127.0.0.1", port);
            client.set_keep_alive(true);
            client.set_tcp_nodelay(true);
            for (std::size_t i = static_cast<std::size_t>(t); !stop; ++i) {
                const auto res = client.Post("/v1/query/understand", bodies[i % bodies.size()], "application/json");
                if (res && res->status == 200) {
                    ++ok;
                } else {
                    ++errors;
                }
            }
        });
    }
    std::this_thread::sleep_for(std::chrono::seconds(10));
    stop = true;
    for (auto& c : clients) c.join();
    const double seconds = ms_since(start) / 1000.0;
    const double rate = static_cast<double>(ok) / seconds;

    httplib::Client client("127.0.0.1", port);
    const auto res = client.Get("/v1/metrics");
    double reported = -1.0;
    if (res && res->status == 200) reported = json::parse(res->body).at("stages").at("total").at("p95").get<double>();
    const double offline = offline_p95(pipeline->recorder().samples("total"));
    service.stop();
    server.join();

    v.require(errors == 0, std::to_string(errors.load()) + " failed requests");
    v.require(rate >= 200.0, "only " + std::to_string(rate) + " req/s");
    v.require(reported == offline, "metrics P95 " + std::to_string(reported) + " vs offline " + std::to_string(offline));
    if (v.pass) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%.0f req/s over %.1f s, 0 errors; P95 %.3f ms equals offline recomputation",
                      rate, seconds, reported);
        v.detail = buf;
    }
    return v;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"streaming parser equivalence", criterion_parser_equivalence},
        {"earliest emission", criterion_earliest_emission},
        {"planner precedence and trust short-circuit", criterion_precedence},
        {"fixture queries end to end", criterion_examples},
        {"concurrent tool execution", criterion_concurrent_tools},
        {"batch scheduler", criterion_scheduler},
        {"fine-tuning loss", criterion_loss},
        {"eval harness oracle", criterion_eval},
        {"upsampling", criterion_upsample},
        {"service floor", criterion_service},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("exception: ") + e.what();
        }
        if (!v.pass) ++failures;
        std::cout << (v.pass ? "PASS " : "FAIL ") << (i + 1) << " " << criteria[i].first << ": " << v.detail
                  << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
