#include "qu/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "qu/errors.hpp"
#include "qu/serialize.hpp"
#include "qu/text.hpp"
#include "qu/tools.hpp"

namespace qu {

using nlohmann::json;

std::vector<LabeledExample> load_labeled_dataset(std::istream& in) {
    std::vector<LabeledExample> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            const auto rec = json::parse(line);
            LabeledExample ex;
            const auto& q = rec.at("query");
            if (q.is_string()) {
                ex.query.text = q.get<std::string>();
            } else {
                ex.query = q.get<Query>();
            }
            validate_query(ex.query);
            if (rec.contains("profile") && !rec.at("profile").is_null()) {
                ex.profile = rec.at("profile").get<MemberProfile>();
            }
            ex.expected_route = rec.at("route").get<IntentRoute>();
            if (rec.contains("tags")) {
                for (const auto& t : rec.at("tags")) {
                    auto tag = t.get<FacetTag>();
                    if (auto bad = validate_tag(tag, ex.query.text); !bad.empty()) {
                        throw DatasetFormatError(line_no, "tag violates " + text::join(bad, ", "));
                    }
                    ex.expected_tags.push_back(std::move(tag));
                }
            }
            out.push_back(std::move(ex));
        } catch (const json::exception& e) {
            throw DatasetFormatError(line_no, e.what());
        } catch (const ValidationError& e) {
            throw DatasetFormatError(line_no, e.what());
        }
    }
    return out;
}

std::optional<double> Counts::precision() const {
    if (tp + fp == 0) return std::nullopt;
    return static_cast<double>(tp) / static_cast<double>(tp + fp);
}

std::optional<double> Counts::recall() const {
    if (tp + fn == 0) return std::nullopt;
    return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

Counts& Counts::operator+=(const Counts& other) {
    tp += other.tp;
    fp += other.fp;
    fn += other.fn;
    return *this;
}

const MetricRow* MetricReport::tool(std::string_view name) const {
    for (const auto& r : tools) {
        if (r.name == name) return &r;
    }
    return nullptr;
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json row_json(const MetricRow& r) {
    return {{"name", r.name},
            {"tp", r.counts.tp},
            {"fp", r.counts.fp},
            {"fn", r.counts.fn},
            {"precision", optional_number(r.counts.precision())},
            {"recall", optional_number(r.counts.recall())}};
}

MetricRow row_from_json(const json& j) {
    return {j.at("name").get<std::string>(),
            Counts{j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(), j.at("fn").get<std::size_t>()}};
}

std::string fixed3(const std::optional<double>& v) {
    if (!v) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", *v);
    return buf;
}

std::string signed3(const std::optional<double>& v) {
    if (!v) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%+.3f", *v);
    return buf;
}

std::string render_rows(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& r : rows) {
        width.resize(std::max(width.size(), r.size()));
        for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    }
    std::ostringstream out;
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i == 0) {
                out << r[i] << std::string(width[i] - r[i].size(), ' ');
            } else {
                out << "  " << std::string(width[i] - r[i].size(), ' ') << r[i];
            }
        }
        out << '\n';
    }
    return out.str();
}

std::vector<std::string> table_row(const MetricRow& r) {
    return {r.name,
            std::to_string(r.counts.tp),
            std::to_string(r.counts.fp),
            std::to_string(r.counts.fn),
            fixed3(r.counts.precision()),
            fixed3(r.counts.recall())};
}

}  // namespace

json MetricReport::to_json() const {
    json out = {{"schema_version", kSchemaVersion},
                {"matching_rule", std::string(kMatchingRule)},
                {"examples", examples},
                {"planner", row_json(planner)},
                {"routes", json::array()},
                {"tools", json::array()}};
    for (const auto& r : routes) out["routes"].push_back(row_json(r));
    for (const auto& r : tools) out["tools"].push_back(row_json(r));
    return out;
}

MetricReport MetricReport::from_json(const json& doc) {
    MetricReport r;
    try {
        r.examples = doc.value("examples", std::size_t{0});
        if (doc.contains("planner")) r.planner = row_from_json(doc.at("planner"));
        if (doc.contains("routes")) {
            for (const auto& row : doc.at("routes")) r.routes.push_back(row_from_json(row));
        }
        for (const auto& row : doc.at("tools")) r.tools.push_back(row_from_json(row));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad metric report: ") + e.what());
    }
    std::sort(r.tools.begin(), r.tools.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    return r;
}

std::string MetricReport::render_table() const {
    std::vector<std::vector<std::string>> rows = {{"Tool", "TP", "FP", "FN", "Precision", "Recall"}};
    auto planner_row = table_row(planner);
    planner_row[0] += " (micro)";
    rows.push_back(std::move(planner_row));
    for (const auto& r : tools) rows.push_back(table_row(r));
    std::string out = "Matching rule: " + std::string(kMatchingRule) + "\n";
    out += "Examples: " + std::to_string(examples) + "\n";
    return out + render_rows(rows);
}

std::string match_key(const FacetTag& tag) {
    if (std::holds_alternative<std::string>(tag.payload())) {
        return std::string(to_string(tag.facet())) + "=" + text::normalize_label(tag.text());
    }
    return tag.payload_key();
}

std::vector<MetricRow> match_example(std::span<const FacetTag> predicted, std::span<const FacetTag> expected,
                                     const std::function<std::string(Facet)>& tool_for) {
    // Matching needs equal keys, so a maximum matching is the multiset intersection.
    std::map<std::string, std::map<std::string, std::pair<std::size_t, std::size_t>>> by_tool;
    for (const auto& t : predicted) ++by_tool[tool_for(t.facet())][match_key(t)].first;
    for (const auto& t : expected) ++by_tool[tool_for(t.facet())][match_key(t)].second;

    std::vector<MetricRow> rows;
    for (const auto& [tool, keys] : by_tool) {
        Counts c;
        for (const auto& [_, n] : keys) {
            const auto both = std::min(n.first, n.second);
            c.tp += both;
            c.fp += n.first - both;
            c.fn += n.second - both;
        }
        rows.push_back({tool, c});
    }
    return rows;
}

MetricReport evaluate(std::span<const LabeledExample> dataset, const Predictor& predict,
                      const EvalOptions& options) {
    std::function<std::string(Facet)> tool_for = options.tool_for;
    if (!tool_for) tool_for = [](Facet f) { return std::string(default_tool_for(f)); };

    std::map<std::string, Counts> tools;
    std::map<IntentRoute, Counts> routes;
    std::mutex mu;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;

    auto worker = [&] {
        std::map<std::string, Counts> local_tools;
        std::map<IntentRoute, Counts> local_routes;
        for (std::size_t i = next++; i < dataset.size(); i = next++) {
            const auto& ex = dataset[i];
            Prediction p;
            try {
                p = predict(ex);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
                next = dataset.size();
                return;
            }
            for (const auto& row : match_example(p.tags, ex.expected_tags, tool_for)) {
                local_tools[row.name] += row.counts;
            }
            if (p.route == ex.expected_route) {
                ++local_routes[p.route].tp;
            } else {
                ++local_routes[p.route].fp;
                ++local_routes[ex.expected_route].fn;
            }
        }
        std::lock_guard lock(mu);
        for (const auto& [k, c] : local_tools) tools[k] += c;
        for (const auto& [k, c] : local_routes) routes[k] += c;
    };

    const auto threads = std::max<std::size_t>(1, std::min(options.threads, dataset.size()));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    MetricReport report;
    report.examples = dataset.size();
    for (const auto& [name, c] : tools) report.tools.push_back({name, c});
    report.planner.name = std::string(kPlannerRow);
    for (auto r : kAllRoutes) {
        const auto c = routes[r];
        report.routes.push_back({std::string(to_string(r)), c});
        report.planner.counts += c;
    }
    return report;
}

Predictor pipeline_predictor(const Pipeline& pipeline) {
    return [&pipeline](const LabeledExample& ex) {
        const auto result = pipeline.understand({ex.query, ex.profile});
        return Prediction{result.route, result.tags};
    };
}

namespace {

std::optional<double> diff(const std::optional<double>& a, const std::optional<double>& b) {
    if (!a || !b) return std::nullopt;
    return *b - *a;
}

MetricDelta delta_of(const MetricRow& a, const MetricRow& b) {
    return {a.name, diff(a.counts.precision(), b.counts.precision()), diff(a.counts.recall(), b.counts.recall())};
}

}  // namespace

Comparison compare(const MetricReport& a, const MetricReport& b) {
    Comparison out;
    for (const auto& row : a.tools) {
        if (const auto* other = b.tool(row.name)) {
            out.deltas.push_back(delta_of(row, *other));
        } else {
            out.only_in_a.push_back(row.name);
        }
    }
    for (const auto& row : b.tools) {
        if (!a.tool(row.name)) out.only_in_b.push_back(row.name);
    }
    std::sort(out.deltas.begin(), out.deltas.end(), [](const auto& x, const auto& y) { return x.name < y.name; });
    out.planner = delta_of(a.planner, b.planner);
    out.planner.name = std::string(kPlannerRow);
    return out;
}

json Comparison::to_json() const {
    auto row = [](const MetricDelta& d) {
        return json{{"name", d.name},
                    {"precision_delta", optional_number(d.precision)},
                    {"recall_delta", optional_number(d.recall)}};
    };
    json out = {{"planner", row(planner)},
                {"tools", json::array()},
                {"only_in_a", only_in_a},
                {"only_in_b", only_in_b}};
    for (const auto& d : deltas) out["tools"].push_back(row(d));
    return out;
}

std::string Comparison::render_table() const {
    std::vector<std::vector<std::string>> rows = {{"Tool", "dPrecision", "dRecall"}};
    rows.push_back({planner.name + " (micro)", signed3(planner.precision), signed3(planner.recall)});
    for (const auto& d : deltas) rows.push_back({d.name, signed3(d.precision), signed3(d.recall)});
    auto out = render_rows(rows);
    if (!only_in_a.empty()) out += "Only in baseline: " + text::join(only_in_a, ", ") + "\n";
    if (!only_in_b.empty()) out += "Only in candidate: " + text::join(only_in_b, ", ") + "\n";
    return out;
}

}  // namespace qu
