#include "octwarp/analysis.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include <fmt/format.h>

namespace octwarp {

using nlohmann::json;

ContingencyTable2x2 tabulate(const StudyManifest& manifest, const Session& session, std::string_view category) {
    if (!session.finished()) throw std::invalid_argument("session '" + session.session_id() + "' is not finished");
    if (session.study_id() != manifest.study_id)
        throw std::invalid_argument("session '" + session.session_id() + "' belongs to another study");
    if (session.item_count() != manifest.item_count())
        throw std::invalid_argument("session item count does not match the study");
    if (!manifest.find_category(category))
        throw std::invalid_argument("unknown category '" + std::string(category) + "'");

    ContingencyTable2x2 t;
    for (const auto& [position, verdict] : session.verdicts()) {
        const auto& item = manifest.item_at_position(position);
        if (item.category != category) continue;
        const bool labeled_original = verdict == Verdict::original;
        if (item.ground_truth == GroundTruth::original) {
            ++(labeled_original ? t.a : t.b);
        } else {
            ++(labeled_original ? t.c : t.d);
        }
    }
    return t;
}

std::string_view to_string(TestKind kind) {
    return kind == TestKind::yates_chi_square ? "chi_square_yates" : "fisher_exact";
}

TestKind choose_test(const ContingencyTable2x2& table) {
    return min_expected_count(table) >= 5.0 ? TestKind::yates_chi_square : TestKind::fisher_exact;
}

double p_value(const ContingencyTable2x2& table, TestKind kind) {
    return kind == TestKind::yates_chi_square ? chi_square_2x2(table, true).p_value : fisher_exact_2x2(table);
}

const RateCell* RateReport::find(std::string_view grader_id, std::string_view category) const {
    const auto it = std::find_if(cells.begin(), cells.end(), [&](const RateCell& c) {
        return c.grader_id == grader_id && c.category == category;
    });
    return it == cells.end() ? nullptr : &*it;
}

RateReport analyze_study(const StudyManifest& manifest, std::span<const Session> sessions) {
    RateReport report{manifest.study_id, manifest.categories, {}};
    for (const auto& session : sessions) {
        for (const auto& category : manifest.categories) {
            const auto table = tabulate(manifest, session, category.name);
            RateCell cell;
            cell.grader_id = session.grader_id();
            cell.session_id = session.session_id();
            cell.category = category.name;
            cell.table = table;
            cell.tn_count = table.a;
            cell.fn_count = table.c;
            cell.n_original = table.a + table.b;
            cell.n_modified = table.c + table.d;
            cell.tn_rate = cell.n_original ? static_cast<double>(cell.tn_count) / static_cast<double>(cell.n_original) : 0.0;
            cell.fn_rate = cell.n_modified ? static_cast<double>(cell.fn_count) / static_cast<double>(cell.n_modified) : 0.0;
            cell.test_used = choose_test(table);
            cell.p_value = p_value(table, cell.test_used);
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

void compare_with_reference(RateReport& report, std::span<const ReferenceCell> reference) {
    for (auto& cell : report.cells) {
        const auto it = std::find_if(reference.begin(), reference.end(), [&](const ReferenceCell& r) {
            return r.grader_id == cell.grader_id && r.category == cell.category;
        });
        if (it == reference.end()) continue;
        cell.reference_p = it->displayed_p;
        cell.reference_agrees = agrees_at_display_precision(cell.p_value, it->displayed_p);
    }
}

std::vector<ReferenceCell> reference_from_json(const json& doc) {
    std::vector<ReferenceCell> out;
    for (const auto& j : doc.at("cells")) {
        out.push_back({j.at("grader_id").get<std::string>(), j.at("category").get<std::string>(),
                       j.at("p").get<std::string>()});
    }
    return out;
}

json to_json(const RateReport& report) {
    json cells = json::array();
    for (const auto& c : report.cells) {
        json j = {
            {"grader_id", c.grader_id},
            {"session_id", c.session_id},
            {"category", c.category},
            {"tn_count", c.tn_count},
            {"fn_count", c.fn_count},
            {"n_original", c.n_original},
            {"n_modified", c.n_modified},
            {"tn_rate", c.tn_rate},
            {"fn_rate", c.fn_rate},
            {"p_value", c.p_value},
            {"p_display", format_p(c.p_value)},
            {"test_used", to_string(c.test_used)},
            {"table", {{"a", c.table.a}, {"b", c.table.b}, {"c", c.table.c}, {"d", c.table.d}}},
        };
        if (c.reference_p) {
            j["reference_p"] = *c.reference_p;
            j["reference_agrees"] = *c.reference_agrees;
        }
        cells.push_back(std::move(j));
    }
    json categories = json::array();
    for (const auto& c : report.categories) {
        categories.push_back({{"name", c.name}, {"sigma_min", c.sigma_min}, {"sigma_max", c.sigma_max},
                              {"pair_count", c.pair_count}});
    }
    return {{"study_id", report.study_id}, {"categories", categories}, {"cells", cells}};
}

std::string format_table(const RateReport& report) {
    // Row label per session; sessions of one grader get a numeric suffix.
    std::vector<std::string> sessions;
    std::map<std::string, std::string> labels;
    std::map<std::string, int> per_grader;
    for (const auto& c : report.cells) {
        if (std::find(sessions.begin(), sessions.end(), c.session_id) != sessions.end()) continue;
        sessions.push_back(c.session_id);
        const int k = ++per_grader[c.grader_id];
        labels[c.session_id] = k == 1 ? c.grader_id : fmt::format("{} #{}", c.grader_id, k);
    }

    std::size_t label_width = 6;
    for (const auto& [sid, label] : labels) label_width = std::max(label_width, label.size());

    std::vector<std::string> headers;
    std::vector<std::string> subheaders;
    std::vector<std::size_t> widths;
    for (const auto& cat : report.categories) {
        const auto orig = fmt::format("Original (n={})", cat.pair_count);
        const auto mod = fmt::format("Modified (n={})", cat.pair_count);
        const auto sub = fmt::format("{:>{}}  {:>{}}  {:>8}", orig, orig.size(), mod, mod.size(), "p value");
        const auto head = fmt::format("{} sigma [{:g}-{:g}] (n={})", cat.name, cat.sigma_min, cat.sigma_max,
                                      2 * cat.pair_count);
        const auto width = std::max(sub.size(), head.size());
        headers.push_back(head);
        subheaders.push_back(sub);
        widths.push_back(width);
    }

    std::string out = fmt::format("Study {}\n", report.study_id);
    out += fmt::format("{:<{}}", "", label_width);
    for (std::size_t i = 0; i < headers.size(); ++i) out += fmt::format(" | {:<{}}", headers[i], widths[i]);
    out += "\n";
    out += fmt::format("{:<{}}", "Grader", label_width);
    for (std::size_t i = 0; i < subheaders.size(); ++i) out += fmt::format(" | {:<{}}", subheaders[i], widths[i]);
    out += "\n";

    bool any_flag = false;
    for (const auto& sid : sessions) {
        out += fmt::format("{:<{}}", labels[sid], label_width);
        for (std::size_t i = 0; i < report.categories.size(); ++i) {
            const auto& cat = report.categories[i];
            const auto it = std::find_if(report.cells.begin(), report.cells.end(), [&](const RateCell& c) {
                return c.session_id == sid && c.category == cat.name;
            });
            if (it == report.cells.end()) {
                out += fmt::format(" | {:<{}}", "", widths[i]);
                continue;
            }
            std::string p = format_p(it->p_value);
            if (it->test_used == TestKind::fisher_exact) p += "f";
            if (it->reference_agrees && !*it->reference_agrees) {
                p += "*";
                any_flag = true;
            }
            const auto orig_w = fmt::format("Original (n={})", cat.pair_count).size();
            const auto mod_w = fmt::format("Modified (n={})", cat.pair_count).size();
            const auto body = fmt::format("{:>{}}  {:>{}}  {:>8}", it->tn_count, orig_w, it->fn_count, mod_w, p);
            out += fmt::format(" | {:<{}}", body, widths[i]);
        }
        out += "\n";
    }
    out += "Original/Modified: items labeled 'original'. p: Yates chi-square; 'f' marks Fisher exact.\n";
    if (any_flag) out += "* computed p disagrees with the reference value at its display precision.\n";
    return out;
}

std::vector<Session> load_finished_sessions(const std::filesystem::path& dir, std::string_view study_id) {
    std::vector<std::filesystem::path> logs;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".log") logs.push_back(entry.path());
    }
    std::sort(logs.begin(), logs.end());
    std::vector<Session> sessions;
    for (const auto& path : logs) {
        auto session = Session::replay(read_session_log(path));
        if (session.study_id() == study_id && session.finished()) sessions.push_back(std::move(session));
    }
    // Stable ordering for reports: by creation time, then id.
    std::stable_sort(sessions.begin(), sessions.end(), [](const Session& x, const Session& y) {
        return std::tie(x.created_at(), x.session_id()) < std::tie(y.created_at(), y.session_id());
    });
    return sessions;
}

} // namespace octwarp
