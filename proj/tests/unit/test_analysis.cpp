#include <doctest.h>

#include "fixtures.hpp"
#include "octwarp/analysis.hpp"
#include "octwarp/random.hpp"
#include "reference_counts.hpp"

using namespace octwarp;

namespace {

/// Manifest without image files: pairs in spec order, shuffled display.
StudyManifest unbuilt_manifest(const std::vector<CategorySpec>& specs, std::uint64_t seed) {
    StudyManifest m;
    m.study_id = "study-test";
    m.master_seed = seed;
    m.categories = specs;
    int n = 0;
    for (const auto& spec : specs) {
        for (int k = 0; k < spec.pair_count; ++k) {
            m.items.push_back({"i" + std::to_string(n++), spec.name, GroundTruth::original, std::nullopt,
                               std::nullopt, "src"});
            m.items.push_back({"i" + std::to_string(n++), spec.name, GroundTruth::modified, spec.sigma_min, 1, "src"});
        }
    }
    m.display_order.resize(m.items.size());
    for (std::size_t i = 0; i < m.items.size(); ++i) m.display_order[i] = i;
    SplitMix64 rng(seed);
    for (std::size_t i = m.items.size(); i > 1; --i)
        std::swap(m.display_order[i - 1], m.display_order[rng.bounded(i)]);
    validate(m);
    return m;
}

SessionLog session_log(const StudyManifest& m, const std::string& grader, const std::vector<Verdict>& verdicts,
                       bool finish = true) {
    SessionLog log;
    SessionEvent s;
    s.seq = 1;
    s.time = "2024-01-01T00:00:00.000Z";
    s.kind = EventKind::started;
    s.session_id = "session-" + grader;
    s.grader_id = grader;
    s.study_id = m.study_id;
    s.item_count = m.item_count();
    log.push_back(s);
    std::uint64_t seq = 1;
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        SessionEvent v;
        v.seq = ++seq;
        v.time = s.time;
        v.kind = EventKind::verdict;
        v.item_index = i;
        v.verdict = verdicts[i];
        log.push_back(v);
    }
    if (finish) {
        SessionEvent f;
        f.seq = ++seq;
        f.time = s.time;
        f.kind = EventKind::finished;
        log.push_back(f);
    }
    return log;
}

Session scripted_session(const StudyManifest& m, const std::vector<reference_counts::Cell>& cells, const std::string& grader) {
    return Session::replay(session_log(m, grader, reference_counts::scripted_verdicts(m, cells, grader)));
}

} // namespace

TEST_CASE("tabulate counts final verdicts by ground truth") {
    const auto m = unbuilt_manifest(standard_design(), 1);
    const auto s = scripted_session(m, reference_counts::standard_cells(), "grader3");
    CHECK(tabulate(m, s, "HDA") == ContingencyTable2x2{83, 17, 50, 50});
    CHECK(tabulate(m, s, "CTRL") == ContingencyTable2x2{15, 5, 4, 16});
    CHECK_THROWS_AS(tabulate(m, s, "XYZ"), std::invalid_argument);
}

TEST_CASE("a grader who is always right") {
    const auto m = unbuilt_manifest({{"A", 1, 2, 30}}, 2);
    std::vector<Verdict> v;
    for (std::size_t pos = 0; pos < m.item_count(); ++pos)
        v.push_back(m.item_at_position(pos).ground_truth == GroundTruth::original ? Verdict::original
                                                                                   : Verdict::modified);
    const auto report = analyze_study(m, std::vector{Session::replay(session_log(m, "g", v))});
    const auto* cell = report.find("g", "A");
    REQUIRE(cell);
    CHECK(cell->table == ContingencyTable2x2{30, 0, 0, 30});
    CHECK(cell->tn_rate == 1.0);
    CHECK(cell->fn_rate == 0.0);
    CHECK(cell->p_value < 1e-10);
}

TEST_CASE("revised verdicts count only once, as the final answer") {
    const auto m = unbuilt_manifest({{"A", 1, 2, 10}}, 3);
    auto log = session_log(m, "g", std::vector<Verdict>(20, Verdict::modified), false);
    std::uint64_t seq = log.back().seq;
    for (std::size_t i = 0; i < 20; ++i) {
        SessionEvent v;
        v.seq = ++seq;
        v.kind = EventKind::verdict;
        v.item_index = i;
        v.verdict = Verdict::original;
        log.push_back(v);
    }
    SessionEvent f;
    f.seq = ++seq;
    f.kind = EventKind::finished;
    log.push_back(f);
    CHECK(tabulate(m, Session::replay(log), "A") == ContingencyTable2x2{10, 0, 10, 0});
}

TEST_CASE("scripted sessions reproduce every reference count") {
    const auto m = unbuilt_manifest(standard_design(), 4);
    std::vector<Session> sessions;
    for (const char* g : {"grader1", "grader2", "grader3"})
        sessions.push_back(scripted_session(m, reference_counts::standard_cells(), g));
    auto report = analyze_study(m, sessions);
    REQUIRE(report.cells.size() == 12);
    for (const auto& expected : reference_counts::standard_cells()) {
        CAPTURE(expected.grader);
        CAPTURE(expected.category);
        const auto* cell = report.find(expected.grader, expected.category);
        REQUIRE(cell);
        CHECK(cell->tn_count == expected.tn);
        CHECK(cell->fn_count == expected.fn);
        CHECK(cell->n_original == expected.n_original);
        CHECK(cell->n_modified == expected.n_modified);
        const auto kind = choose_test(cell->table);
        CHECK(cell->test_used == kind);
        CHECK(cell->p_value == p_value(cell->table, kind));
    }
    CHECK(report.find("grader1", "CTRL")->test_used == TestKind::fisher_exact);
    CHECK(report.find("grader3", "CTRL")->test_used == TestKind::yates_chi_square);
    CHECK(format_p(report.find("grader3", "MDA")->p_value) == "0.01");
}

TEST_CASE("reference comparison marks each cell") {
    const auto m = unbuilt_manifest(standard_design(), 5);
    std::vector<Session> sessions{scripted_session(m, reference_counts::standard_cells(), "grader3")};
    auto report = analyze_study(m, sessions);
    const auto reference = reference_from_json(nlohmann::json::parse(R"({"cells": [
        {"grader_id": "grader3", "category": "MDA", "p": "0.01"},
        {"grader_id": "grader3", "category": "LDA", "p": "0.5"}]})"));
    compare_with_reference(report, reference);
    CHECK(report.find("grader3", "MDA")->reference_agrees == true);
    CHECK(report.find("grader3", "LDA")->reference_agrees == false);
    CHECK_FALSE(report.find("grader3", "HDA")->reference_p.has_value());

    const auto j = to_json(report);
    CHECK(j.at("study_id") == "study-test");
    CHECK(j.at("cells").size() == 4);
    const auto& mda = j.at("cells").at(1);
    CHECK(mda.at("category") == "MDA");
    CHECK(mda.at("p_display") == "0.01");
    CHECK(mda.at("test_used") == "chi_square_yates");
    CHECK(mda.at("reference_agrees") == true);

    const auto text = format_table(report);
    CHECK(text.find("grader3") != std::string::npos);
    CHECK(text.find("0.01") != std::string::npos);
    CHECK(text.find("* computed p disagrees") != std::string::npos);
}

TEST_CASE("analysis refuses unfinished or foreign sessions") {
    const auto m = unbuilt_manifest({{"A", 1, 2, 5}}, 6);
    const auto unfinished = Session::replay(session_log(m, "g", {}, false));
    CHECK_THROWS_AS(analyze_study(m, std::vector{unfinished}), std::invalid_argument);

    auto other = m;
    other.study_id = "study-other";
    const auto foreign = Session::replay(session_log(other, "g", {}));
    CHECK_THROWS_AS(analyze_study(m, std::vector{foreign}), std::invalid_argument);
}

TEST_CASE("load_finished_sessions filters by study and completion") {
    fixtures::TempDir dir;
    const auto m = unbuilt_manifest({{"A", 1, 2, 2}}, 7);
    const auto write = [&](const std::string& name, const SessionLog& log) {
        SessionLogWriter w(dir / name);
        for (const auto& e : log) w.append(e);
    };
    write("a.log", session_log(m, "g1", std::vector<Verdict>(4, Verdict::original)));
    write("b.log", session_log(m, "g2", {}, false));
    auto other = m;
    other.study_id = "study-x";
    write("c.log", session_log(other, "g3", {}));
    const auto sessions = load_finished_sessions(dir.path(), m.study_id);
    REQUIRE(sessions.size() == 1);
    CHECK(sessions[0].grader_id() == "g1");
}
