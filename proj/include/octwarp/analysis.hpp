#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "octwarp/session.hpp"
#include "octwarp/stats.hpp"
#include "octwarp/study.hpp"

namespace octwarp {

/// Final verdicts of a finished session, restricted to one category.
/// a/b: originals labeled original/modified; c/d: modified items labeled
/// original/modified.
ContingencyTable2x2 tabulate(const StudyManifest& manifest, const Session& session,
                             std::string_view category);

enum class TestKind { yates_chi_square, fisher_exact };

std::string_view to_string(TestKind kind);

/// Yates chi-square when every expected count is at least 5, Fisher otherwise.
TestKind choose_test(const ContingencyTable2x2& table);
double p_value(const ContingencyTable2x2& table, TestKind kind);

struct RateCell {
    std::string grader_id;
    std::string session_id;
    std::string category;
    ContingencyTable2x2 table;
    std::uint64_t tn_count = 0;  ///< originals labeled original
    std::uint64_t fn_count = 0;  ///< modified labeled original
    std::uint64_t n_original = 0;
    std::uint64_t n_modified = 0;
    double tn_rate = 0.0;
    double fn_rate = 0.0;
    double p_value = 1.0;
    TestKind test_used = TestKind::yates_chi_square;
    std::optional<std::string> reference_p;
    std::optional<bool> reference_agrees;
};

struct RateReport {
    std::string study_id;
    std::vector<CategorySpec> categories;
    std::vector<RateCell> cells;  ///< session-major, categories in study order

    const RateCell* find(std::string_view grader_id, std::string_view category) const;
};

/// Throws std::invalid_argument if a session is unfinished or belongs to
/// another study.
RateReport analyze_study(const StudyManifest& manifest, std::span<const Session> sessions);

/// A published p-value to compare a report cell against.
struct ReferenceCell {
    std::string grader_id;
    std::string category;
    std::string displayed_p;
};

/// Marks every matching cell with the reference value and whether the
/// computed p agrees at the reference's display precision.
void compare_with_reference(RateReport& report, std::span<const ReferenceCell> reference);
std::vector<ReferenceCell> reference_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const RateReport& report);

/// Aligned text table: one row per grader, (original, modified, p) per category.
std::string format_table(const RateReport& report);

/// Every *.log session under `dir` that belongs to `study_id` and is finished.
std::vector<Session> load_finished_sessions(const std::filesystem::path& dir, std::string_view study_id);

} // namespace octwarp
