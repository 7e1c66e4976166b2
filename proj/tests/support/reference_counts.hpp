#pragma once

// Reference grader counts: items labeled 'original' among originals and
// among modified images, with the p-value as displayed.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "octwarp/session.hpp"
#include "octwarp/study.hpp"

namespace reference_counts {

struct Cell {
    std::string grader;
    std::string category;
    std::uint64_t tn;  ///< originals labeled original
    std::uint64_t n_original;
    std::uint64_t fn;  ///< modified labeled original
    std::uint64_t n_modified;
    std::string p;
};

inline const std::vector<Cell>& standard_cells() {
    static const std::vector<Cell> cells = {
        {"grader1", "LDA", 85, 100, 77, 100, "0.21"}, {"grader1", "MDA", 85, 100, 76, 100, "0.15"},
        {"grader1", "HDA", 91, 100, 75, 100, "4e-4"}, {"grader1", "CTRL", 20, 20, 13, 20, "8e-3"},
        {"grader2", "LDA", 75, 100, 71, 100, "0.63"}, {"grader2", "MDA", 73, 100, 65, 100, "0.28"},
        {"grader2", "HDA", 81, 100, 61, 100, "3e-3"}, {"grader2", "CTRL", 17, 20, 4, 20, "4e-3"},
        {"grader3", "LDA", 76, 100, 76, 100, "1"},    {"grader3", "MDA", 80, 100, 63, 100, "0.01"},
        {"grader3", "HDA", 83, 100, 50, 100, "1e-4"}, {"grader3", "CTRL", 15, 20, 4, 20, "1e-3"},
    };
    return cells;
}

inline const std::vector<Cell>& refined_cells() {
    static const std::vector<Cell> cells = {
        {"grader1", "sigma7-9", 89, 100, 93, 100, "0.43"},   {"grader1", "sigma10-11", 73, 100, 58, 100, "0.037"},
        {"grader2", "sigma7-9", 93, 100, 89, 100, "0.47"},   {"grader2", "sigma10-11", 48, 100, 27, 100, "0.003"},
        {"grader3", "sigma7-9", 99, 100, 93, 100, "0.55"},   {"grader3", "sigma10-11", 80, 100, 50, 100, "<1e-3"},
    };
    return cells;
}

/// Verdict for every display position such that, per category, exactly
/// `tn` originals and `fn` modified items are labeled 'original'.
inline std::vector<octwarp::Verdict> scripted_verdicts(const octwarp::StudyManifest& manifest,
                                                       const std::vector<Cell>& cells, const std::string& grader) {
    std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> budget;
    for (const auto& c : cells) {
        if (c.grader == grader) budget[c.category] = {c.tn, c.fn};
    }
    std::vector<octwarp::Verdict> out;
    out.reserve(manifest.item_count());
    for (std::size_t pos = 0; pos < manifest.item_count(); ++pos) {
        const auto& item = manifest.item_at_position(pos);
        auto& [tn, fn] = budget.at(item.category);
        auto& remaining = item.ground_truth == octwarp::GroundTruth::original ? tn : fn;
        if (remaining > 0) {
            --remaining;
            out.push_back(octwarp::Verdict::original);
        } else {
            out.push_back(octwarp::Verdict::modified);
        }
    }
    return out;
}

} // namespace reference_counts
