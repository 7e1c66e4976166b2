#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "octwarp/warpfield.hpp"

namespace octwarp {

/// One deformation-intensity band of a study.
struct CategorySpec {
    std::string name;
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    int pair_count = 0;

    friend bool operator==(const CategorySpec&, const CategorySpec&) = default;
};

enum class GroundTruth { original, modified };

std::string_view to_string(GroundTruth truth);
GroundTruth parse_ground_truth(std::string_view token);

struct StudyItem {
    std::string item_id;
    std::string category;
    GroundTruth ground_truth = GroundTruth::original;
    std::optional<double> sigma_used;
    std::optional<std::uint64_t> deform_seed;
    std::string source_ref;

    friend bool operator==(const StudyItem&, const StudyItem&) = default;
};

struct StudyManifest {
    std::string study_id;
    std::uint64_t master_seed = 0;
    GridDims grid;
    BorderPolicy border = BorderPolicy::clamp;
    std::vector<CategorySpec> categories;
    std::vector<StudyItem> items;
    /// display_order[k] is the index into `items` shown at position k.
    std::vector<std::size_t> display_order;

    std::size_t item_count() const noexcept { return items.size(); }
    const StudyItem& item_at_position(std::size_t position) const;
    const CategorySpec* find_category(std::string_view name) const;

    friend bool operator==(const StudyManifest&, const StudyManifest&) = default;
};

/// The four-band grading design: low, medium, high, and a control band.
std::vector<CategorySpec> standard_design();
/// Two narrow bands splitting the lower medium range.
std::vector<CategorySpec> refined_design();

/// Throws std::invalid_argument describing the first violated constraint.
void validate(const CategorySpec& spec);
void validate(const StudyManifest& manifest);

struct BuildOptions {
    GridDims grid;
    BorderPolicy border = BorderPolicy::clamp;
    unsigned threads = 0;  ///< 0 = hardware concurrency
};

/// Builds a blinded study under `out_dir`: manifest.json plus
/// images/<item_id>.png for every original and deformed item.
///
/// Pairs are numbered across categories in spec order; pair p uses
/// pool[p] as its source. Randomness comes from streams derived from
/// master_seed, so the output depends only on (pool order, specs,
/// master_seed, options.grid, options.border).
StudyManifest build_study(const std::vector<std::filesystem::path>& pool,
                          const std::vector<CategorySpec>& specs, std::uint64_t master_seed,
                          const std::filesystem::path& out_dir, const BuildOptions& options = {});

/// Admin-only unblinding.
std::pair<GroundTruth, std::optional<double>> reveal(const StudyManifest& manifest,
                                                     std::string_view item_id);

std::filesystem::path manifest_path(const std::filesystem::path& study_dir);
std::filesystem::path item_image_path(const std::filesystem::path& study_dir, std::string_view item_id);

std::string to_json_text(const StudyManifest& manifest);
StudyManifest manifest_from_json_text(std::string_view text);

void save_manifest(const StudyManifest& manifest, const std::filesystem::path& path);
StudyManifest load_manifest(const std::filesystem::path& path);

/// Image files (.png / .pgm) directly inside `dir`, sorted by filename.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

} // namespace octwarp
