#include "octwarp/study.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "octwarp/parallel.hpp"
#include "octwarp/random.hpp"
#include "octwarp/raster_io.hpp"

namespace octwarp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Stream indices for derive_seed(master_seed, .). Pair streams use the
// pair index itself, so these sit far above any realistic pair count.
constexpr std::uint64_t kStudyIdStream = 0xFFFF'FFFF'0000'0001ULL;
constexpr std::uint64_t kItemIdStream = 0xFFFF'FFFF'0000'0002ULL;
constexpr std::uint64_t kShuffleStream = 0xFFFF'FFFF'0000'0003ULL;

std::string hex_token(std::uint64_t v) { return fmt::format("{:016x}", v); }

} // namespace

std::string_view to_string(GroundTruth truth) {
    return truth == GroundTruth::original ? "original" : "modified";
}

GroundTruth parse_ground_truth(std::string_view token) {
    if (token == "original") return GroundTruth::original;
    if (token == "modified") return GroundTruth::modified;
    throw std::invalid_argument("unknown ground truth '" + std::string(token) + "'");
}

const StudyItem& StudyManifest::item_at_position(std::size_t position) const {
    if (position >= display_order.size())
        throw std::out_of_range("display position " + std::to_string(position) + " out of range");
    return items.at(display_order[position]);
}

const CategorySpec* StudyManifest::find_category(std::string_view name) const {
    const auto it = std::find_if(categories.begin(), categories.end(),
                                 [name](const CategorySpec& c) { return c.name == name; });
    return it == categories.end() ? nullptr : &*it;
}

std::vector<CategorySpec> standard_design() {
    return {{"LDA", 1, 6, 100}, {"MDA", 7, 12, 100}, {"HDA", 13, 18, 100}, {"CTRL", 19, 24, 20}};
}

std::vector<CategorySpec> refined_design() {
    return {{"sigma7-9", 7, 9, 100}, {"sigma10-11", 10, 11, 100}};
}

void validate(const CategorySpec& spec) {
    if (spec.name.empty()) throw std::invalid_argument("category name must not be empty");
    if (!std::isfinite(spec.sigma_min) || !std::isfinite(spec.sigma_max) || !(spec.sigma_min > 0.0) ||
        spec.sigma_min > spec.sigma_max)
        throw std::invalid_argument(fmt::format("category '{}': need 0 < sigma_min <= sigma_max, got [{}, {}]",
                                                spec.name, spec.sigma_min, spec.sigma_max));
    if (spec.pair_count < 1)
        throw std::invalid_argument(fmt::format("category '{}': pair_count must be >= 1", spec.name));
}

void validate(const StudyManifest& m) {
    std::set<std::string> names;
    for (const auto& c : m.categories) {
        validate(c);
        if (!names.insert(c.name).second)
            throw std::invalid_argument("duplicate category '" + c.name + "'");
    }

    std::map<std::string, std::pair<int, int>> counts;
    std::set<std::string> ids;
    for (const auto& item : m.items) {
        const auto* cat = m.find_category(item.category);
        if (!cat) throw std::invalid_argument("item '" + item.item_id + "' has unknown category");
        if (item.item_id.empty() || !ids.insert(item.item_id).second)
            throw std::invalid_argument("item ids must be non-empty and unique");
        if (item.ground_truth == GroundTruth::original) {
            if (item.sigma_used) throw std::invalid_argument("original item '" + item.item_id + "' carries a sigma");
            ++counts[item.category].first;
        } else {
            if (!item.sigma_used) throw std::invalid_argument("modified item '" + item.item_id + "' lacks a sigma");
            if (*item.sigma_used < cat->sigma_min || *item.sigma_used > cat->sigma_max)
                throw std::invalid_argument("item '" + item.item_id + "' sigma outside its category band");
            ++counts[item.category].second;
        }
    }
    for (const auto& c : m.categories) {
        const auto [originals, modified] = counts[c.name];
        if (originals != c.pair_count || modified != c.pair_count)
            throw std::invalid_argument(fmt::format("category '{}' has {}/{} original/modified items, expected {}",
                                                    c.name, originals, modified, c.pair_count));
    }

    if (m.display_order.size() != m.items.size())
        throw std::invalid_argument("display_order length differs from item count");
    std::vector<bool> seen(m.items.size(), false);
    for (const auto idx : m.display_order) {
        if (idx >= m.items.size() || seen[idx]) throw std::invalid_argument("display_order is not a permutation");
        seen[idx] = true;
    }
}

StudyManifest build_study(const std::vector<fs::path>& pool, const std::vector<CategorySpec>& specs,
                          std::uint64_t master_seed, const fs::path& out_dir, const BuildOptions& options) {
    if (specs.empty()) throw std::invalid_argument("study needs at least one category");
    std::size_t pair_total = 0;
    {
        std::set<std::string> names;
        for (const auto& spec : specs) {
            validate(spec);
            if (!names.insert(spec.name).second) throw std::invalid_argument("duplicate category '" + spec.name + "'");
            pair_total += static_cast<std::size_t>(spec.pair_count);
        }
    }
    if (pool.size() < pair_total)
        throw std::invalid_argument(fmt::format("image pool has {} images, study needs {}", pool.size(), pair_total));
    if (options.grid.rows < 2 || options.grid.cols < 2)
        throw std::invalid_argument("deformation grid needs at least 2x2 cells");

    StudyManifest manifest;
    manifest.master_seed = master_seed;
    manifest.grid = options.grid;
    manifest.border = options.border;
    manifest.categories = specs;
    manifest.study_id = "study-" + hex_token(derive_seed(master_seed, kStudyIdStream));

    // Sequential part: ids, sigmas, seeds. Each pair owns its own stream.
    SplitMix64 id_rng(derive_seed(master_seed, kItemIdStream));
    std::set<std::string> used_ids;
    const auto fresh_id = [&] {
        for (;;) {
            auto id = hex_token(id_rng.next());
            if (used_ids.insert(id).second) return id;
        }
    };

    manifest.items.reserve(2 * pair_total);
    std::size_t pair = 0;
    for (const auto& spec : specs) {
        for (int k = 0; k < spec.pair_count; ++k, ++pair) {
            SplitMix64 pair_rng(derive_seed(master_seed, pair));
            const double u = pair_rng.uniform();
            const double sigma = std::min(spec.sigma_max, spec.sigma_min + (spec.sigma_max - spec.sigma_min) * u);
            const std::uint64_t seed = pair_rng.next();
            const std::string source = pool[pair].filename().string();

            manifest.items.push_back({fresh_id(), spec.name, GroundTruth::original, std::nullopt, std::nullopt, source});
            manifest.items.push_back({fresh_id(), spec.name, GroundTruth::modified, sigma, seed, source});
        }
    }

    manifest.display_order.resize(manifest.items.size());
    for (std::size_t i = 0; i < manifest.display_order.size(); ++i) manifest.display_order[i] = i;
    SplitMix64 shuffle_rng(derive_seed(master_seed, kShuffleStream));
    for (std::size_t i = manifest.display_order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(shuffle_rng.bounded(i));
        std::swap(manifest.display_order[i - 1], manifest.display_order[j]);
    }

    const fs::path image_dir = out_dir / "images";
    fs::create_directories(image_dir);

    // Parallel part: decode, deform, encode. Each pair touches only its own files.
    parallel_for(pair_total, options.threads, [&](std::size_t p) {
        const auto& original = manifest.items[2 * p];
        const auto& modified = manifest.items[2 * p + 1];
        const PixelGrid source = load_image(pool[p]);
        const auto result = deform(source, *modified.sigma_used, *modified.deform_seed, options.grid, options.border);
        save_image(source, item_image_path(out_dir, original.item_id), ImageFormat::png_gray8);
        save_image(result.image, item_image_path(out_dir, modified.item_id), ImageFormat::png_gray8);
    });

    validate(manifest);
    save_manifest(manifest, manifest_path(out_dir));
    return manifest;
}

std::pair<GroundTruth, std::optional<double>> reveal(const StudyManifest& manifest, std::string_view item_id) {
    for (const auto& item : manifest.items) {
        if (item.item_id == item_id) return {item.ground_truth, item.sigma_used};
    }
    throw std::out_of_range("unknown item '" + std::string(item_id) + "'");
}

fs::path manifest_path(const fs::path& study_dir) { return study_dir / "manifest.json"; }

fs::path item_image_path(const fs::path& study_dir, std::string_view item_id) {
    return study_dir / "images" / (std::string(item_id) + ".png");
}

std::string to_json_text(const StudyManifest& m) {
    json categories = json::array();
    for (const auto& c : m.categories) {
        categories.push_back({{"name", c.name}, {"sigma_min", c.sigma_min}, {"sigma_max", c.sigma_max},
                              {"pair_count", c.pair_count}});
    }
    json items = json::array();
    for (const auto& item : m.items) {
        items.push_back({{"item_id", item.item_id},
                         {"category", item.category},
                         {"ground_truth", to_string(item.ground_truth)},
                         {"sigma_used", item.sigma_used ? json(*item.sigma_used) : json(nullptr)},
                         {"deform_seed", item.deform_seed ? json(*item.deform_seed) : json(nullptr)},
                         {"source_ref", item.source_ref}});
    }
    const json doc = {
        {"study_id", m.study_id},
        {"master_seed", m.master_seed},
        {"grid", {{"rows", m.grid.rows}, {"cols", m.grid.cols}}},
        {"border", to_string(m.border)},
        {"categories", categories},
        {"items", items},
        {"display_order", m.display_order},
    };
    return doc.dump(2) + "\n";
}

StudyManifest manifest_from_json_text(std::string_view text) {
    StudyManifest m;
    try {
        const json doc = json::parse(text);
        m.study_id = doc.at("study_id").get<std::string>();
        m.master_seed = doc.at("master_seed").get<std::uint64_t>();
        if (doc.contains("grid")) {
            m.grid = {doc.at("grid").at("rows").get<int>(), doc.at("grid").at("cols").get<int>()};
        }
        if (doc.contains("border")) m.border = parse_border_policy(doc.at("border").get<std::string>());
        for (const auto& c : doc.at("categories")) {
            m.categories.push_back({c.at("name").get<std::string>(), c.at("sigma_min").get<double>(),
                                    c.at("sigma_max").get<double>(), c.at("pair_count").get<int>()});
        }
        for (const auto& j : doc.at("items")) {
            StudyItem item;
            item.item_id = j.at("item_id").get<std::string>();
            item.category = j.at("category").get<std::string>();
            item.ground_truth = parse_ground_truth(j.at("ground_truth").get<std::string>());
            if (j.contains("sigma_used") && !j.at("sigma_used").is_null())
                item.sigma_used = j.at("sigma_used").get<double>();
            if (j.contains("deform_seed") && !j.at("deform_seed").is_null())
                item.deform_seed = j.at("deform_seed").get<std::uint64_t>();
            item.source_ref = j.value("source_ref", std::string{});
            m.items.push_back(std::move(item));
        }
        m.display_order = doc.at("display_order").get<std::vector<std::size_t>>();
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("malformed study manifest: ") + e.what());
    }
    validate(m);
    return m;
}

void save_manifest(const StudyManifest& manifest, const fs::path& path) {
    const auto text = to_json_text(manifest);
    write_file_atomic(path, text.data(), text.size());
}

StudyManifest load_manifest(const fs::path& path) {
    const auto bytes = read_file_bytes(path);
    return manifest_from_json_text(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::vector<fs::path> list_images(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw std::runtime_error("'" + dir.string() + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && format_from_extension(entry.path())) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    return files;
}

} // namespace octwarp
