#include "octwarp/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <regex>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "octwarp/analysis.hpp"
#include "octwarp/grading_server.hpp"
#include "octwarp/parallel.hpp"
#include "octwarp/random.hpp"
#include "octwarp/raster_io.hpp"
#include "octwarp/stats.hpp"
#include "octwarp/study.hpp"
#include "octwarp/warpfield.hpp"

namespace octwarp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Raised for argument problems found after CLI11 parsing (exit code 1).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

GridDims parse_grid(const std::string& text) {
    static const std::regex pattern(R"((\d+)[xX](\d+))");
    std::smatch m;
    if (!std::regex_match(text, m, pattern)) throw UsageError("--grid expects NxM, e.g. 3x3");
    GridDims dims{std::stoi(m[1].str()), std::stoi(m[2].str())};
    if (dims.rows < 2 || dims.cols < 2) throw UsageError("--grid needs at least 2x2 cells");
    return dims;
}

BorderPolicy parse_border(const std::string& text) {
    try {
        return parse_border_policy(text);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

CategorySpec parse_category(const std::string& text) {
    static const std::regex pattern(R"(([^:]+):([^:]+):([^:]+):(\d+))");
    std::smatch m;
    if (!std::regex_match(text, m, pattern)) throw UsageError("--category expects NAME:SIGMA_MIN:SIGMA_MAX:PAIRS");
    CategorySpec spec;
    try {
        spec = {m[1].str(), std::stod(m[2].str()), std::stod(m[3].str()), std::stoi(m[4].str())};
        validate(spec);
    } catch (const std::exception& e) {
        throw UsageError(std::string("--category: ") + e.what());
    }
    return spec;
}

double mean_abs_difference(const PixelGrid& a, const PixelGrid& b) {
    const auto pa = a.pixels();
    const auto pb = b.pixels();
    double sum = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) sum += std::abs(static_cast<int>(pa[i]) - static_cast<int>(pb[i]));
    return sum / static_cast<double>(pa.size());
}

void write_field_csv(const DisplacementField& field, const fs::path& path) {
    std::string text = "x,y,ux,uy\n";
    for (int y = 0; y < field.height(); ++y) {
        for (int x = 0; x < field.width(); ++x) {
            const auto d = field.at(x, y);
            text += fmt::format("{},{},{:.17g},{:.17g}\n", x, y, d.dx, d.dy);
        }
    }
    write_file_atomic(path, text.data(), text.size());
}

void emit(std::ostream& out, bool as_json, const json& doc, const std::vector<std::pair<std::string, std::string>>& lines) {
    if (as_json) {
        out << doc.dump(2) << "\n";
        return;
    }
    for (const auto& [key, value] : lines) out << key << ": " << value << "\n";
}

std::string num(double v) { return fmt::format("{:.10g}", v); }

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Elastic deformation and blinded grading toolkit for grayscale OCT scans", "octwarp"};
    app.require_subcommand(1);
    std::string format = "text";
    app.add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}));

    // deform
    auto* deform_cmd = app.add_subcommand("deform", "Elastically deform one image");
    std::string deform_input, deform_output, grid_text = "3x3", border_text = "clamp", dump_field;
    double deform_sigma = 0.0;
    std::uint64_t deform_seed = 0;
    int overlay_spacing = 0;
    deform_cmd->add_option("--input", deform_input, "Source image (.png or .pgm)")->required();
    deform_cmd->add_option("--output", deform_output, "Destination image (.png or .pgm)")->required();
    deform_cmd->add_option("--sigma", deform_sigma, "Control-grid standard deviation, pixels")
        ->required()->check(CLI::NonNegativeNumber);
    deform_cmd->add_option("--seed", deform_seed, "Random seed")->required();
    deform_cmd->add_option("--grid", grid_text, "Control grid NxM (rows x cols)")->capture_default_str();
    deform_cmd->add_option("--border", border_text, "clamp, zero, or reflect")->capture_default_str();
    deform_cmd->add_option("--overlay-grid", overlay_spacing, "Draw the displaced grid every S pixels")
        ->check(CLI::Range(2, 1 << 20));
    deform_cmd->add_option("--dump-field", dump_field, "Write the displacement field as CSV");

    // augment
    auto* augment_cmd = app.add_subcommand("augment", "Expand a directory of images K-fold");
    std::string aug_in, aug_out;
    double aug_sigma_min = 1.0, aug_sigma_max = 9.0;
    int aug_copies = 1;
    std::uint64_t aug_seed = 0;
    unsigned aug_threads = 0;
    augment_cmd->add_option("--input-dir", aug_in, "Directory of source images")->required();
    augment_cmd->add_option("--output-dir", aug_out, "Destination directory")->required();
    augment_cmd->add_option("--sigma-min", aug_sigma_min, "Lower sigma bound")->capture_default_str()->check(CLI::NonNegativeNumber);
    augment_cmd->add_option("--sigma-max", aug_sigma_max, "Upper sigma bound (9 keeps to the realistic range)")
        ->capture_default_str()->check(CLI::NonNegativeNumber);
    augment_cmd->add_option("--copies", aug_copies, "Deformed copies per image")->required()->check(CLI::PositiveNumber);
    augment_cmd->add_option("--seed", aug_seed, "Random seed")->required();
    augment_cmd->add_option("--grid", grid_text, "Control grid NxM")->capture_default_str();
    augment_cmd->add_option("--border", border_text, "clamp, zero, or reflect")->capture_default_str();
    augment_cmd->add_option("--threads", aug_threads, "Worker threads (0 = all cores)");

    // field-check
    auto* check_cmd = app.add_subcommand("field-check", "Fold-over statistics over many seeds");
    int check_width = 496, check_height = 352, check_trials = 1000;
    double check_sigma = 9.0;
    std::uint64_t check_seed = 0;
    check_cmd->add_option("--width", check_width)->capture_default_str()->check(CLI::Range(3, 1 << 16));
    check_cmd->add_option("--height", check_height)->capture_default_str()->check(CLI::Range(3, 1 << 16));
    check_cmd->add_option("--sigma", check_sigma)->capture_default_str()->check(CLI::NonNegativeNumber);
    check_cmd->add_option("--grid", grid_text, "Control grid NxM")->capture_default_str();
    check_cmd->add_option("--trials", check_trials)->capture_default_str()->check(CLI::PositiveNumber);
    check_cmd->add_option("--seed", check_seed)->capture_default_str();

    // study
    auto* study_cmd = app.add_subcommand("study", "Build, serve, and analyze blinded grading studies");
    study_cmd->require_subcommand(1);

    auto* build_cmd = study_cmd->add_subcommand("build", "Build a blinded study set");
    std::string pool_dir, out_dir, design = "standard";
    std::vector<std::string> category_texts;
    std::uint64_t study_seed = 0;
    unsigned build_threads = 0;
    build_cmd->add_option("--pool-dir", pool_dir, "Directory of source images, used in filename order")->required();
    build_cmd->add_option("--out-dir", out_dir, "Study output directory")->required();
    build_cmd->add_option("--seed", study_seed, "Master seed")->required();
    build_cmd->add_option("--design", design, "standard (4 bands, 640 items) or refined (2 bands, 400 items)")
        ->capture_default_str()->check(CLI::IsMember({"standard", "refined"}));
    build_cmd->add_option("--category", category_texts, "NAME:SIGMA_MIN:SIGMA_MAX:PAIRS (repeatable; replaces --design)");
    build_cmd->add_option("--grid", grid_text, "Control grid NxM")->capture_default_str();
    build_cmd->add_option("--border", border_text, "clamp, zero, or reflect")->capture_default_str();
    build_cmd->add_option("--threads", build_threads, "Worker threads (0 = all cores)");

    auto* serve_cmd = study_cmd->add_subcommand("serve", "Serve studies to graders over HTTP");
    std::vector<std::string> serve_studies;
    std::string data_dir, host = "127.0.0.1", admin_token, ui_dir;
    int port = 8080;
    serve_cmd->add_option("--study-dir", serve_studies, "Study directory (repeatable)")->required();
    serve_cmd->add_option("--data-dir", data_dir, "Session log directory root")->required();
    serve_cmd->add_option("--host", host)->capture_default_str();
    serve_cmd->add_option("--port", port)->capture_default_str()->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--admin-token", admin_token, "Bearer token for /admin routes");
    serve_cmd->add_option("--ui-dir", ui_dir, "Static browser client to serve under /");

    auto* analyze_cmd = study_cmd->add_subcommand("analyze", "Rate tables and significance tests");
    std::string analyze_study_dir, sessions_dir, reference_file;
    analyze_cmd->add_option("--study-dir", analyze_study_dir)->required();
    analyze_cmd->add_option("--sessions-dir", sessions_dir, "Directory of session logs (<data-dir>/sessions)")->required();
    analyze_cmd->add_option("--reference", reference_file, "JSON file of published p-values to compare against");

    auto* reveal_cmd = study_cmd->add_subcommand("reveal", "Unblind one item (admin)");
    std::string reveal_study_dir, reveal_item;
    reveal_cmd->add_option("--study-dir", reveal_study_dir)->required();
    reveal_cmd->add_option("--item", reveal_item)->required();

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "Standalone statistical tests");
    stats_cmd->require_subcommand(1);
    std::vector<std::uint64_t> cells;
    bool no_yates = false;
    auto* chi2_cmd = stats_cmd->add_subcommand("chi2", "Chi-square test on a 2x2 table A B / C D");
    chi2_cmd->add_option("cells", cells, "A B C D")->required()->expected(4);
    chi2_cmd->add_flag("--no-yates", no_yates, "Disable Yates' continuity correction");
    auto* fisher_cmd = stats_cmd->add_subcommand("fisher", "Two-sided Fisher exact test on A B / C D");
    fisher_cmd->add_option("cells", cells, "A B C D")->required()->expected(4);
    auto* size_cmd = stats_cmd->add_subcommand("samplesize", "Non-inferiority sample size per group");
    NoninferiorityDesign nd;
    size_cmd->add_option("--p-std", nd.p_standard, "Expected proportion in the standard group")->required();
    size_cmd->add_option("--p-test", nd.p_test, "Expected proportion in the test group")->required();
    size_cmd->add_option("--margin", nd.margin, "Non-inferiority margin")->required();
    size_cmd->add_option("--alpha", nd.alpha, "One-sided significance level")->capture_default_str();
    size_cmd->add_option("--power", nd.power, "Power (1 - beta)")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }
    const bool as_json = format == "json";

    try {
        if (*deform_cmd) {
            const auto dims = parse_grid(grid_text);
            const auto border = parse_border(border_text);
            if (!format_from_extension(deform_output)) throw UsageError("--output must end in .png or .pgm");
            const auto image = load_image(deform_input);
            const auto result = deform(image, deform_sigma, deform_seed, dims, border);
            const auto output = overlay_spacing > 0 ? render_grid_overlay(result.image, result.field, overlay_spacing)
                                                    : result.image;
            save_image(output, deform_output);
            if (!dump_field.empty()) write_field_csv(result.field, dump_field);
            const double jac = (image.width() >= 3 && image.height() >= 3) ? min_jacobian(result.field) : 1.0;
            const double mad = mean_abs_difference(image, result.image);
            emit(out, as_json,
                 {{"output", deform_output}, {"width", image.width()}, {"height", image.height()},
                  {"sigma", deform_sigma}, {"seed", deform_seed}, {"min_jacobian", jac}, {"mean_abs_diff", mad}},
                 {{"output", deform_output}, {"size", fmt::format("{}x{}", image.width(), image.height())},
                  {"sigma", num(deform_sigma)}, {"seed", std::to_string(deform_seed)},
                  {"min_jacobian", num(jac)}, {"mean_abs_diff", num(mad)}});
            return 0;
        }

        if (*augment_cmd) {
            const auto dims = parse_grid(grid_text);
            const auto border = parse_border(border_text);
            if (aug_sigma_min > aug_sigma_max) throw UsageError("--sigma-min must not exceed --sigma-max");
            const auto inputs = list_images(aug_in);
            fs::create_directories(aug_out);

            struct Job {
                std::size_t file;
                int copy;
                double sigma;
                std::uint64_t seed;
                fs::path output;
            };
            std::vector<Job> jobs;
            for (std::size_t f = 0; f < inputs.size(); ++f) {
                for (int k = 0; k < aug_copies; ++k) {
                    SplitMix64 rng(derive_seed(aug_seed, f * static_cast<std::size_t>(aug_copies) + static_cast<std::size_t>(k)));
                    const double sigma = std::min(aug_sigma_max, aug_sigma_min + (aug_sigma_max - aug_sigma_min) * rng.uniform());
                    const std::uint64_t seed = rng.next();
                    const auto name = fmt::format("{}_aug{}.png", inputs[f].stem().string(), k + 1);
                    jobs.push_back({f, k + 1, sigma, seed, fs::path(aug_out) / name});
                }
            }
            parallel_for(jobs.size(), aug_threads, [&](std::size_t i) {
                const auto& job = jobs[i];
                const auto image = load_image(inputs[job.file]);
                save_image(deform(image, job.sigma, job.seed, dims, border).image, job.output);
            });

            json entries = json::array();
            for (const auto& job : jobs) {
                entries.push_back({{"source", inputs[job.file].filename().string()},
                                   {"output", job.output.filename().string()},
                                   {"copy", job.copy},
                                   {"sigma", job.sigma},
                                   {"seed", job.seed}});
            }
            const json doc = {{"seed", aug_seed}, {"sigma_min", aug_sigma_min}, {"sigma_max", aug_sigma_max},
                              {"copies", aug_copies}, {"grid", {{"rows", dims.rows}, {"cols", dims.cols}}},
                              {"border", to_string(border)}, {"items", entries}};
            const auto text = doc.dump(2) + "\n";
            write_file_atomic(fs::path(aug_out) / "augment.json", text.data(), text.size());
            emit(out, as_json, {{"inputs", inputs.size()}, {"outputs", jobs.size()}},
                 {{"inputs", std::to_string(inputs.size())}, {"outputs", std::to_string(jobs.size())}});
            return 0;
        }

        if (*check_cmd) {
            const auto dims = parse_grid(grid_text);
            const auto r = field_check(check_width, check_height, check_sigma, dims, check_trials, check_seed);
            emit(out, as_json,
                 {{"trials", r.trials}, {"fold_overs", r.fold_overs}, {"fold_over_rate", r.fold_over_rate},
                  {"min_jacobian", r.min_jacobian}, {"min_magnitude", r.min_magnitude},
                  {"max_magnitude", r.max_magnitude}, {"max_abs_gradient", r.max_abs_gradient}},
                 {{"trials", std::to_string(r.trials)}, {"fold_overs", std::to_string(r.fold_overs)},
                  {"fold_over_rate", num(r.fold_over_rate)}, {"min_jacobian", num(r.min_jacobian)},
                  {"min_magnitude", num(r.min_magnitude)}, {"max_magnitude", num(r.max_magnitude)},
                  {"max_abs_gradient", num(r.max_abs_gradient)}});
            return 0;
        }

        if (*build_cmd) {
            BuildOptions options;
            options.grid = parse_grid(grid_text);
            options.border = parse_border(border_text);
            options.threads = build_threads;
            std::vector<CategorySpec> specs;
            for (const auto& t : category_texts) specs.push_back(parse_category(t));
            if (specs.empty()) specs = design == "refined" ? refined_design() : standard_design();
            const auto manifest = build_study(list_images(pool_dir), specs, study_seed, out_dir, options);
            emit(out, as_json,
                 {{"study_id", manifest.study_id}, {"items", manifest.item_count()},
                  {"manifest", manifest_path(out_dir).string()}},
                 {{"study_id", manifest.study_id}, {"items", std::to_string(manifest.item_count())},
                  {"manifest", manifest_path(out_dir).string()}});
            return 0;
        }

        if (*serve_cmd) {
            GradingService service({data_dir, iso8601_now, 0});
            for (const auto& dir : serve_studies) {
                const auto id = service.add_study(dir);
                fmt::print(err, "loaded study {} from {}\n", id, dir);
            }
            ServerOptions options{admin_token, std::nullopt};
            if (!ui_dir.empty()) options.ui_dir = fs::path(ui_dir);
            GradingServer server(service, options);
            fmt::print(err, "listening on http://{}:{}\n", host, port);
            if (!server.listen(host, port)) throw std::runtime_error(fmt::format("cannot listen on {}:{}", host, port));
            return 0;
        }

        if (*analyze_cmd) {
            const auto manifest = load_manifest(manifest_path(analyze_study_dir));
            const auto sessions = load_finished_sessions(sessions_dir, manifest.study_id);
            auto report = analyze_study(manifest, sessions);
            if (!reference_file.empty()) {
                std::ifstream in(reference_file);
                if (!in) throw std::runtime_error("cannot open '" + reference_file + "'");
                compare_with_reference(report, reference_from_json(json::parse(in)));
            }
            if (as_json) {
                out << to_json(report).dump(2) << "\n";
            } else {
                out << format_table(report);
            }
            return 0;
        }

        if (*reveal_cmd) {
            const auto manifest = load_manifest(manifest_path(reveal_study_dir));
            const auto [truth, sigma] = reveal(manifest, reveal_item);
            emit(out, as_json,
                 {{"item_id", reveal_item}, {"ground_truth", to_string(truth)},
                  {"sigma_used", sigma ? json(*sigma) : json(nullptr)}},
                 {{"item_id", reveal_item}, {"ground_truth", std::string(to_string(truth))},
                  {"sigma_used", sigma ? num(*sigma) : "-"}});
            return 0;
        }

        if (*chi2_cmd) {
            const ContingencyTable2x2 t{cells[0], cells[1], cells[2], cells[3]};
            const auto r = chi_square_2x2(t, !no_yates);
            const std::string test = no_yates ? "chi_square" : "chi_square_yates";
            emit(out, as_json, {{"test", test}, {"statistic", r.statistic}, {"p_value", r.p_value}, {"p_display", format_p(r.p_value)}},
                 {{"test", test}, {"statistic", num(r.statistic)}, {"p_value", num(r.p_value)}, {"p_display", format_p(r.p_value)}});
            return 0;
        }

        if (*fisher_cmd) {
            const ContingencyTable2x2 t{cells[0], cells[1], cells[2], cells[3]};
            const double p = fisher_exact_2x2(t);
            emit(out, as_json, {{"test", "fisher_exact"}, {"p_value", p}, {"p_display", format_p(p)}},
                 {{"test", "fisher_exact"}, {"p_value", num(p)}, {"p_display", format_p(p)}});
            return 0;
        }

        if (*size_cmd) {
            std::uint64_t n = 0;
            try {
                n = noninferiority_sample_size(nd);
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            emit(out, as_json, {{"n_per_group", n}, {"n_total", 2 * n}},
                 {{"n_per_group", std::to_string(n)}, {"n_total", std::to_string(2 * n)}});
            return 0;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

} // namespace octwarp
