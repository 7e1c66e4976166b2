#include <doctest.h>

#include <fstream>

#include "fixtures.hpp"
#include "octwarp/grading_service.hpp"

using namespace octwarp;
namespace fs = std::filesystem;

namespace {

struct Env {
    fixtures::TempDir dir;
    StudyManifest manifest;
    fs::path study_dir;

    Env() {
        study_dir = dir / "study";
        manifest = build_study(fixtures::make_pool(dir / "pool", 3), {{"A", 1, 4, 2}, {"B", 5, 9, 1}}, 12, study_dir);
    }

    GradingService::Options options(std::uint64_t id_seed = 1) const {
        int tick = 0;
        return {dir / "data", [tick]() mutable { return "t" + std::to_string(tick++); }, id_seed};
    }
};

std::string file_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("studies and sessions") {
    Env env;
    GradingService svc(env.options());
    CHECK(svc.add_study(env.study_dir) == env.manifest.study_id);
    CHECK(svc.study_ids() == std::vector<std::string>{env.manifest.study_id});
    CHECK(svc.manifest(env.manifest.study_id) == env.manifest);
    CHECK_THROWS_AS(svc.add_study(env.study_dir), std::invalid_argument);

    const auto h = svc.create_session("grader3", env.manifest.study_id);
    CHECK(h.item_count == 6);
    CHECK(h.session_id.size() == 32);
    CHECK(fs::exists(svc.log_path(h.session_id)));
    CHECK(svc.create_session("grader3", env.manifest.study_id).session_id != h.session_id);

    CHECK_THROWS_AS(svc.create_session("g", "study-unknown"), NotFoundError);
    CHECK_THROWS_AS(svc.create_session("", env.manifest.study_id), BadRequestError);
    CHECK_THROWS_AS(svc.state("nope"), NotFoundError);
}

TEST_CASE("items are served by display position") {
    Env env;
    GradingService svc(env.options());
    svc.add_study(env.study_dir);
    const auto h = svc.create_session("g", env.manifest.study_id);
    for (std::size_t pos = 0; pos < h.item_count; ++pos) {
        const auto bytes = svc.get_item(h.session_id, pos);
        CHECK(bytes == file_text(item_image_path(env.study_dir, env.manifest.item_at_position(pos).item_id)));
        CHECK(svc.get_item(h.session_id, pos) == bytes);
        CHECK(svc.state(h.session_id).cursor == pos);
    }
    CHECK_THROWS_AS(svc.get_item(h.session_id, 6), NotFoundError);
}

TEST_CASE("verdicts overwrite and finish checks completeness") {
    Env env;
    GradingService svc(env.options());
    svc.add_study(env.study_dir);
    const auto h = svc.create_session("g", env.manifest.study_id);
    svc.put_verdict(h.session_id, 2, Verdict::original);
    svc.put_verdict(h.session_id, 2, Verdict::modified);
    CHECK(svc.snapshot(h.session_id).verdicts().at(2) == Verdict::modified);
    CHECK(svc.state(h.session_id).answered == std::vector<std::size_t>{2});
    CHECK_THROWS_AS(svc.put_verdict(h.session_id, 6, Verdict::original), NotFoundError);

    try {
        svc.finish(h.session_id);
        FAIL("finish should refuse an incomplete session");
    } catch (const ConflictError& e) {
        CHECK(e.missing == std::vector<std::size_t>{0, 1, 3, 4, 5});
    }

    for (std::size_t i = 0; i < 6; ++i) svc.put_verdict(h.session_id, i, Verdict::original);
    const auto summary = svc.finish(h.session_id);
    CHECK(summary.labeled_original == 6);
    CHECK(svc.state(h.session_id).finished);
    CHECK_THROWS_AS(svc.finish(h.session_id), ConflictError);
    CHECK_THROWS_AS(svc.put_verdict(h.session_id, 0, Verdict::modified), ConflictError);

    // Viewing a finished session is allowed but not logged.
    const auto lines = read_session_log(svc.log_path(h.session_id)).size();
    svc.get_item(h.session_id, 0);
    CHECK(read_session_log(svc.log_path(h.session_id)).size() == lines);
}

TEST_CASE("sessions survive a restart") {
    Env env;
    std::string sid;
    Session before;
    {
        GradingService svc(env.options());
        svc.add_study(env.study_dir);
        sid = svc.create_session("g", env.manifest.study_id).session_id;
        svc.get_item(sid, 4);
        svc.put_verdict(sid, 1, Verdict::modified);
        svc.put_verdict(sid, 3, Verdict::original);
        before = svc.snapshot(sid);
    }
    GradingService svc(env.options(2));
    svc.add_study(env.study_dir);
    CHECK(svc.snapshot(sid) == before);
    CHECK(svc.state(sid).cursor == 4);
    svc.put_verdict(sid, 0, Verdict::original);
    CHECK(svc.snapshot(sid).last_seq() == before.last_seq() + 1);
    CHECK(Session::replay(read_session_log(svc.log_path(sid))) == svc.snapshot(sid));
}

TEST_CASE("results cover finished sessions only") {
    Env env;
    GradingService svc(env.options());
    svc.add_study(env.study_dir);
    const auto done = svc.create_session("g1", env.manifest.study_id);
    for (std::size_t i = 0; i < 6; ++i) {
        const bool original = env.manifest.item_at_position(i).ground_truth == GroundTruth::original;
        svc.put_verdict(done.session_id, i, original ? Verdict::original : Verdict::modified);
    }
    svc.finish(done.session_id);
    svc.create_session("g2", env.manifest.study_id);

    const auto report = svc.results(env.manifest.study_id);
    REQUIRE(report.cells.size() == 2);
    CHECK(report.find("g1", "A")->table == ContingencyTable2x2{2, 0, 0, 2});
    CHECK(report.find("g2", "A") == nullptr);
}

TEST_CASE("session state never exposes ground truth") {
    Env env;
    GradingService svc(env.options());
    svc.add_study(env.study_dir);
    const auto h = svc.create_session("g", env.manifest.study_id);
    svc.get_item(h.session_id, 0);
    svc.put_verdict(h.session_id, 0, Verdict::original);
    const auto log = file_text(svc.log_path(h.session_id));
    for (const auto& item : env.manifest.items) CHECK(log.find(item.item_id) == std::string::npos);
    CHECK(log.find("sigma") == std::string::npos);
    CHECK(log.find("ground_truth") == std::string::npos);
}
