#include "octwarp/grading_service.hpp"

#include <random>

#include <fmt/format.h>

#include "octwarp/raster_io.hpp"

namespace octwarp {

namespace fs = std::filesystem;

namespace {

std::uint64_t initial_id_seed(std::uint64_t requested) {
    if (requested != 0) return requested;
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

} // namespace

GradingService::GradingService(Options options)
    : options_(std::move(options)),
      sessions_dir_(options_.data_dir / "sessions"),
      id_rng_(initial_id_seed(options_.id_seed)) {
    fs::create_directories(sessions_dir_);
    for (const auto& entry : fs::directory_iterator(sessions_dir_)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".log") continue;
        auto slot = std::make_shared<Slot>();
        slot->session = Session::replay(read_session_log(entry.path()));
        slot->writer = std::make_unique<SessionLogWriter>(entry.path());
        sessions_.emplace(slot->session.session_id(), std::move(slot));
    }
}

std::string GradingService::add_study(const fs::path& study_dir) {
    auto manifest = load_manifest(manifest_path(study_dir));
    std::string id = manifest.study_id;
    std::unique_lock lock(mutex_);
    // Manifests are handed out by reference, so a loaded study is never replaced.
    if (!studies_.try_emplace(id, Study{std::move(manifest), study_dir}).second)
        throw std::invalid_argument("study '" + id + "' is already loaded");
    return id;
}

std::vector<std::string> GradingService::study_ids() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, s] : studies_) ids.push_back(id);
    return ids;
}

const GradingService::Study& GradingService::study(std::string_view study_id) const {
    std::shared_lock lock(mutex_);
    const auto it = studies_.find(study_id);
    if (it == studies_.end()) throw NotFoundError("unknown study '" + std::string(study_id) + "'");
    return it->second;
}

const StudyManifest& GradingService::manifest(std::string_view study_id) const {
    return study(study_id).manifest;
}

std::shared_ptr<GradingService::Slot> GradingService::slot(std::string_view session_id) const {
    std::shared_lock lock(mutex_);
    const auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw NotFoundError("unknown session '" + std::string(session_id) + "'");
    return it->second;
}

std::string GradingService::fresh_session_id() {
    std::lock_guard lock(id_mutex_);
    return fmt::format("{:016x}{:016x}", id_rng_.next(), id_rng_.next());
}

SessionEvent GradingService::next_event(const Slot& slot, EventKind kind) const {
    SessionEvent e;
    e.seq = slot.session.last_seq() + 1;
    e.time = options_.clock();
    e.kind = kind;
    return e;
}

void GradingService::commit(Slot& slot, const SessionEvent& event) {
    // Validate on a copy first so a rejected event never reaches the log.
    Session next = slot.session;
    next.apply(event);
    slot.writer->append(event);
    slot.session = std::move(next);
}

SessionHandle GradingService::create_session(const std::string& grader_id, std::string_view study_id) {
    if (grader_id.empty()) throw BadRequestError("grader_id must not be empty");
    const auto& s = study(study_id);

    auto slot = std::make_shared<Slot>();
    std::string id;
    fs::path path;
    {
        std::shared_lock lock(mutex_);
        do {
            id = fresh_session_id();
            path = sessions_dir_ / (id + ".log");
        } while (sessions_.contains(id) || fs::exists(path));
    }
    SessionEvent started;
    started.seq = 1;
    started.time = options_.clock();
    started.kind = EventKind::started;
    started.session_id = id;
    started.grader_id = grader_id;
    started.study_id = s.manifest.study_id;
    started.item_count = s.manifest.item_count();

    slot->writer = std::make_unique<SessionLogWriter>(path);
    commit(*slot, started);
    {
        std::unique_lock lock(mutex_);
        sessions_.emplace(id, slot);
    }
    return {id, s.manifest.item_count()};
}

std::string GradingService::get_item(std::string_view session_id, std::size_t index) {
    const auto sl = slot(session_id);
    std::lock_guard lock(sl->mutex);
    const auto& s = study(sl->session.study_id());
    if (index >= sl->session.item_count())
        throw NotFoundError(fmt::format("item index {} out of range [0, {})", index, sl->session.item_count()));
    const auto& item = s.manifest.item_at_position(index);
    auto bytes = read_file_bytes(item_image_path(s.dir, item.item_id));
    if (!sl->session.finished()) {
        auto e = next_event(*sl, EventKind::viewed);
        e.item_index = index;
        commit(*sl, e);
    }
    return std::string(bytes.begin(), bytes.end());
}

void GradingService::put_verdict(std::string_view session_id, std::size_t index, Verdict verdict) {
    const auto sl = slot(session_id);
    std::lock_guard lock(sl->mutex);
    if (sl->session.finished()) throw ConflictError("session is finished");
    if (index >= sl->session.item_count())
        throw NotFoundError(fmt::format("item index {} out of range [0, {})", index, sl->session.item_count()));
    auto e = next_event(*sl, EventKind::verdict);
    e.item_index = index;
    e.verdict = verdict;
    commit(*sl, e);
}

SessionStateView GradingService::state(std::string_view session_id) const {
    const auto sl = slot(session_id);
    std::lock_guard lock(sl->mutex);
    return {sl->session.cursor(), sl->session.answered(), sl->session.item_count(), sl->session.finished()};
}

SessionSummary GradingService::finish(std::string_view session_id) {
    const auto sl = slot(session_id);
    std::lock_guard lock(sl->mutex);
    if (sl->session.finished()) throw ConflictError("session is already finished");
    auto missing = sl->session.missing();
    if (!missing.empty())
        throw ConflictError(fmt::format("{} item(s) have no verdict", missing.size()), std::move(missing));
    commit(*sl, next_event(*sl, EventKind::finished));
    return summarize(sl->session);
}

Session GradingService::snapshot(std::string_view session_id) const {
    const auto sl = slot(session_id);
    std::lock_guard lock(sl->mutex);
    return sl->session;
}

fs::path GradingService::log_path(std::string_view session_id) const {
    slot(session_id);
    return sessions_dir_ / (std::string(session_id) + ".log");
}

RateReport GradingService::results(std::string_view study_id) const {
    const auto& s = study(study_id);
    std::vector<std::shared_ptr<Slot>> slots;
    {
        std::shared_lock lock(mutex_);
        for (const auto& [id, sl] : sessions_) slots.push_back(sl);
    }
    std::vector<Session> finished;
    for (const auto& sl : slots) {
        std::lock_guard lock(sl->mutex);
        if (sl->session.study_id() == s.manifest.study_id && sl->session.finished()) finished.push_back(sl->session);
    }
    std::stable_sort(finished.begin(), finished.end(), [](const Session& x, const Session& y) {
        return std::tie(x.created_at(), x.session_id()) < std::tie(y.created_at(), y.session_id());
    });
    return analyze_study(s.manifest, finished);
}

} // namespace octwarp
