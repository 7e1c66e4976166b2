#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "octwarp/analysis.hpp"
#include "octwarp/random.hpp"
#include "octwarp/session.hpp"
#include "octwarp/study.hpp"

namespace octwarp {

struct NotFoundError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BadRequestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConflictError : std::runtime_error {
    ConflictError(const std::string& what, std::vector<std::size_t> missing_indices = {})
        : std::runtime_error(what), missing(std::move(missing_indices)) {}
    std::vector<std::size_t> missing;
};

struct SessionHandle {
    std::string session_id;
    std::size_t item_count = 0;
};

struct SessionStateView {
    std::size_t cursor = 0;
    std::vector<std::size_t> answered;
    std::size_t item_count = 0;
    bool finished = false;
};

/// Transport-independent grading backend.
///
/// Each session owns an append-only log at <data_dir>/sessions/<id>.log.
/// Every state change is written and fsync-ed before the call returns, and
/// the in-memory session is always the fold of that log. Existing logs are
/// replayed on construction, so sessions survive restarts.
class GradingService {
public:
    struct Options {
        std::filesystem::path data_dir;
        std::function<std::string()> clock = iso8601_now;
        /// Seed for session ids; 0 draws one from std::random_device.
        std::uint64_t id_seed = 0;
    };

    explicit GradingService(Options options);

    /// Loads <study_dir>/manifest.json; returns the study id.
    std::string add_study(const std::filesystem::path& study_dir);
    std::vector<std::string> study_ids() const;
    const StudyManifest& manifest(std::string_view study_id) const;

    SessionHandle create_session(const std::string& grader_id, std::string_view study_id);

    /// PNG bytes of the item at display position `index`; logs a 'viewed' event.
    std::string get_item(std::string_view session_id, std::size_t index);

    void put_verdict(std::string_view session_id, std::size_t index, Verdict verdict);
    SessionStateView state(std::string_view session_id) const;

    /// Throws ConflictError (with the missing indices) if any item is
    /// unanswered, or if the session is already finished.
    SessionSummary finish(std::string_view session_id);

    Session snapshot(std::string_view session_id) const;
    std::filesystem::path log_path(std::string_view session_id) const;

    /// Analysis over every finished session of the study.
    RateReport results(std::string_view study_id) const;

private:
    struct Study {
        StudyManifest manifest;
        std::filesystem::path dir;
    };

    struct Slot {
        mutable std::mutex mutex;
        Session session;
        std::unique_ptr<SessionLogWriter> writer;
    };

    const Study& study(std::string_view study_id) const;
    std::shared_ptr<Slot> slot(std::string_view session_id) const;
    SessionEvent next_event(const Slot& slot, EventKind kind) const;
    void commit(Slot& slot, const SessionEvent& event);
    std::string fresh_session_id();

    Options options_;
    std::filesystem::path sessions_dir_;

    mutable std::shared_mutex mutex_;
    std::map<std::string, Study, std::less<>> studies_;
    std::map<std::string, std::shared_ptr<Slot>, std::less<>> sessions_;

    std::mutex id_mutex_;
    SplitMix64 id_rng_;
};

} // namespace octwarp
