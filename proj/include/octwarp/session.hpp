#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace octwarp {

enum class Verdict { original, modified };

std::string_view to_string(Verdict verdict);
/// Accepts exactly "original" or "modified".
Verdict parse_verdict(std::string_view token);

enum class EventKind { started, viewed, verdict, finished };

std::string_view to_string(EventKind kind);
EventKind parse_event_kind(std::string_view token);

/// One line of a session's append-only log.
///
/// Stable fields: seq, time, kind, item_index, verdict. A 'started' event
/// additionally names the session, grader, study, and item count.
struct SessionEvent {
    std::uint64_t seq = 0;
    std::string time;
    EventKind kind = EventKind::started;
    std::optional<std::size_t> item_index;
    std::optional<Verdict> verdict;

    std::string session_id;
    std::string grader_id;
    std::string study_id;
    std::size_t item_count = 0;

    friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

std::string to_log_line(const SessionEvent& event);
SessionEvent parse_log_line(std::string_view line);

using SessionLog = std::vector<SessionEvent>;

/// A grader's session state: the left fold of its event log.
class Session {
public:
    /// Folds `log` from scratch; the first event must be 'started'.
    static Session replay(std::span<const SessionEvent> log);

    /// Validates and folds one event. Throws std::invalid_argument on a
    /// non-increasing seq, an out-of-range index, a verdict/kind mismatch,
    /// or any event after 'finished'.
    void apply(const SessionEvent& event);

    const std::string& session_id() const noexcept { return session_id_; }
    const std::string& grader_id() const noexcept { return grader_id_; }
    const std::string& study_id() const noexcept { return study_id_; }
    const std::string& created_at() const noexcept { return created_at_; }
    std::size_t item_count() const noexcept { return item_count_; }
    std::size_t cursor() const noexcept { return cursor_; }
    bool finished() const noexcept { return finished_; }
    std::uint64_t last_seq() const noexcept { return last_seq_; }

    const std::map<std::size_t, Verdict>& verdicts() const noexcept { return verdicts_; }
    std::vector<std::size_t> answered() const;
    std::vector<std::size_t> missing() const;

    friend bool operator==(const Session&, const Session&) = default;

private:
    bool started_ = false;
    std::string session_id_;
    std::string grader_id_;
    std::string study_id_;
    std::string created_at_;
    std::size_t item_count_ = 0;
    std::size_t cursor_ = 0;
    bool finished_ = false;
    std::uint64_t last_seq_ = 0;
    std::map<std::size_t, Verdict> verdicts_;
};

struct SessionSummary {
    std::string session_id;
    std::string grader_id;
    std::size_t item_count = 0;
    std::size_t labeled_original = 0;
    std::size_t labeled_modified = 0;
};

SessionSummary summarize(const Session& session);

/// Reads every line of a newline-delimited event log.
SessionLog read_session_log(const std::filesystem::path& path);

/// Appends events to a log file, flushing and fsync-ing each line before
/// append() returns.
class SessionLogWriter {
public:
    explicit SessionLogWriter(const std::filesystem::path& path);
    ~SessionLogWriter();
    SessionLogWriter(const SessionLogWriter&) = delete;
    SessionLogWriter& operator=(const SessionLogWriter&) = delete;

    void append(const SessionEvent& event);

private:
    std::filesystem::path path_;
    std::FILE* file_ = nullptr;
};

/// Current UTC time as ISO-8601 with milliseconds, e.g. 2024-01-02T03:04:05.678Z.
std::string iso8601_now();

} // namespace octwarp
