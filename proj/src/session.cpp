#include "octwarp/session.hpp"

#include <json.hpp>
#include <unistd.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

namespace octwarp {

using nlohmann::json;

std::string_view to_string(Verdict verdict) {
    return verdict == Verdict::original ? "original" : "modified";
}

Verdict parse_verdict(std::string_view token) {
    if (token == "original") return Verdict::original;
    if (token == "modified") return Verdict::modified;
    throw std::invalid_argument("invalid verdict '" + std::string(token) + "'");
}

std::string_view to_string(EventKind kind) {
    switch (kind) {
    case EventKind::started: return "started";
    case EventKind::viewed: return "viewed";
    case EventKind::verdict: return "verdict";
    case EventKind::finished: return "finished";
    }
    return "started";
}

EventKind parse_event_kind(std::string_view token) {
    if (token == "started") return EventKind::started;
    if (token == "viewed") return EventKind::viewed;
    if (token == "verdict") return EventKind::verdict;
    if (token == "finished") return EventKind::finished;
    throw std::invalid_argument("unknown event kind '" + std::string(token) + "'");
}

std::string to_log_line(const SessionEvent& e) {
    json j = {
        {"seq", e.seq},
        {"time", e.time},
        {"kind", to_string(e.kind)},
        {"item_index", e.item_index ? json(*e.item_index) : json(nullptr)},
        {"verdict", e.verdict ? json(to_string(*e.verdict)) : json(nullptr)},
    };
    if (e.kind == EventKind::started) {
        j["session_id"] = e.session_id;
        j["grader_id"] = e.grader_id;
        j["study_id"] = e.study_id;
        j["item_count"] = e.item_count;
    }
    return j.dump();
}

SessionEvent parse_log_line(std::string_view line) {
    try {
        const json j = json::parse(line);
        SessionEvent e;
        e.seq = j.at("seq").get<std::uint64_t>();
        e.time = j.at("time").get<std::string>();
        e.kind = parse_event_kind(j.at("kind").get<std::string>());
        if (!j.at("item_index").is_null()) e.item_index = j.at("item_index").get<std::size_t>();
        if (!j.at("verdict").is_null()) e.verdict = parse_verdict(j.at("verdict").get<std::string>());
        if (e.kind == EventKind::started) {
            e.session_id = j.at("session_id").get<std::string>();
            e.grader_id = j.at("grader_id").get<std::string>();
            e.study_id = j.at("study_id").get<std::string>();
            e.item_count = j.at("item_count").get<std::size_t>();
        }
        return e;
    } catch (const json::exception& ex) {
        throw std::runtime_error(std::string("malformed session event: ") + ex.what());
    }
}

Session Session::replay(std::span<const SessionEvent> log) {
    Session s;
    for (const auto& e : log) s.apply(e);
    if (!s.started_) throw std::invalid_argument("session log is empty");
    return s;
}

void Session::apply(const SessionEvent& e) {
    if (!started_) {
        if (e.kind != EventKind::started) throw std::invalid_argument("session log must begin with 'started'");
        started_ = true;
        session_id_ = e.session_id;
        grader_id_ = e.grader_id;
        study_id_ = e.study_id;
        created_at_ = e.time;
        item_count_ = e.item_count;
        last_seq_ = e.seq;
        return;
    }
    if (e.seq <= last_seq_) throw std::invalid_argument(fmt::format("event seq {} not after {}", e.seq, last_seq_));
    if (finished_) throw std::invalid_argument("session already finished");
    if (e.verdict.has_value() != (e.kind == EventKind::verdict))
        throw std::invalid_argument("verdict must be present exactly on verdict events");

    switch (e.kind) {
    case EventKind::started:
        throw std::invalid_argument("duplicate 'started' event");
    case EventKind::viewed:
    case EventKind::verdict:
        if (!e.item_index || *e.item_index >= item_count_)
            throw std::invalid_argument("event item index out of range");
        if (e.kind == EventKind::viewed) {
            cursor_ = *e.item_index;
        } else {
            verdicts_[*e.item_index] = *e.verdict;
        }
        break;
    case EventKind::finished:
        finished_ = true;
        break;
    }
    last_seq_ = e.seq;
}

std::vector<std::size_t> Session::answered() const {
    std::vector<std::size_t> out;
    out.reserve(verdicts_.size());
    for (const auto& [index, verdict] : verdicts_) out.push_back(index);
    return out;
}

std::vector<std::size_t> Session::missing() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < item_count_; ++i) {
        if (!verdicts_.contains(i)) out.push_back(i);
    }
    return out;
}

SessionSummary summarize(const Session& session) {
    SessionSummary summary{session.session_id(), session.grader_id(), session.item_count(), 0, 0};
    for (const auto& [index, verdict] : session.verdicts()) {
        (verdict == Verdict::original ? summary.labeled_original : summary.labeled_modified)++;
    }
    return summary;
}

SessionLog read_session_log(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open session log '" + path.string() + "'");
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    SessionLog log;
    std::size_t begin = 0;
    for (;;) {
        const std::size_t end = text.find('\n', begin);
        // A trailing fragment without a newline is a torn write that was never acknowledged.
        if (end == std::string::npos) break;
        if (end > begin) log.push_back(parse_log_line(std::string_view(text).substr(begin, end - begin)));
        begin = end + 1;
    }
    return log;
}

SessionLogWriter::SessionLogWriter(const std::filesystem::path& path) : path_(path) {
    file_ = std::fopen(path.c_str(), "ab");
    if (!file_) throw std::runtime_error("cannot open session log '" + path.string() + "' for append");
}

SessionLogWriter::~SessionLogWriter() {
    if (file_) std::fclose(file_);
}

void SessionLogWriter::append(const SessionEvent& event) {
    const std::string line = to_log_line(event) + "\n";
    if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0 ||
        ::fsync(::fileno(file_)) != 0) {
        throw std::runtime_error("failed to persist event to '" + path_.string() + "'");
    }
}

std::string iso8601_now() {
    using namespace std::chrono;
    const auto now = system_clock::now();
    const auto ms = duration_cast<milliseconds>(now.time_since_epoch()) % 1000;
    const std::time_t t = system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}.{:03}Z", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                       tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms.count()));
}

} // namespace octwarp
