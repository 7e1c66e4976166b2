#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "octwarp/grading_service.hpp"

namespace octwarp {

struct ServerOptions {
    /// Bearer token for /admin routes; empty disables them.
    std::string admin_token;
    /// Static files (the browser client) served under "/".
    std::optional<std::filesystem::path> ui_dir;
};

/// HTTP/1.1 front end for GradingService.
///
///   POST /studies/{study_id}/sessions           {"grader_id"} -> {"session_id", "item_count"}
///   GET  /sessions/{sid}/items/{index}          -> image/png
///   PUT  /sessions/{sid}/items/{index}/verdict  {"verdict"}   -> 204
///   GET  /sessions/{sid}/state                  -> {"cursor", "answered", "item_count"}
///   POST /sessions/{sid}/finish                 -> summary, or 409 {"missing": [...]}
///   GET  /admin/studies/{study_id}/results      -> report (Authorization: Bearer <token>)
class GradingServer {
public:
    GradingServer(GradingService& service, ServerOptions options);
    ~GradingServer();
    GradingServer(const GradingServer&) = delete;
    GradingServer& operator=(const GradingServer&) = delete;

    /// Blocks until stop().
    bool listen(const std::string& host, int port);

    /// Binds an ephemeral port and returns it (or -1); follow with listen_after_bind().
    int bind_to_any_port(const std::string& host);
    bool listen_after_bind();

    void stop();
    bool is_running() const;
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace octwarp
