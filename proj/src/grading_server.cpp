#include "octwarp/grading_server.hpp"

#include <httplib.h>
#include <json.hpp>

#include <charconv>

namespace octwarp {

using nlohmann::json;

struct GradingServer::Impl {
    GradingService& service;
    ServerOptions options;
    httplib::Server server;

    Impl(GradingService& s, ServerOptions o) : service(s), options(std::move(o)) { routes(); }

    static void send_json(httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    static void send_error(httplib::Response& res, int status, const std::string& message) {
        send_json(res, status, {{"error", message}});
    }

    static std::size_t parse_index(const std::string& text) {
        std::size_t value = 0;
        const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc{} || end != text.data() + text.size()) throw NotFoundError("item index out of range");
        return value;
    }

    static json parse_body(const httplib::Request& req) {
        try {
            auto body = json::parse(req.body);
            if (!body.is_object()) throw BadRequestError("request body must be a JSON object");
            return body;
        } catch (const json::exception&) {
            throw BadRequestError("request body is not valid JSON");
        }
    }

    // Maps service exceptions onto HTTP statuses.
    template <typename Handler>
    httplib::Server::Handler guarded(Handler handler) {
        return [handler](const httplib::Request& req, httplib::Response& res) {
            try {
                handler(req, res);
            } catch (const NotFoundError& e) {
                send_error(res, 404, e.what());
            } catch (const BadRequestError& e) {
                send_error(res, 400, e.what());
            } catch (const ConflictError& e) {
                json body = {{"error", e.what()}};
                if (!e.missing.empty()) body["missing"] = e.missing;
                send_json(res, 409, body);
            } catch (const std::invalid_argument& e) {
                send_error(res, 400, e.what());
            } catch (const std::exception& e) {
                send_error(res, 500, e.what());
            }
        };
    }

    bool authorized(const httplib::Request& req) const {
        if (options.admin_token.empty()) return false;
        return req.get_header_value("Authorization") == "Bearer " + options.admin_token;
    }

    void routes() {
        server.Post(R"(/studies/([^/]+)/sessions)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req);
            if (!body.contains("grader_id") || !body["grader_id"].is_string())
                throw BadRequestError("grader_id is required");
            const auto handle = service.create_session(body["grader_id"].get<std::string>(), req.matches[1].str());
            send_json(res, 201, {{"session_id", handle.session_id}, {"item_count", handle.item_count}});
        }));

        server.Get(R"(/sessions/([^/]+)/items/(\d+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto bytes = service.get_item(req.matches[1].str(), parse_index(req.matches[2].str()));
            // Identical headers for every item; only the body differs.
            res.set_header("Cache-Control", "no-store");
            res.status = 200;
            res.set_content(std::move(bytes), "image/png");
        }));

        server.Put(R"(/sessions/([^/]+)/items/(\d+)/verdict)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req);
            if (!body.contains("verdict") || !body["verdict"].is_string())
                throw BadRequestError("verdict must be \"original\" or \"modified\"");
            Verdict verdict;
            try {
                verdict = parse_verdict(body["verdict"].get<std::string>());
            } catch (const std::invalid_argument& e) {
                throw BadRequestError(e.what());
            }
            service.put_verdict(req.matches[1].str(), parse_index(req.matches[2].str()), verdict);
            res.status = 204;
        }));

        server.Get(R"(/sessions/([^/]+)/state)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto state = service.state(req.matches[1].str());
            send_json(res, 200, {{"cursor", state.cursor}, {"answered", state.answered},
                                 {"item_count", state.item_count}, {"finished", state.finished}});
        }));

        server.Post(R"(/sessions/([^/]+)/finish)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto summary = service.finish(req.matches[1].str());
            send_json(res, 200, {{"session_id", summary.session_id},
                                 {"item_count", summary.item_count},
                                 {"labeled_original", summary.labeled_original},
                                 {"labeled_modified", summary.labeled_modified}});
        }));

        server.Get(R"(/admin/studies/([^/]+)/results)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            if (options.admin_token.empty()) return send_error(res, 403, "admin routes are disabled");
            if (!authorized(req)) return send_error(res, 401, "admin token required");
            const auto report = service.results(req.matches[1].str());
            if (req.get_param_value("format") == "text") {
                res.status = 200;
                res.set_content(format_table(report), "text/plain; charset=utf-8");
            } else {
                send_json(res, 200, to_json(report));
            }
        }));

        if (options.ui_dir) server.set_mount_point("/", options.ui_dir->string());
    }
};

GradingServer::GradingServer(GradingService& service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {}

GradingServer::~GradingServer() { stop(); }

bool GradingServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int GradingServer::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool GradingServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void GradingServer::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
}

bool GradingServer::is_running() const { return impl_->server.is_running(); }

void GradingServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

} // namespace octwarp
