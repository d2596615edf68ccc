#include "vlgen/service/http_server.hpp"

#include "httplib.h"
#include "vlgen/log.hpp"
#include "vlgen/service/eval_service.hpp"

namespace vlgen::service {

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

nlohmann::json error_body(const std::string& message) { return {{"error", message}}; }

}  // namespace

HttpServer::HttpServer(EvalService& service, std::filesystem::path data_dir,
                       std::optional<std::filesystem::path> ui_dir)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto& srv = *server_;

  srv.Get("/health", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, {{"ok", true}}); });

  srv.Get(R"(/session/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      send_json(res, 200, service_.session(req.matches[1]));
    } catch (const NotFound& e) {
      send_json(res, 404, error_body(e.what()));
    }
  });

  srv.Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
      send_json(res, 400, {{"error", "malformed JSON"}, {"errors", {{{"field", "body"}, {"message", e.what()}}}}});
      return;
    }
    try {
      const Response r = service_.submit(body);
      send_json(res, 201, to_json(r));
    } catch (const ValidationError& e) {
      nlohmann::json errors = nlohmann::json::array();
      for (const auto& f : e.errors()) errors.push_back({{"field", f.field}, {"message", f.message}});
      send_json(res, 400, {{"error", e.what()}, {"errors", errors}});
    } catch (const NotFound& e) {
      send_json(res, 404, error_body(e.what()));
    } catch (const Conflict& e) {
      send_json(res, 409, error_body(e.what()));
    }
  });

  srv.Get("/export", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(service_.export_csv(), "text/csv");
  });

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string msg = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      msg = e.what();
    } catch (...) {
    }
    warn("request failed: " + msg);
    send_json(res, 500, error_body(msg));
  });

  if (!srv.set_mount_point("/files", data_dir.string()))
    throw Error("cannot serve files from " + data_dir.string() + ": not a directory");
  if (ui_dir && !srv.set_mount_point("/", ui_dir->string()))
    throw Error("cannot serve UI from " + ui_dir->string() + ": not a directory");
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = server_->bind_to_any_port(host);
    if (p < 0) throw Error("cannot bind " + host);
    return p;
  }
  if (!server_->bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::listen() {
  if (!server_->listen_after_bind()) throw Error("server stopped with an error");
}

void HttpServer::stop() {
  if (server_) server_->stop();
}

bool HttpServer::running() const { return server_->is_running(); }

}  // namespace vlgen::service
