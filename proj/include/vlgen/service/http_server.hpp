#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace httplib {
class Server;
}

namespace vlgen::service {

class EvalService;

// JSON endpoints:
//   GET  /session/{evaluator}  next item and its labelled candidates
//   POST /score                one response; 400 / 404 / 409 on rejection
//   GET  /export               human-scores CSV
//   GET  /health
// Files under data_dir are served at /files/, and ui_dir (if any) at /.
class HttpServer {
 public:
  HttpServer(EvalService& service, std::filesystem::path data_dir,
             std::optional<std::filesystem::path> ui_dir = std::nullopt);
  ~HttpServer();

  // Port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();
  bool running() const;

 private:
  EvalService& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace vlgen::service
