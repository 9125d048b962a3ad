#include "autoclean_tools/review_server.hpp"

// Eigen must be seen before httplib: <resolv.h> defines a macro named _res.
#include "autoclean/errors.hpp"
#include "autoclean/io.hpp"
#include "autoclean/review.hpp"

#include <httplib.h>

namespace autoclean::tools {

ReviewServer::ReviewServer(ReviewServerConfig config)
    : config_(std::move(config)), server_(std::make_unique<httplib::Server>()) {
  auto& srv = *server_;
  // The library default sets SO_REUSEPORT, which would let a second server
  // share a busy port silently.
  srv.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  srv.Get("/api/health", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });
  srv.Get("/api/bundle", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(config_.bundle_json, "application/json");
  });
  srv.Post("/api/overrides", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const auto overrides = decode_overrides(req.body);
      validate_overrides(overrides, config_.n_trials, config_.sensor_names);
    } catch (const Error& e) {
      res.status = 400;
      res.set_content(e.what(), "text/plain");
      return;
    }
    try {
      const std::lock_guard lock(write_mutex_);
      write_text_file(config_.overrides_path, req.body);
    } catch (const Error& e) {
      res.status = 500;
      res.set_content(e.what(), "text/plain");
      return;
    }
    res.set_content("ok", "text/plain");
  });
  if (config_.static_dir) {
    if (!srv.set_mount_point("/", config_.static_dir->string())) {
      throw IoError("static asset directory " + config_.static_dir->string() + " does not exist");
    }
  } else {
    srv.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("review UI assets not configured; the API is under /api/\n", "text/plain");
    });
  }
}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void ReviewServer::serve() {
  if (!server_->listen_after_bind()) throw IoError("review server stopped unexpectedly");
}

void ReviewServer::stop() {
  if (server_) server_->stop();
}

}  // namespace autoclean::tools
