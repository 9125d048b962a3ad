#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace httplib {
class Server;
}

namespace autoclean::tools {

struct ReviewServerConfig {
  std::string bundle_json;
  std::filesystem::path overrides_path;
  std::size_t n_trials = 0;
  std::vector<std::string> sensor_names;
  std::optional<std::filesystem::path> static_dir;
};

/// Local HTTP service behind the review viewer.
///   GET  /api/health     -> "ok"
///   GET  /api/bundle     -> review bundle JSON
///   POST /api/overrides  -> validate, then persist the body verbatim
/// Override writes are serialized; the last write wins.
class ReviewServer {
 public:
  explicit ReviewServer(ReviewServerConfig config);
  ~ReviewServer();

  ReviewServer(const ReviewServer&) = delete;
  ReviewServer& operator=(const ReviewServer&) = delete;

  /// Binds host:port (port 0 picks a free one) and returns the bound port.
  /// Throws IoError when the address is unavailable.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called. Requires a successful bind().
  void serve();
  void stop();

 private:
  ReviewServerConfig config_;
  std::unique_ptr<httplib::Server> server_;
  std::mutex write_mutex_;
};

}  // namespace autoclean::tools
