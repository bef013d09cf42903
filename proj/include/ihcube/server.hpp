#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "ihcube/index.hpp"
#include "ihcube/query.hpp"

namespace httplib {
class Server;
}

namespace ihcube {

/// HTTP front end over one immutable index:
///   GET /schema, GET /stats, POST /query.
/// Every endpoint answers 503 until the index is in place.
class QueryServer {
 public:
  explicit QueryServer(ExecOptions exec = {});
  ~QueryServer();
  QueryServer(const QueryServer&) = delete;
  QueryServer& operator=(const QueryServer&) = delete;

  /// Installs an index; only the first call has an effect.
  void set_index(Index index);
  /// Runs `loader` on a background thread and installs its result.
  void load_async(std::function<Index()> loader);
  bool ready() const { return index_.load(std::memory_order_acquire) != nullptr; }

  /// Blocks serving on host:port until stop().
  bool listen(const std::string& host, int port);
  /// Binds an ephemeral port and returns it, or -1.
  int bind_any_port(const std::string& host);
  /// Serves on a previously bound port; blocks until stop().
  bool listen_after_bind();
  void stop();
  /// False when the background load failed.
  bool wait_until_ready() const;
  std::string load_error() const;

 private:
  void install(Index index);

  ExecOptions exec_;
  std::unique_ptr<httplib::Server> http_;
  std::unique_ptr<Index> owned_;
  std::atomic<const Index*> index_{nullptr};
  std::once_flag installed_;
  std::thread loader_;
  mutable std::mutex load_error_mutex_;
  std::string load_error_;
};

}  // namespace ihcube
