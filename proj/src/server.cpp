#include "ihcube/server.hpp"

#include <chrono>
#include <cstdio>

#include <httplib.h>

#include "ihcube/api.hpp"

namespace ihcube {
namespace {

constexpr const char* kJson = "application/json";

void cors(httplib::Response& res) {
  res.set_header("Access-Control-Allow-Origin", "*");
  res.set_header("Access-Control-Allow-Headers", "Content-Type");
  res.set_header("Access-Control-Expose-Headers", "X-Query-Elapsed-Us");
}

}  // namespace

QueryServer::QueryServer(ExecOptions exec)
    : exec_(exec), http_(std::make_unique<httplib::Server>()) {
  auto unavailable = [this](httplib::Response& res) {
    std::string msg = "index is loading";
    {
      std::lock_guard lock(load_error_mutex_);
      if (!load_error_.empty()) msg = "index failed to load: " + load_error_;
    }
    res.status = 503;
    res.set_content(error_document(503, "", msg).dump(), kJson);
  };

  http_->Get("/schema", [this, unavailable](const httplib::Request&, httplib::Response& res) {
    cors(res);
    const Index* idx = index_.load(std::memory_order_acquire);
    if (!idx) return unavailable(res);
    res.set_content(schema_document(*idx).dump(), kJson);
  });

  http_->Get("/stats", [this, unavailable](const httplib::Request&, httplib::Response& res) {
    cors(res);
    const Index* idx = index_.load(std::memory_order_acquire);
    if (!idx) return unavailable(res);
    res.set_content(stats_document(idx->stats).dump(), kJson);
  });

  http_->Post("/query", [this, unavailable](const httplib::Request& req, httplib::Response& res) {
    cors(res);
    const Index* idx = index_.load(std::memory_order_acquire);
    if (!idx) return unavailable(res);
    auto r = handle_query(*idx, req.body, exec_);
    res.status = r.status;
    if (r.status == 200) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.1f", r.elapsed_us);
      res.set_header("X-Query-Elapsed-Us", buf);
    }
    res.set_content(r.body, kJson);
  });

  http_->Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    cors(res);
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.status = 204;
  });
}

QueryServer::~QueryServer() {
  stop();
  if (loader_.joinable()) loader_.join();
}

void QueryServer::install(Index index) {
  std::call_once(installed_, [&] {
    owned_ = std::make_unique<Index>(std::move(index));
    index_.store(owned_.get(), std::memory_order_release);
  });
}

void QueryServer::set_index(Index index) { install(std::move(index)); }

void QueryServer::load_async(std::function<Index()> loader) {
  if (loader_.joinable()) loader_.join();
  loader_ = std::thread([this, loader = std::move(loader)] {
    try {
      install(loader());
    } catch (const std::exception& e) {
      std::lock_guard lock(load_error_mutex_);
      load_error_ = e.what();
    }
  });
}

bool QueryServer::listen(const std::string& host, int port) {
  return http_->listen(host, port);
}

int QueryServer::bind_any_port(const std::string& host) {
  return http_->bind_to_any_port(host);
}

bool QueryServer::listen_after_bind() { return http_->listen_after_bind(); }

void QueryServer::stop() {
  if (http_->is_running()) http_->stop();
}

std::string QueryServer::load_error() const {
  std::lock_guard lock(load_error_mutex_);
  return load_error_;
}

bool QueryServer::wait_until_ready() const {
  while (!ready()) {
    if (!load_error().empty()) return false;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return true;
}

}  // namespace ihcube
