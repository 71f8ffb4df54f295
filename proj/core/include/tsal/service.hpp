#pragma once

#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "tsal/annotation.hpp"
#include "tsal/dataset.hpp"
#include "tsal/driver.hpp"

namespace tsal {

struct Response {
  int status = 200;
  std::string body;  // JSON, empty for 204
};

/// Human-in-the-loop annotation service, independent of the transport.
///
/// Routes (all JSON):
///   GET  /api/queue/next          next pending task, 204 when none
///   POST /api/annotations         {"sample_id": "...", "final": "0101"}
///   GET  /api/labels              schema plus per-label example gallery
///   GET  /api/progress            iteration, labeled fraction, latest metrics
///   POST /api/iteration/advance   fine-tune and open the next batch; 409 while tasks are pending
///
/// Errors are {"error": {"code": "<machine code>", "message": "..."}} with
/// 400 (malformed), 404 (unknown id / route) or 409 (conflict).
class AnnotationService {
 public:
  AnnotationService(Dataset data, ALConfig config);
  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  Response handle(std::string_view method, std::string_view path, std::string_view body);

  const Dataset& dataset() const noexcept { return data_; }
  const AnnotationQueue& queue() const noexcept { return queue_; }
  /// Completed iteration count.
  int iteration() const;
  std::size_t labeled_count() const;

 private:
  Response next_task() const;
  Response post_annotation(std::string_view body);
  Response labels() const;
  Response progress() const;
  Response advance();
  void open_iteration();

  const Dataset data_;
  mutable std::shared_mutex mutex_;
  std::unique_ptr<ActiveLearner> learner_;
  AnnotationQueue queue_;
  std::map<std::string, std::vector<std::string>> gallery_;
};

/// Binds an AnnotationService to HTTP. The service must outlive the server.
class HttpServer {
 public:
  explicit HttpServer(AnnotationService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds host:port (port 0 picks a free one) and returns the bound port.
  /// Throws io_error when the port is busy.
  int bind(const std::string& host, int port);
  /// Serves on a background thread.
  void start();
  /// Serves on the calling thread until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

}  // namespace tsal
