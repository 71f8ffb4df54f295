#include "tsal/service.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>

#include "httplib.h"
#include "json_codec.hpp"

namespace tsal {

namespace {

using json = nlohmann::json;

constexpr std::size_t kGalleryPerLabel = 3;

Response json_response(int status, const json& body) { return {status, body.dump()}; }

Response error_response(int status, std::string_view code, const std::string& message) {
  return json_response(status, {{"error", {{"code", code}, {"message", message}}}});
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::unknown_id: return 404;
    case ErrorCode::already_finalized:
    case ErrorCode::queue_not_empty:
    case ErrorCode::duplicate_id: return 409;
    default: return 400;
  }
}

json example_descriptor(const Sample& s) {
  json d = {{"sample_id", s.id}};
  if (s.image_path.empty()) {
    d["kind"] = "schematic";
    d["image_path"] = nullptr;
  } else {
    d["kind"] = "image";
    d["image_path"] = s.image_path;
  }
  return d;
}

json feature_summary(const Sample& s) {
  double sum = 0.0, sq = 0.0;
  for (double x : s.features) {
    sum += x;
    sq += x * x;
  }
  const auto n = static_cast<double>(s.features.size());
  const std::size_t head = std::min<std::size_t>(8, s.features.size());
  return {{"dim", s.features.size()},
          {"mean", sum / n},
          {"l2_norm", std::sqrt(sq)},
          {"leading", std::vector<double>(s.features.begin(), s.features.begin() + static_cast<std::ptrdiff_t>(head))}};
}

}  // namespace

AnnotationService::AnnotationService(Dataset data, ALConfig config) : data_(std::move(data)) {
  learner_ = std::make_unique<ActiveLearner>(data_, std::move(config));

  // Reference gallery: a fixed seeded pick of test samples showing each label.
  std::mt19937_64 rng(learner_->config().seed);
  const auto test = data_.ids(Split::test);
  for (std::size_t j = 0; j < data_.schema().size(); ++j) {
    std::vector<std::string> with_label;
    for (const auto& id : test) {
      const auto& truth = data_.at(id).truth;
      if (truth && (*truth)[j]) with_label.push_back(id);
    }
    std::shuffle(with_label.begin(), with_label.end(), rng);
    with_label.resize(std::min(with_label.size(), kGalleryPerLabel));
    std::sort(with_label.begin(), with_label.end());
    gallery_[data_.schema().name(j)] = std::move(with_label);
  }
  open_iteration();
}

void AnnotationService::open_iteration() {
  if (learner_->finished()) return;
  queue_.enqueue(learner_->begin_iteration());
}

int AnnotationService::iteration() const {
  std::shared_lock lock(mutex_);
  return learner_->iteration();
}

std::size_t AnnotationService::labeled_count() const {
  std::shared_lock lock(mutex_);
  return learner_->partition().labeled().size();
}

Response AnnotationService::handle(std::string_view method, std::string_view path, std::string_view body) {
  try {
    if (method == "GET" && path == "/api/queue/next") return next_task();
    if (method == "POST" && path == "/api/annotations") return post_annotation(body);
    if (method == "GET" && path == "/api/labels") return labels();
    if (method == "GET" && path == "/api/progress") return progress();
    if (method == "POST" && path == "/api/iteration/advance") return advance();
    return error_response(404, "not_found", "no route " + std::string(method) + " " + std::string(path));
  } catch (const Error& e) {
    return error_response(status_for(e.code()), to_string(e.code()), e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

Response AnnotationService::next_task() const {
  std::shared_lock lock(mutex_);
  const auto task = queue_.next();
  if (!task) return {204, {}};
  json j = detail::to_json(*task, data_.schema());
  const auto& sample = data_.at(task->sample_id);
  j["sample"] = {{"id", sample.id},
                 {"image_path", sample.image_path.empty() ? json(nullptr) : json(sample.image_path)},
                 {"features", feature_summary(sample)}};
  json examples = json::object();
  for (const auto& [label, ids] : gallery_) {
    json list = json::array();
    for (const auto& id : ids) list.push_back(example_descriptor(data_.at(id)));
    examples[label] = std::move(list);
  }
  j["examples"] = std::move(examples);
  j["labels"] = data_.schema().labels();
  return json_response(200, j);
}

Response AnnotationService::post_annotation(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception&) {
    return error_response(400, "malformed_request", "body is not valid JSON");
  }
  if (!j.is_object() || !j.contains("sample_id") || !j["sample_id"].is_string() ||
      !j.contains("final") || !j["final"].is_string()) {
    return error_response(400, "malformed_request", "expected {\"sample_id\": string, \"final\": string}");
  }
  std::unique_lock lock(mutex_);
  const auto id = j["sample_id"].get<std::string>();
  const auto final = j["final"].get<std::string>();
  // Validate against the schema before touching the queue.
  if (!queue_.find(id)) return error_response(404, "unknown_id", "no task for '" + id + "'");
  const auto combo = decode_combination(final, data_.schema());
  const auto result = queue_.submit(id, combo, AnnotationSource::human);
  return json_response(200, detail::to_json(result));
}

Response AnnotationService::labels() const {
  json labels = json::array();
  const auto& schema = data_.schema();
  for (std::size_t i = 0; i < schema.size(); ++i) {
    json examples = json::array();
    for (const auto& id : gallery_.at(schema.name(i))) examples.push_back(example_descriptor(data_.at(id)));
    labels.push_back({{"index", i},
                      {"name", schema.name(i)},
                      {"exclusive", i == schema.exclusive_index()},
                      {"examples", std::move(examples)}});
  }
  return json_response(200, {{"labels", std::move(labels)}, {"exclusive_index", schema.exclusive_index()}});
}

Response AnnotationService::progress() const {
  std::shared_lock lock(mutex_);
  const auto counts = queue_.counts();
  const auto& history = learner_->history();
  json series = json::array();
  for (const auto& r : history) {
    series.push_back({{"iteration", r.iteration},
                      {"macro_accuracy", r.eval.macro_accuracy},
                      {"labeled_fraction", r.labeled_fraction},
                      {"corrected_fraction", r.corrected_fraction}});
  }
  const auto stop = learner_->stop_reason();
  json j = {{"iteration", learner_->iteration()},
            {"current_iteration", learner_->in_progress() ? json(learner_->iteration() + 1) : json(nullptr)},
            {"finished", stop.has_value()},
            {"stop_reason", stop ? json(std::string(to_string(*stop))) : json(nullptr)},
            {"labeled_count", learner_->partition().labeled().size()},
            {"labeled_fraction", static_cast<double>(learner_->partition().labeled().size()) /
                                     static_cast<double>(learner_->initial_pool_size())},
            {"pool_remaining", learner_->partition().candidate().size()},
            {"queue", {{"pending", counts.pending}, {"confirmed", counts.confirmed}, {"corrected", counts.corrected}}},
            {"latest", history.empty() ? json(nullptr) : detail::to_json(history.back(), data_.schema())},
            {"series", std::move(series)}};
  return json_response(200, j);
}

Response AnnotationService::advance() {
  std::unique_lock lock(mutex_);
  if (!learner_->in_progress()) {
    return error_response(409, "loop_finished", "the active-learning loop has finished");
  }
  if (!queue_.drained()) {
    return error_response(409, "queue_not_empty",
                          std::to_string(queue_.counts().pending) + " task(s) still pending");
  }
  const auto results = queue_.take_results();
  const auto report = learner_->complete_iteration(results);
  open_iteration();
  const auto stop = learner_->stop_reason();
  return json_response(200, {{"report", detail::to_json(report, data_.schema())},
                             {"queued", queue_.counts().pending},
                             {"finished", stop.has_value()},
                             {"stop_reason", stop ? json(std::string(to_string(*stop))) : json(nullptr)}});
}

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(AnnotationService& service) : impl_(std::make_unique<Impl>()) {
  auto bridge = [&service](const httplib::Request& req, httplib::Response& res) {
    const auto r = service.handle(req.method, req.path, req.body);
    res.status = r.status;
    if (!r.body.empty()) res.set_content(r.body, "application/json");
  };
  for (const char* route : {"/api/queue/next", "/api/labels", "/api/progress"}) {
    impl_->server.Get(route, bridge);
  }
  for (const char* route : {"/api/annotations", "/api/iteration/advance"}) {
    impl_->server.Post(route, bridge);
  }
  impl_->server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.status == 404 && res.body.empty()) {
      res.set_content(json{{"error", {{"code", "not_found"}, {"message", "no route " + req.path}}}}.dump(),
                      "application/json");
    }
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::io_error, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCode::io_error, "cannot bind " + host + ":" + std::to_string(port) + " (port busy?)");
  }
  return port;
}

void HttpServer::start() {
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace tsal
