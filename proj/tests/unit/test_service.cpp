#include <atomic>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "tsal/service.hpp"
#include "tsal/synthetic.hpp"

using namespace tsal;
using json = nlohmann::json;

namespace {

Dataset service_data(std::size_t n = 120) {
  auto c = lusms_synth_v1(3);
  c.n_samples = n;
  c.n_test = 60;
  c.feature_dim = 6;
  return generate_synthetic(c);
}

ALConfig service_config(std::size_t k = 10, std::size_t iterations = 3) {
  ALConfig cfg;
  cfg.k_max = k;
  cfg.max_iterations = iterations;
  return cfg;
}

json body_of(const Response& r) { return json::parse(r.body); }

std::string error_code(const Response& r) { return body_of(r)["error"]["code"].get<std::string>(); }

std::string annotation(const std::string& id, const std::string& final) {
  return json{{"sample_id", id}, {"final", final}}.dump();
}

// Reviews every pending task with the ground truth; returns how many.
std::size_t drain(AnnotationService& svc) {
  std::size_t n = 0;
  for (;;) {
    const auto next = svc.handle("GET", "/api/queue/next", "");
    if (next.status == 204) return n;
    REQUIRE(next.status == 200);
    const auto id = body_of(next)["sample_id"].get<std::string>();
    const auto truth = encode_combination(*svc.dataset().at(id).truth);
    REQUIRE(svc.handle("POST", "/api/annotations", annotation(id, truth)).status == 200);
    ++n;
  }
}

}  // namespace

TEST_CASE("queue/next returns the oldest pending task with context") {
  AnnotationService svc(service_data(), service_config());
  const auto r = svc.handle("GET", "/api/queue/next", "");
  REQUIRE(r.status == 200);
  const auto j = body_of(r);
  CHECK(j["iteration"] == 1);
  CHECK(j["status"] == "pending");
  CHECK(j["proposed"].get<std::string>().size() == 4);
  CHECK(j["probabilities"].size() == 4);
  CHECK(j["probabilities_by_label"].contains("P-effusion"));
  CHECK(j["sample"]["features"]["dim"] == 6);
  CHECK(j["labels"].size() == 4);
  CHECK(j["examples"].contains("B-line"));
  // Reading does not consume.
  CHECK(body_of(svc.handle("GET", "/api/queue/next", ""))["sample_id"] == j["sample_id"]);
}

TEST_CASE("annotation submission codes") {
  AnnotationService svc(service_data(), service_config());
  const auto id = body_of(svc.handle("GET", "/api/queue/next", ""))["sample_id"].get<std::string>();

  CHECK(svc.handle("POST", "/api/annotations", "{nope").status == 400);
  CHECK(error_code(svc.handle("POST", "/api/annotations", "{nope")) == "malformed_request");
  CHECK(svc.handle("POST", "/api/annotations", R"({"sample_id":"x"})").status == 400);
  CHECK(svc.handle("POST", "/api/annotations", R"({"sample_id":1,"final":"0100"})").status == 400);

  const auto unknown = svc.handle("POST", "/api/annotations", annotation("no-such-id", "0100"));
  CHECK(unknown.status == 404);
  CHECK(error_code(unknown) == "unknown_id");

  const auto short_bits = svc.handle("POST", "/api/annotations", annotation(id, "010"));
  CHECK(short_bits.status == 400);
  CHECK(error_code(short_bits) == "invalid_combination");
  CHECK(svc.handle("POST", "/api/annotations", annotation(id, "01a0")).status == 400);

  const auto ok = svc.handle("POST", "/api/annotations", annotation(id, "0110"));
  REQUIRE(ok.status == 200);
  const auto j = body_of(ok);
  CHECK(j["sample_id"] == id);
  CHECK(j["final"] == "0110");
  CHECK(j["source"] == "human");

  const auto again = svc.handle("POST", "/api/annotations", annotation(id, "0110"));
  CHECK(again.status == 409);
  CHECK(error_code(again) == "already_finalized");

  CHECK(svc.handle("GET", "/api/nothing", "").status == 404);
  CHECK(svc.handle("DELETE", "/api/annotations", "").status == 404);
}

TEST_CASE("advance is refused while tasks are pending and after the loop ends") {
  AnnotationService svc(service_data(), service_config(10, 2));
  const auto early = svc.handle("POST", "/api/iteration/advance", "");
  CHECK(early.status == 409);
  CHECK(error_code(early) == "queue_not_empty");

  CHECK(drain(svc) == 10);
  const auto first = svc.handle("POST", "/api/iteration/advance", "");
  REQUIRE(first.status == 200);
  CHECK(body_of(first)["report"]["iteration"] == 1);
  CHECK(body_of(first)["report"]["corrected"].is_number());
  CHECK(body_of(first)["queued"] == 10);
  CHECK(svc.iteration() == 1);
  CHECK(svc.labeled_count() == 10);

  CHECK(drain(svc) == 10);
  const auto second = svc.handle("POST", "/api/iteration/advance", "");
  REQUIRE(second.status == 200);
  CHECK(body_of(second)["finished"] == true);
  CHECK(body_of(second)["stop_reason"] == "max_iterations");
  CHECK(svc.handle("GET", "/api/queue/next", "").status == 204);

  const auto done = svc.handle("POST", "/api/iteration/advance", "");
  CHECK(done.status == 409);
  CHECK(error_code(done) == "loop_finished");
}

TEST_CASE("progress and labels") {
  AnnotationService svc(service_data(), service_config());
  auto p = body_of(svc.handle("GET", "/api/progress", ""));
  CHECK(p["iteration"] == 0);
  CHECK(p["current_iteration"] == 1);
  CHECK(p["queue"]["pending"] == 10);
  CHECK(p["latest"].is_null());
  CHECK(p["finished"] == false);

  drain(svc);
  svc.handle("POST", "/api/iteration/advance", "");
  p = body_of(svc.handle("GET", "/api/progress", ""));
  CHECK(p["iteration"] == 1);
  CHECK(p["labeled_count"] == 10);
  CHECK(p["labeled_fraction"].get<double>() == doctest::Approx(10.0 / 120.0));
  CHECK(p["series"].size() == 1);
  CHECK(p["latest"]["metrics"]["labels"].size() == 4);

  const auto labels = body_of(svc.handle("GET", "/api/labels", ""));
  REQUIRE(labels["labels"].size() == 4);
  CHECK(labels["exclusive_index"] == 0);
  CHECK(labels["labels"][0]["exclusive"] == true);
  for (const auto& l : labels["labels"]) {
    CHECK(l["examples"].size() <= 3);
    CHECK_FALSE(l["examples"].empty());
    for (const auto& e : l["examples"]) {
      const auto& s = svc.dataset().at(e["sample_id"].get<std::string>());
      CHECK(svc.dataset().find(s.id) != nullptr);
      CHECK((*s.truth)[l["index"].get<std::size_t>()]);
    }
  }
}

TEST_CASE("human-driven loop matches the headless runner") {
  const auto data = service_data();
  const auto cfg = service_config(10, 3);
  AnnotationService svc(data, cfg);
  for (int t = 0; t < 3; ++t) {
    drain(svc);
    REQUIRE(svc.handle("POST", "/api/iteration/advance", "").status == 200);
  }
  const auto headless = run(data, cfg);
  const auto progress = body_of(svc.handle("GET", "/api/progress", ""));
  REQUIRE(progress["series"].size() == headless.series.size());
  for (std::size_t t = 0; t < headless.series.size(); ++t) {
    CHECK(progress["series"][t]["macro_accuracy"].get<double>() == headless.series[t].eval.macro_accuracy);
    CHECK(progress["series"][t]["corrected_fraction"].get<double>() == headless.series[t].corrected_fraction);
  }
}

TEST_CASE("HTTP round trip over 50 samples") {
  AnnotationService svc(service_data(200), service_config(25, 4));
  HttpServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  server.start();

  httplib::Client cli("127.0.0.1", port);
  std::size_t submitted = 0;
  for (int round = 0; round < 2; ++round) {
    for (;;) {
      auto next = cli.Get("/api/queue/next");
      REQUIRE(next);
      if (next->status == 204) break;
      REQUIRE(next->status == 200);
      CHECK(next->get_header_value("Content-Type") == "application/json");
      const auto id = json::parse(next->body)["sample_id"].get<std::string>();
      const auto truth = encode_combination(*svc.dataset().at(id).truth);
      auto post = cli.Post("/api/annotations", annotation(id, truth), "application/json");
      REQUIRE(post);
      REQUIRE(post->status == 200);
      CHECK(json::parse(post->body)["final"] == truth);
      ++submitted;
    }
    auto adv = cli.Post("/api/iteration/advance", "", "application/json");
    REQUIRE(adv);
    REQUIRE(adv->status == 200);
  }
  CHECK(submitted == 50);

  auto progress = cli.Get("/api/progress");
  REQUIRE(progress);
  const auto p = json::parse(progress->body);
  CHECK(p["labeled_count"] == 50);
  CHECK(p["iteration"] == 2);

  auto missing = cli.Get("/api/missing");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  CHECK(json::parse(missing->body)["error"]["code"] == "not_found");

  auto conflict = cli.Post("/api/iteration/advance", "", "application/json");
  REQUIRE(conflict);
  CHECK(conflict->status == 409);

  server.stop();
}

TEST_CASE("concurrent HTTP submissions are linearizable") {
  AnnotationService svc(service_data(), service_config(25, 2));
  HttpServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  server.start();

  std::vector<std::string> ids;
  REQUIRE(svc.queue().counts().pending == 25);
  for (const auto& t : svc.queue().tasks()) ids.push_back(t.sample_id);

  // Four clients submit every id with different answers. Replaying the
  // winners against a fresh queue must reproduce the service's final state.
  std::mutex log_mutex;
  std::map<std::string, std::string> winner;
  std::atomic<int> ok{0}, conflicts{0}, other{0};
  std::vector<std::thread> workers;
  for (int w = 0; w < 4; ++w) {
    workers.emplace_back([&, w] {
      httplib::Client cli("127.0.0.1", port);
      std::mt19937 rng(static_cast<unsigned>(w));
      auto order = ids;
      std::shuffle(order.begin(), order.end(), rng);
      const std::string final = w % 2 ? "0100" : "0010";
      for (const auto& id : order) {
        auto r = cli.Post("/api/annotations", annotation(id, final), "application/json");
        if (r && r->status == 200) {
          ++ok;
          std::lock_guard lock(log_mutex);
          winner[id] = json::parse(r->body)["final"].get<std::string>();
        } else if (r && r->status == 409) {
          ++conflicts;
        } else {
          ++other;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  server.stop();

  CHECK(ok == 25);
  CHECK(conflicts == 75);
  CHECK(other == 0);
  CHECK(svc.queue().drained());

  AnnotationQueue replay;
  replay.enqueue(svc.queue().tasks());
  for (const auto& [id, final] : winner) replay.submit(id, final);
  const auto expected = replay.results();
  const auto actual = svc.queue().results();
  REQUIRE(expected.size() == actual.size());
  for (std::size_t i = 0; i < actual.size(); ++i) {
    CHECK(actual[i].sample_id == expected[i].sample_id);
    CHECK(actual[i].final == expected[i].final);
    CHECK(actual[i].changed == expected[i].changed);
  }
}
