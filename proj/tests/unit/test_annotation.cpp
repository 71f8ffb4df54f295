#include <atomic>
#include <random>
#include <thread>

#include "doctest.h"
#include "oracles.hpp"
#include "tsal/annotation.hpp"

using namespace tsal;

namespace {

AnnotationTask task(std::string id, const char* proposed) {
  AnnotationTask t;
  t.sample_id = std::move(id);
  t.proposed = decode_combination(proposed);
  t.threshold_proposal = t.proposed;
  t.prob = ProbabilityVector({0.5, 0.5, 0.5, 0.5});
  t.iteration = 1;
  return t;
}

std::vector<AnnotationTask> tasks(std::size_t n) {
  std::vector<AnnotationTask> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(task("t" + std::to_string(i), "1000"));
  return out;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected tsal::Error");
  return ErrorCode::io_error;
}

}  // namespace

TEST_CASE("oracle_confirm examples") {
  const auto agree = oracle_confirm(task("a", "1000"), decode_combination("1000"));
  CHECK_FALSE(agree.changed);
  CHECK(agree.final == decode_combination("1000"));
  CHECK(agree.source == AnnotationSource::simulated);

  const auto fix = oracle_confirm(task("b", "0000"), decode_combination("0100"));
  CHECK(fix.changed);
  CHECK(encode_combination(fix.final) == "0100");
  CHECK(fix.sample_id == "b");

  CHECK(code_of([] { oracle_confirm(task("c", "1000"), std::nullopt); }) == ErrorCode::missing_truth);
}

TEST_CASE("oracle over a batch keeps cardinality and ids") {
  const auto batch = tasks(25);
  std::vector<AnnotationResult> results;
  for (const auto& t : batch) results.push_back(oracle_confirm(t, decode_combination("0110")));
  REQUIRE(results.size() == batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) CHECK(results[i].sample_id == batch[i].sample_id);
}

TEST_CASE("simulated oracle is idempotent and seeded") {
  const SimulatedOracle noisy(0.3, 5);
  const auto truth = decode_combination("0101");
  std::size_t flips = 0;
  for (int i = 0; i < 400; ++i) {
    const auto t = task("s" + std::to_string(i), "0101");
    const auto a = noisy.confirm(t, truth);
    CHECK(a == noisy.confirm(t, truth));
    CHECK(a.changed == (a.final != t.proposed));
    for (std::size_t b = 0; b < 4; ++b) flips += a.final[b] != truth[b];
  }
  // 1600 bits at rate 0.3: mean 480, sd about 18.
  CHECK(flips > 400);
  CHECK(flips < 560);
  const SimulatedOracle clean(0.0, 5);
  CHECK(clean.confirm(task("x", "0000"), truth).final == truth);
  CHECK_THROWS_AS(SimulatedOracle(1.5, 0), Error);
}

TEST_CASE("enqueue examples") {
  AnnotationQueue q;
  q.enqueue(tasks(100));
  CHECK(q.counts().pending == 100);
  q.enqueue({});
  CHECK(q.counts().pending == 100);
  CHECK(code_of([&] { q.enqueue({task("t3", "1000")}); }) == ErrorCode::duplicate_id);
  CHECK(code_of([&] { q.enqueue({task("n1", "1000"), task("n1", "1000")}); }) == ErrorCode::duplicate_id);
  CHECK(q.counts().pending == 100);
}

TEST_CASE("submit examples") {
  AnnotationQueue q;
  q.enqueue({task("a", "1000"), task("b", "0100"), task("c", "0110")});
  CHECK(q.next()->sample_id == "a");

  const auto same = q.submit("a", decode_combination("1000"));
  CHECK_FALSE(same.changed);
  CHECK(q.find("a")->status == TaskStatus::confirmed);
  CHECK(q.next()->sample_id == "b");

  const auto diff = q.submit("b", "0110");
  CHECK(diff.changed);
  CHECK(diff.source == AnnotationSource::human);
  CHECK(q.find("b")->status == TaskStatus::corrected);

  CHECK(code_of([&] { q.submit("a", "1000"); }) == ErrorCode::already_finalized);
  CHECK(code_of([&] { q.submit("zz", "1000"); }) == ErrorCode::unknown_id);
  CHECK(code_of([&] { q.submit("c", "10"); }) == ErrorCode::invalid_combination);
  CHECK(code_of([&] { q.submit("c", "10x0"); }) == ErrorCode::invalid_combination);
  CHECK(q.find("c")->status == TaskStatus::pending);

  CHECK(code_of([&] { q.take_results(); }) == ErrorCode::queue_not_empty);
  q.submit("c", "0110");
  CHECK(q.drained());
  CHECK_FALSE(q.next().has_value());
  const auto counts = q.counts();
  CHECK(counts.confirmed == 2);
  CHECK(counts.corrected == 1);

  const auto results = q.take_results();
  REQUIRE(results.size() == 3);
  CHECK(results[0].sample_id == "a");
  CHECK(results[2].sample_id == "c");
  CHECK(q.counts().total() == 0);
  // Ids can be queued again once the previous batch is taken.
  CHECK_NOTHROW(q.enqueue({task("a", "1000")}));
}

TEST_CASE("queue conserves pending plus finalized between enqueues") {
  std::mt19937_64 rng(3);
  AnnotationQueue q;
  q.enqueue(tasks(60));
  std::vector<std::string> ids;
  for (int i = 0; i < 60; ++i) ids.push_back("t" + std::to_string(i));
  std::shuffle(ids.begin(), ids.end(), rng);
  for (const auto& id : ids) {
    q.submit(id, decode_combination(oracle::bits_to_string(rng() % 16, 4)));
    REQUIRE(q.counts().total() == 60);
  }
  CHECK(q.drained());
}

TEST_CASE("concurrent submits finalize each task exactly once") {
  AnnotationQueue q;
  q.enqueue(tasks(200));
  std::atomic<int> ok{0}, conflicts{0};
  std::vector<std::thread> workers;
  for (int w = 0; w < 4; ++w) {
    workers.emplace_back([&] {
      for (int i = 0; i < 200; ++i) {
        try {
          q.submit("t" + std::to_string(i), "1000");
          ++ok;
        } catch (const Error& e) {
          if (e.code() == ErrorCode::already_finalized) ++conflicts;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  CHECK(ok == 200);
  CHECK(conflicts == 600);
  CHECK(q.counts().confirmed == 200);
}
