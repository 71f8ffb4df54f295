#include <algorithm>
#include <set>

#include "doctest.h"
#include "tsal/driver.hpp"
#include "tsal/report.hpp"
#include "tsal/synthetic.hpp"

using namespace tsal;

namespace {

// Three combinations, each with its own one-hot feature.
Dataset separable(std::size_t per_combo, std::size_t test_per_combo = 2) {
  Dataset d("separable", LabelSchema({"a", "b", "c"}, 0), 3);
  const char* combos[] = {"100", "010", "011"};
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<double> x(3, 0.0);
    x[c] = 1.0;
    for (std::size_t i = 0; i < per_combo; ++i) {
      d.add({"p" + std::to_string(c) + "_" + std::to_string(i), x, decode_combination(combos[c]), ""});
    }
    for (std::size_t i = 0; i < test_per_combo; ++i) {
      d.add({"t" + std::to_string(c) + "_" + std::to_string(i), x, decode_combination(combos[c]), ""},
            Split::test);
    }
  }
  return d;
}

ClassifierModel perfect_model(const Dataset& d) {
  auto m = init_model(d.schema(), 3, TrainConfig{});
  // logit_a = 40 x0 - 20, logit_b = 40 (x1 + x2) - 20, logit_c = 40 x2 - 20
  m.set_head_parameters(std::vector<double>{40, 0, 0, 0, 40, 40, 0, 0, 40, -20, -20, -20});
  return m;
}

SynthConfig small_synth(std::size_t n, std::uint64_t seed) {
  auto c = lusms_synth_v1(seed);
  c.n_samples = n;
  c.n_test = 40;
  c.feature_dim = 8;
  return c;
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

TEST_CASE("pool smaller than one batch is exhausted after one iteration") {
  Dataset d("ten", LabelSchema({"a", "b"}, 0), 2);
  for (int i = 0; i < 10; ++i) d.add({"s" + std::to_string(i), {double(i), 1.0}, decode_combination(i % 2 ? "10" : "01"), ""});
  d.add({"t", {0.5, 0.5}, decode_combination("10"), ""}, Split::test);
  ALConfig cfg;
  cfg.k_max = 25;
  const auto r = run(d, cfg);
  REQUIRE(r.series.size() == 1);
  CHECK(r.stop == StopReason::pool_exhausted);
  CHECK(r.series[0].selected.size() == 10);
  CHECK(r.series[0].labeled_count == 10);
  CHECK(r.series[0].labeled_fraction == 1.0);
  CHECK(r.series[0].pool_remaining == 0);
}

TEST_CASE("runs are reproducible from the seed") {
  const auto d = generate_synthetic(small_synth(300, 4));
  ALConfig cfg;
  cfg.max_iterations = 4;
  cfg.seed = 11;
  const auto a = run(d, cfg);
  const auto b = run(d, cfg);
  const auto meta = make_metadata("active", cfg, d);
  CHECK(report_to_string(meta, d.schema(), a.series, a.stop) == report_to_string(meta, d.schema(), b.series, b.stop));
  CHECK(a.model == b.model);

  cfg.strategy.kind = Strategy::random;
  const auto r1 = run(d, cfg);
  const auto r2 = run(d, cfg);
  CHECK(r1.series[0].selected == r2.series[0].selected);
  cfg.seed = 12;
  CHECK(run(d, cfg).series[0].selected != r1.series[0].selected);
}

TEST_CASE("labeled size grows by k per iteration up to the pool size") {
  const auto d = generate_synthetic(small_synth(110, 9));
  for (auto kind : {Strategy::mlm, Strategy::lc, Strategy::mle, Strategy::random}) {
    ALConfig cfg;
    cfg.k_max = 25;
    cfg.max_iterations = 10;
    cfg.strategy.kind = kind;
    const auto r = run(d, cfg);
    CHECK(r.stop == StopReason::pool_exhausted);
    REQUIRE(r.series.size() == 5);
    std::set<std::string> seen;
    double prev_fraction = 0.0;
    for (std::size_t t = 0; t < r.series.size(); ++t) {
      const auto& rep = r.series[t];
      CHECK(rep.iteration == static_cast<int>(t + 1));
      CHECK(rep.labeled_count == std::min<std::size_t>((t + 1) * 25, 110));
      CHECK(rep.labeled_count + rep.pool_remaining == 110);
      CHECK(rep.labeled_fraction >= prev_fraction);
      prev_fraction = rep.labeled_fraction;
      CHECK(rep.corrected_fraction >= 0.0);
      CHECK(rep.corrected_fraction <= 1.0);
      CHECK(rep.reviewed_fraction == 1.0);
      for (const auto& id : rep.selected) CHECK(seen.insert(id).second);
    }
    CHECK(seen.size() == 110);
  }
}

TEST_CASE("a perfect classifier needs no corrections once refinement is gated") {
  // Tie-broken selection takes the "100" block first, so later batches meet
  // combinations the table has not seen. Ungated refinement snaps them to the
  // nearest known row; a distance gate keeps the threshold proposal instead.
  const auto d = separable(20);
  ALConfig cfg;
  cfg.k_max = 10;
  cfg.max_iterations = 6;
  cfg.max_refine_distance = 0.5;
  const auto r = run(d, cfg, perfect_model(d));
  REQUIRE(r.series.size() == 6);
  for (const auto& rep : r.series) {
    CHECK(rep.corrected == 0);
    CHECK(rep.threshold_corrected_fraction == 0.0);
    CHECK(rep.eval.macro_accuracy == 1.0);
  }
  CHECK(r.series.back().table_size == 3);

  cfg.max_refine_distance.reset();
  const auto ungated = run(d, cfg, perfect_model(d));
  std::size_t corrected = 0;
  for (const auto& rep : ungated.series) {
    corrected += rep.corrected;
    CHECK(rep.threshold_corrected_fraction == 0.0);
    CHECK(rep.corrected == rep.refined_changed);
  }
  CHECK(corrected > 0);
  CHECK(ungated.series.back().corrected == 0);
}

TEST_CASE("stop conditions") {
  const auto d = generate_synthetic(small_synth(200, 5));
  ALConfig cfg;
  cfg.max_iterations = 1;
  auto r = run(d, cfg);
  CHECK(r.series.size() == 1);
  CHECK(r.stop == StopReason::max_iterations);

  cfg.max_iterations = 20;
  cfg.target_metric = 0.0;
  r = run(d, cfg);
  CHECK(r.series.size() == 1);
  CHECK(r.stop == StopReason::target_reached);
}

TEST_CASE("without validation the proposal is the threshold proposal") {
  const auto d = generate_synthetic(small_synth(200, 6));
  ALConfig cfg;
  cfg.max_iterations = 5;
  cfg.validation = false;
  for (const auto& rep : run(d, cfg).series) {
    CHECK(rep.corrected_fraction == rep.threshold_corrected_fraction);
    CHECK(rep.refined_changed == 0);
  }
}

TEST_CASE("begin and complete enforce the iteration protocol") {
  const auto d = separable(10);
  ALConfig cfg;
  cfg.k_max = 4;
  ActiveLearner al(d, cfg, perfect_model(d));
  CHECK(code_of([&] { al.complete_iteration({}); }) == ErrorCode::invalid_argument);

  const auto tasks = al.begin_iteration();
  REQUIRE(tasks.size() == 4);
  CHECK(al.in_progress());
  CHECK(code_of([&] { al.begin_iteration(); }) == ErrorCode::queue_not_empty);

  std::vector<AnnotationResult> results;
  for (const auto& t : tasks) results.push_back(oracle_confirm(t, d.at(t.sample_id).truth));
  auto short_batch = results;
  short_batch.pop_back();
  CHECK(code_of([&] { al.complete_iteration(short_batch); }) == ErrorCode::shape_mismatch);
  auto dup = results;
  dup[1] = dup[0];
  CHECK(code_of([&] { al.complete_iteration(dup); }) == ErrorCode::duplicate_id);
  auto stranger = results;
  stranger[0].sample_id = "nobody";
  CHECK(code_of([&] { al.complete_iteration(stranger); }) == ErrorCode::unknown_id);
  auto bad_len = results;
  bad_len[0].final = decode_combination("10");
  CHECK(code_of([&] { al.complete_iteration(bad_len); }) == ErrorCode::invalid_combination);
  CHECK(al.iteration() == 0);

  // Any order is accepted.
  std::reverse(results.begin(), results.end());
  const auto rep = al.complete_iteration(results);
  CHECK(rep.iteration == 1);
  CHECK(al.iteration() == 1);
  CHECK_FALSE(al.in_progress());
  CHECK(al.partition().labeled().size() == 4);
}

TEST_CASE("human corrections are counted against the shown proposal") {
  const auto d = separable(10);
  ALConfig cfg;
  cfg.k_max = 5;
  ActiveLearner al(d, cfg, perfect_model(d));
  const auto tasks = al.begin_iteration();
  std::vector<AnnotationResult> results;
  for (const auto& t : tasks) results.push_back({t.sample_id, t.proposed, false, AnnotationSource::human});
  for (std::size_t i : {0, 3}) {
    results[i].final = decode_combination(encode_combination(results[i].final) == "010" ? "011" : "010");
    results[i].changed = true;
  }
  const auto rep = al.complete_iteration(results);
  CHECK(rep.corrected == 2);
  CHECK(rep.corrected_fraction == doctest::Approx(0.4));
  CHECK(al.partition().labeled().at(results[0].sample_id) == results[0].final);
}

TEST_CASE("batch fine-tune scope trains on the new batch only") {
  const auto d = generate_synthetic(small_synth(200, 8));
  ALConfig cfg;
  cfg.max_iterations = 3;
  cfg.finetune_scope = FinetuneScope::batch;
  const auto batch = run(d, cfg);
  cfg.finetune_scope = FinetuneScope::cumulative;
  const auto cumulative = run(d, cfg);
  CHECK(batch.series[0].selected == cumulative.series[0].selected);
  CHECK_FALSE(batch.model == cumulative.model);
  CHECK(parse_finetune_scope("batch") == FinetuneScope::batch);
  CHECK_THROWS_AS(parse_finetune_scope("all"), Error);
}

TEST_CASE("config and dataset validation") {
  const auto d = separable(5);
  ALConfig cfg;
  cfg.k_max = 0;
  CHECK_THROWS_AS(ActiveLearner(d, cfg), Error);
  cfg = {};
  cfg.threshold.threshold = 1.0;
  CHECK_THROWS_AS(ActiveLearner(d, cfg), Error);
  cfg = {};
  cfg.oracle_noise = -0.1;
  CHECK_THROWS_AS(cfg.validate(), Error);

  Dataset no_test("x", LabelSchema({"a", "b"}), 1);
  no_test.add({"s", {1.0}, decode_combination("10"), ""});
  CHECK_THROWS_AS(ActiveLearner(no_test, ALConfig{}), Error);

  const auto other = init_model(LabelSchema({"a", "b"}), 3, TrainConfig{});
  CHECK(code_of([&] { ActiveLearner(d, ALConfig{}, other); }) == ErrorCode::shape_mismatch);
}

TEST_CASE("baseline trains on the whole pool") {
  const auto d = separable(20);
  ALConfig cfg;
  cfg.train.learning_rate = 0.5;
  const auto b = run_baseline(d, cfg, 200);
  CHECK(b.report.labeled_count == 60);
  CHECK(b.report.labeled_fraction == 1.0);
  CHECK(b.report.eval.macro_accuracy == 1.0);
  CHECK(run_baseline(d, cfg, 200).model == b.model);
}

TEST_CASE("first_reaching and iteration seeds") {
  std::vector<IterationReport> s(3);
  s[0].eval.macro_accuracy = 0.5;
  s[1].eval.macro_accuracy = 0.9;
  s[2].eval.macro_accuracy = 0.95;
  CHECK(first_reaching(s, 0.85) == &s[1]);
  CHECK(first_reaching(s, 0.5) == &s[0]);
  CHECK(first_reaching(s, 0.99) == nullptr);

  std::set<std::uint64_t> seeds;
  for (int t = 0; t < 50; ++t) {
    seeds.insert(iteration_seed(42, t, 1));
    seeds.insert(iteration_seed(42, t, 2));
  }
  CHECK(seeds.size() == 100);
  CHECK(iteration_seed(42, 3, 1) == iteration_seed(42, 3, 1));
}
