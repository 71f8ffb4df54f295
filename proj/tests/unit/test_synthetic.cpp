#include <algorithm>
#include <cmath>
#include <map>

#include "doctest.h"
#include "tsal/synthetic.hpp"

using namespace tsal;

namespace {

SynthConfig two_way(std::size_t n, double noise) {
  SynthConfig c;
  c.name = "two-way";
  c.schema = LabelSchema({"A-line", "B-line"});
  c.n_samples = n;
  c.feature_dim = 4;
  c.noise_scale = noise;
  c.seed = 3;
  c.prior = {{decode_combination("10"), 0.5, {}, 1.0}, {decode_combination("01"), 0.5, {}, 1.0}};
  return c;
}

}  // namespace

TEST_CASE("generation is deterministic per seed") {
  const auto cfg = lusms_synth_v1(42);
  CHECK(generate_synthetic(cfg) == generate_synthetic(cfg));
  CHECK_FALSE(generate_synthetic(cfg) == generate_synthetic(lusms_synth_v1(43)));
}

TEST_CASE("preset shape") {
  const auto d = generate_synthetic(lusms_synth_v1());
  CHECK(d.ids(Split::pool).size() == 2000);
  CHECK(d.ids(Split::test).size() == 500);
  CHECK(d.feature_dim() == 32);
  CHECK(d.schema().labels() == std::vector<std::string>{"A-line", "B-line", "P-lesion", "P-effusion"});
  CHECK(d.schema().exclusive_index() == 0);
  std::size_t effusion = 0, lesion = 0;
  for (const auto& s : d.samples()) {
    effusion += (*s.truth)[3];
    lesion += (*s.truth)[2];
  }
  CHECK(effusion < lesion);  // P-effusion is the rare label
}

TEST_CASE("empirical combination frequencies follow the prior") {
  const auto d = generate_synthetic(two_way(1000, 1.0));
  std::size_t a = 0;
  for (const auto& s : d.samples()) a += encode_combination(*s.truth) == "10";
  CHECK(std::fabs(static_cast<double>(a) / 1000.0 - 0.5) <= 0.04);

  const auto cfg = lusms_synth_v1(7);
  const auto big = generate_synthetic(cfg);
  std::map<std::string, double> freq;
  for (const auto& s : big.samples()) freq[encode_combination(*s.truth)] += 1.0 / static_cast<double>(big.size());
  std::map<std::string, double> prior;
  for (const auto& p : cfg.prior) prior[encode_combination(p.combo)] += p.probability;
  for (const auto& [k, v] : prior) CHECK_MESSAGE(std::fabs(freq[k] - v) <= 0.04, k);
}

TEST_CASE("zero noise collapses each combination to its center") {
  const auto d = generate_synthetic(two_way(50, 0.0));
  std::map<std::string, std::vector<double>> first;
  for (const auto& s : d.samples()) {
    const auto k = encode_combination(*s.truth);
    auto [it, fresh] = first.emplace(k, s.features);
    if (!fresh) CHECK(it->second == s.features);
  }
  CHECK(first.size() == 2);
}

TEST_CASE("severity interpolates toward the exclusive signature") {
  SynthConfig c = two_way(400, 0.0);
  c.prior = {{decode_combination("10"), 0.4, {}, 1.0, 1.0},
             {decode_combination("01"), 0.3, {}, 1.0, 1.0},
             {decode_combination("01"), 0.3, {}, 1.0, 0.25}};
  const auto d = generate_synthetic(c);
  std::vector<std::vector<double>> centers;
  for (const auto& s : d.samples()) {
    if (std::find(centers.begin(), centers.end(), s.features) == centers.end()) centers.push_back(s.features);
  }
  REQUIRE(centers.size() == 3);
  // Identify the healthy center and the two "01" modes.
  std::vector<double> healthy, full, mild;
  for (const auto& s : d.samples()) {
    if ((*s.truth)[0]) healthy = s.features;
  }
  for (const auto& ctr : centers) {
    if (ctr == healthy) continue;
    (full.empty() ? full : mild) = ctr;
  }
  // One of the two "01" modes is the 0.25 mix of the other with the healthy center.
  auto mix_of = [&](const std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (std::fabs(a[i] - (0.25 * b[i] + 0.75 * healthy[i])) > 1e-12) return false;
    }
    return true;
  };
  CHECK((mix_of(mild, full) || mix_of(full, mild)));
}

TEST_CASE("exclusive label never co-occurs with another label") {
  for (std::uint64_t seed : {1, 42, 99}) {
    const auto d = generate_synthetic(lusms_synth_v1(seed));
    for (const auto& s : d.samples()) {
      REQUIRE(s.truth.has_value());
      if ((*s.truth)[0]) REQUIRE(s.truth->count() == 1);
    }
  }
}

TEST_CASE("invalid priors are rejected") {
  auto c = two_way(10, 1.0);
  c.prior[0].probability = 0.6;
  CHECK_THROWS_AS(generate_synthetic(c), Error);
  c = two_way(10, 1.0);
  c.prior[0].combo = decode_combination("11");
  CHECK_THROWS_AS(generate_synthetic(c), Error);
  c = two_way(10, 1.0);
  c.prior[0].combo = decode_combination("100");
  CHECK_THROWS_AS(generate_synthetic(c), Error);
  c = two_way(10, 1.0);
  c.prior[0].center = {1.0};
  CHECK_THROWS_AS(generate_synthetic(c), Error);
  c = two_way(10, 1.0);
  c.prior.clear();
  CHECK_THROWS_AS(generate_synthetic(c), Error);
}

TEST_CASE("synth config JSON round trip") {
  auto cfg = lusms_synth_v1(5);
  cfg.prior[1].center = std::vector<double>(32, 0.5);
  const auto text = synth_config_to_json(cfg);
  const auto back = synth_config_from_json(text);
  CHECK(synth_config_to_json(back) == text);
  CHECK(generate_synthetic(back) == generate_synthetic(cfg));
  CHECK_THROWS_AS(synth_config_from_json("{"), Error);
  CHECK_THROWS_AS(synth_config_from_json(R"({"labels":["a","b"]})"), Error);
}
