#include "tsal/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace tsal {

namespace {

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::mlm: return "mlm";
    case Strategy::lc: return "lc";
    case Strategy::mle: return "mle";
    case Strategy::random: return "random";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "mlm") return Strategy::mlm;
  if (name == "lc") return Strategy::lc;
  if (name == "mle") return Strategy::mle;
  if (name == "random") return Strategy::random;
  throw Error(ErrorCode::invalid_argument, "unknown strategy '" + std::string(name) + "'");
}

double score_mlm(const ProbabilityVector& p, const LabelSchema& schema) {
  if (p.size() != schema.size()) {
    throw Error(ErrorCode::shape_mismatch, "probability vector does not match schema");
  }
  const std::size_t ex = schema.exclusive_index();
  double best_other = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i != ex) best_other = std::max(best_other, p[i]);
  }
  return std::abs(p[ex] - best_other);
}

double score_lc(const ProbabilityVector& p) {
  const auto v = p.values();
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

double score_mle(const ProbabilityVector& p) {
  double e = 0.0;
  for (double v : p.values()) e += xlogx(v) + xlogx(1.0 - v);
  return e;
}

std::vector<double> random_keys(const std::vector<std::string>& ids, std::uint64_t seed) {
  std::vector<std::size_t> by_id(ids.size());
  std::iota(by_id.begin(), by_id.end(), std::size_t{0});
  std::sort(by_id.begin(), by_id.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<double> keys(ids.size());
  for (std::size_t row : by_id) keys[row] = dist(rng);
  return keys;
}

ScoreTable score_all(const StateMatrix& state, const LabelSchema& schema) {
  ScoreTable t;
  t.mlm.reserve(state.size());
  t.lc.reserve(state.size());
  t.mle.reserve(state.size());
  for (const auto& row : state.rows) {
    t.mlm.push_back(score_mlm(row, schema));
    t.lc.push_back(score_lc(row));
    t.mle.push_back(score_mle(row));
  }
  return t;
}

ActionBatch select(const StateMatrix& state, const LabelSchema& schema, SelectionStrategy strategy,
                   int k, std::uint64_t seed) {
  if (k <= 0) throw Error(ErrorCode::invalid_argument, "k must be >= 1");
  if (state.ids.size() != state.rows.size()) {
    throw Error(ErrorCode::shape_mismatch, "state ids and rows are misaligned");
  }
  if (state.rows.empty()) throw Error(ErrorCode::empty_input, "empty candidate pool");

  std::vector<double> scores;
  switch (strategy.kind) {
    case Strategy::mlm: scores = score_all(state, schema).mlm; break;
    case Strategy::lc: scores = score_all(state, schema).lc; break;
    case Strategy::mle: scores = score_all(state, schema).mle; break;
    case Strategy::random: scores = random_keys(state.ids, seed); break;
  }

  std::vector<std::size_t> order(state.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto take = std::min(order.size(), static_cast<std::size_t>(k));
  auto less = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] < scores[b];
    return state.ids[a] < state.ids[b];
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(), less);

  ActionBatch batch;
  batch.iteration = state.iteration;
  batch.ids.reserve(take);
  batch.scores.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    batch.ids.push_back(state.ids[order[i]]);
    batch.scores.push_back(scores[order[i]]);
  }
  return batch;
}

}  // namespace tsal
