#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tsal/types.hpp"

namespace tsal {

enum class Strategy { mlm, lc, mle, random };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);

struct SelectionStrategy {
  Strategy kind = Strategy::mlm;
};

/// Ids chosen at one iteration, most informative first.
struct ActionBatch {
  std::vector<std::string> ids;
  std::vector<double> scores;
  int iteration = 0;
};

/// |p(exclusive) - max over the other labels|. Small margins are the
/// hardest healthy-vs-diseased calls.
double score_mlm(const ProbabilityVector& p, const LabelSchema& schema);

/// Largest per-label probability; low values mark hard samples.
double score_lc(const ProbabilityVector& p);

/// Sum over labels of p log p + (1 - p) log(1 - p), natural log, 0 log 0 = 0.
/// This is the negative binary entropy, so the most uncertain rows score lowest.
double score_mle(const ProbabilityVector& p);

/// Random strategy keys: one uniform [0,1) draw per row from mt19937_64(seed),
/// drawn in ascending id order and returned aligned with `ids`.
std::vector<double> random_keys(const std::vector<std::string>& ids, std::uint64_t seed);

/// Per-row scores for every strategy, aligned with state.ids.
struct ScoreTable {
  std::vector<double> mlm;
  std::vector<double> lc;
  std::vector<double> mle;
};

ScoreTable score_all(const StateMatrix& state, const LabelSchema& schema);

/// Picks the k rows with the smallest strategy score, ties broken by
/// ascending id. Random selects the k smallest random_keys, which is a
/// uniform draw without replacement.
ActionBatch select(const StateMatrix& state, const LabelSchema& schema, SelectionStrategy strategy,
                   int k, std::uint64_t seed);

}  // namespace tsal
