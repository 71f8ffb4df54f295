#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tsal/types.hpp"

namespace tsal {

/// Threshold rule for pseudo labels. By default a probability equal to the
/// threshold counts as positive; `strict` switches to a strict comparison.
struct ThresholdRule {
  double threshold = 0.5;
  bool strict = false;
};

/// Label correlation table: label combination -> relationship vector (the
/// normalized mean prediction profile of samples confirmed with that combination).
class CorrelationTable {
 public:
  using Entries = std::map<LabelCombination, std::vector<double>>;

  CorrelationTable() = default;
  explicit CorrelationTable(std::size_t label_count, int iteration_built = 0)
      : label_count_(label_count), iteration_built_(iteration_built) {}

  std::size_t label_count() const noexcept { return label_count_; }
  int iteration_built() const noexcept { return iteration_built_; }
  void set_iteration_built(int t) noexcept { iteration_built_ = t; }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }
  const Entries& entries() const noexcept { return entries_; }
  const std::vector<double>* find(const LabelCombination& com) const;

  /// Inserts or overwrites; rejects vectors that are not a distribution
  /// (entries >= 0, sum 1 within 1e-9) or have the wrong length.
  void put(const LabelCombination& com, std::vector<double> rv);

  bool operator==(const CorrelationTable&) const = default;

 private:
  std::size_t label_count_ = 0;
  int iteration_built_ = 0;
  Entries entries_;
};

LabelCombination assign_pseudo(const ProbabilityVector& p, double threshold, bool strict = false);
inline LabelCombination assign_pseudo(const ProbabilityVector& p, const ThresholdRule& rule) {
  return assign_pseudo(p, rule.threshold, rule.strict);
}

std::vector<double> normalize_rv(std::span<const double> p_avg);

struct TableBuild {
  CorrelationTable table;
  std::vector<LabelCombination> skipped;  // groups whose mean profile summed to zero
};

/// Groups prediction rows by confirmed combination, averages each group and
/// normalizes the average into a relationship vector.
TableBuild build_table(std::span<const ProbabilityVector> probs,
                       std::span<const LabelCombination> combos, int iteration = 0);

/// Manhattan-nearest table entry; ties go to the smaller combination string.
std::pair<LabelCombination, double> nearest_combination(std::span<const double> q,
                                                        const CorrelationTable& table);

struct RefinementOutcome {
  LabelCombination proposed;
  LabelCombination refined;
  std::optional<double> distance;  // empty when no table lookup happened
  bool changed = false;
  bool validated = false;  // false: refined fell back to the raw proposal
};

/// Threshold proposal, then replacement by the nearest table combination.
/// Falls back to the proposal for an empty table, an all-zero probability
/// vector, or a lookup farther than `max_distance`.
RefinementOutcome refine_pseudo(const ProbabilityVector& p, const CorrelationTable& table,
                                const ThresholdRule& rule,
                                std::optional<double> max_distance = std::nullopt);

/// Replaces an existing entry only when the new vector's mass on every
/// positive label of the combination is at least the old one. New
/// combinations are inserted; entries missing from `fresh` are kept.
CorrelationTable update_table(const CorrelationTable& old, const CorrelationTable& fresh);

/// Text dump, one line per entry: "<combination> v1 v2 ... vm" with six decimals.
std::string dump_table(const CorrelationTable& table);
/// Parses a dump. Entries are renormalized since six decimals do not sum to one exactly.
CorrelationTable parse_table(const std::string& text);

}  // namespace tsal
