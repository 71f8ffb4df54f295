#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tsal {

/// Machine-readable failure categories. The HTTP service maps these onto
/// response codes, so keep the string forms stable.
enum class ErrorCode {
  invalid_argument,
  shape_mismatch,
  invalid_combination,
  unknown_id,
  duplicate_id,
  already_finalized,
  queue_not_empty,
  empty_input,
  parse_error,
  divergence,
  missing_truth,
  io_error,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Ordered label vocabulary. One label plays the mutually exclusive
/// "healthy" role that the margin strategy compares against the rest.
class LabelSchema {
 public:
  LabelSchema() = default;
  explicit LabelSchema(std::vector<std::string> labels, std::size_t exclusive_index = 0);

  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& name(std::size_t i) const { return labels_.at(i); }
  std::size_t exclusive_index() const noexcept { return exclusive_index_; }
  std::optional<std::size_t> index_of(std::string_view name) const;

  bool operator==(const LabelSchema&) const = default;

 private:
  std::vector<std::string> labels_;
  std::size_t exclusive_index_ = 0;
};

/// A joint per-label decision, e.g. "0101". Ordering is lexicographic over
/// the bits, which coincides with ordering of the string form.
class LabelCombination {
 public:
  LabelCombination() = default;
  explicit LabelCombination(std::vector<std::uint8_t> bits);

  static LabelCombination zeros(std::size_t m) {
    return LabelCombination(std::vector<std::uint8_t>(m, 0));
  }

  std::size_t size() const noexcept { return bits_.size(); }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool on) { bits_.at(i) = on ? 1 : 0; }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  std::size_t count() const noexcept;

  auto operator<=>(const LabelCombination&) const = default;
  bool operator==(const LabelCombination&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

std::string encode_combination(const LabelCombination& bits);
LabelCombination decode_combination(std::string_view s, const LabelSchema& schema);
/// Decodes without a schema; only the character set is checked.
LabelCombination decode_combination(std::string_view s);

struct Sample {
  std::string id;
  std::vector<double> features;
  std::optional<LabelCombination> truth;
  std::string image_path;  // optional UI metadata, passed through untouched
};

/// Independent per-label probabilities. Entries need not sum to one.
class ProbabilityVector {
 public:
  ProbabilityVector() = default;
  explicit ProbabilityVector(std::vector<double> p);

  std::size_t size() const noexcept { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  std::span<const double> values() const noexcept { return p_; }

  bool operator==(const ProbabilityVector&) const = default;

 private:
  std::vector<double> p_;
};

/// Prediction state of the candidate pool at one iteration.
struct StateMatrix {
  std::vector<std::string> ids;
  std::vector<ProbabilityVector> rows;
  int iteration = 0;

  std::size_t size() const noexcept { return rows.size(); }
};

using Annotation = std::pair<std::string, LabelCombination>;

/// Candidate pool / labeled set / test set. Values are immutable in spirit:
/// commit_annotations returns a new partition.
class PoolPartition {
 public:
  PoolPartition() = default;
  PoolPartition(std::set<std::string> candidate, std::set<std::string> test);

  const std::set<std::string>& candidate() const noexcept { return candidate_; }
  const std::map<std::string, LabelCombination>& labeled() const noexcept { return labeled_; }
  const std::set<std::string>& test() const noexcept { return test_; }

  friend PoolPartition commit_annotations(const PoolPartition& part,
                                          std::span<const Annotation> annotated);

 private:
  std::set<std::string> candidate_;
  std::map<std::string, LabelCombination> labeled_;
  std::set<std::string> test_;
};

/// Moves annotated ids from the candidate pool into the labeled set.
PoolPartition commit_annotations(const PoolPartition& part, std::span<const Annotation> annotated);

}  // namespace tsal
