#include "tsal/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace tsal {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::shape_mismatch: return "shape_mismatch";
    case ErrorCode::invalid_combination: return "invalid_combination";
    case ErrorCode::unknown_id: return "unknown_id";
    case ErrorCode::duplicate_id: return "duplicate_id";
    case ErrorCode::already_finalized: return "already_finalized";
    case ErrorCode::queue_not_empty: return "queue_not_empty";
    case ErrorCode::empty_input: return "empty_input";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::divergence: return "divergence";
    case ErrorCode::missing_truth: return "missing_truth";
    case ErrorCode::io_error: return "io_error";
  }
  return "unknown";
}

LabelSchema::LabelSchema(std::vector<std::string> labels, std::size_t exclusive_index)
    : labels_(std::move(labels)), exclusive_index_(exclusive_index) {
  if (labels_.size() < 2) {
    throw Error(ErrorCode::invalid_argument, "label schema needs at least two labels");
  }
  std::unordered_set<std::string> seen;
  for (const auto& l : labels_) {
    if (l.empty()) throw Error(ErrorCode::invalid_argument, "empty label name");
    if (!seen.insert(l).second) {
      throw Error(ErrorCode::invalid_argument, "duplicate label name '" + l + "'");
    }
  }
  if (exclusive_index_ >= labels_.size()) {
    throw Error(ErrorCode::invalid_argument, "exclusive index out of range");
  }
}

std::optional<std::size_t> LabelSchema::index_of(std::string_view name) const {
  auto it = std::find(labels_.begin(), labels_.end(), name);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

LabelCombination::LabelCombination(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto b : bits_) {
    if (b > 1) throw Error(ErrorCode::invalid_combination, "combination bits must be 0 or 1");
  }
}

std::size_t LabelCombination::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::string encode_combination(const LabelCombination& bits) {
  std::string out;
  out.reserve(bits.size());
  for (auto b : bits.bits()) out.push_back(b ? '1' : '0');
  return out;
}

LabelCombination decode_combination(std::string_view s) {
  std::vector<std::uint8_t> bits;
  bits.reserve(s.size());
  for (char c : s) {
    if (c != '0' && c != '1') {
      throw Error(ErrorCode::invalid_combination,
                  "invalid character '" + std::string(1, c) + "' in combination");
    }
    bits.push_back(c == '1' ? 1 : 0);
  }
  return LabelCombination(std::move(bits));
}

LabelCombination decode_combination(std::string_view s, const LabelSchema& schema) {
  if (s.size() != schema.size()) {
    throw Error(ErrorCode::invalid_combination,
                "combination '" + std::string(s) + "' has length " + std::to_string(s.size()) +
                    ", expected " + std::to_string(schema.size()));
  }
  return decode_combination(s);
}

ProbabilityVector::ProbabilityVector(std::vector<double> p) : p_(std::move(p)) {
  for (double v : p_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::invalid_argument, "probability outside [0,1]");
    }
  }
}

PoolPartition::PoolPartition(std::set<std::string> candidate, std::set<std::string> test)
    : candidate_(std::move(candidate)), test_(std::move(test)) {
  for (const auto& id : test_) {
    if (candidate_.count(id)) {
      throw Error(ErrorCode::invalid_argument, "id '" + id + "' in both candidate and test sets");
    }
  }
}

PoolPartition commit_annotations(const PoolPartition& part, std::span<const Annotation> annotated) {
  std::unordered_set<std::string> batch;
  for (const auto& [id, combo] : annotated) {
    if (!part.candidate_.count(id)) {
      throw Error(ErrorCode::unknown_id, "id '" + id + "' is not in the candidate pool");
    }
    if (!batch.insert(id).second) {
      throw Error(ErrorCode::duplicate_id, "id '" + id + "' appears twice in annotation batch");
    }
  }
  PoolPartition next = part;
  for (const auto& [id, combo] : annotated) {
    next.candidate_.erase(id);
    next.labeled_.emplace(id, combo);
  }
  return next;
}

}  // namespace tsal
