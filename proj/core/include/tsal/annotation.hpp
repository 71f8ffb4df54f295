#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "tsal/types.hpp"

namespace tsal {

enum class TaskStatus { pending, confirmed, corrected };
enum class AnnotationSource { simulated, human };

std::string_view to_string(TaskStatus s);
std::string_view to_string(AnnotationSource s);

/// One sample awaiting review, with its default (pseudo) annotation.
struct AnnotationTask {
  std::string sample_id;
  LabelCombination proposed;
  ProbabilityVector prob;
  int iteration = 0;
  TaskStatus status = TaskStatus::pending;
  // Hints for the reviewer.
  LabelCombination threshold_proposal;
  std::optional<double> distance;
  bool validated = false;
};

struct AnnotationResult {
  std::string sample_id;
  LabelCombination final;
  bool changed = false;
  AnnotationSource source = AnnotationSource::simulated;

  bool operator==(const AnnotationResult&) const = default;
};

/// Stands in for the human reviewer using ground truth. With a non-zero
/// noise rate each bit of the truth is flipped with that probability; the
/// flips are a pure function of (seed, sample id, iteration), so confirming
/// the same task twice gives the same answer.
class SimulatedOracle {
 public:
  explicit SimulatedOracle(double noise_rate = 0.0, std::uint64_t seed = 0);

  AnnotationResult confirm(const AnnotationTask& task,
                           const std::optional<LabelCombination>& truth) const;

 private:
  double noise_rate_;
  std::uint64_t seed_;
};

/// Noise-free oracle: the final annotation is the truth.
AnnotationResult oracle_confirm(const AnnotationTask& task,
                                const std::optional<LabelCombination>& truth);

struct QueueCounts {
  std::size_t pending = 0;
  std::size_t confirmed = 0;
  std::size_t corrected = 0;

  std::size_t finalized() const noexcept { return confirmed + corrected; }
  std::size_t total() const noexcept { return pending + finalized(); }
};

/// Review queue for one iteration. Writes are serialized; reads may run
/// concurrently.
class AnnotationQueue {
 public:
  void enqueue(std::vector<AnnotationTask> tasks);

  /// First pending task in selection order.
  std::optional<AnnotationTask> next() const;
  std::optional<AnnotationTask> find(std::string_view sample_id) const;

  AnnotationResult submit(std::string_view sample_id, const LabelCombination& final,
                          AnnotationSource source = AnnotationSource::human);
  AnnotationResult submit(std::string_view sample_id, std::string_view final_text,
                          AnnotationSource source = AnnotationSource::human);

  QueueCounts counts() const;
  bool drained() const;
  std::vector<AnnotationTask> tasks() const;
  std::vector<AnnotationResult> results() const;

  /// Removes every task and returns the results, in selection order.
  /// Throws queue_not_empty while any task is pending.
  std::vector<AnnotationResult> take_results();

 private:
  mutable std::shared_mutex mutex_;
  std::vector<AnnotationTask> tasks_;
  std::vector<AnnotationResult> results_;  // aligned with tasks_, meaningful once finalized
};

}  // namespace tsal
