#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsal/annotation.hpp"
#include "tsal/classifier.hpp"
#include "tsal/dataset.hpp"
#include "tsal/label_stream.hpp"
#include "tsal/metrics.hpp"
#include "tsal/selection.hpp"
#include "tsal/types.hpp"

namespace tsal {

enum class FinetuneScope { batch, cumulative };
enum class StopReason { max_iterations, pool_exhausted, target_reached };

std::string_view to_string(FinetuneScope s);
FinetuneScope parse_finetune_scope(std::string_view name);
std::string_view to_string(StopReason s);

struct ALConfig {
  std::size_t k_max = 25;
  std::size_t max_iterations = 20;
  SelectionStrategy strategy{};
  ThresholdRule threshold{};
  bool validation = true;  // correlation-table refinement of pseudo labels
  std::optional<double> max_refine_distance;
  std::optional<double> target_metric;  // early stop on macro-accuracy (fraction)
  std::uint64_t seed = 42;
  FinetuneScope finetune_scope = FinetuneScope::cumulative;
  TrainConfig train{};  // seed is derived per iteration from `seed`
  HeadConfig head{};
  double oracle_noise = 0.0;

  void validate() const;
};

struct IterationReport {
  int iteration = 0;
  std::vector<std::string> selected;
  std::vector<double> selected_scores;
  std::size_t corrected = 0;
  double corrected_fraction = 0.0;
  double reviewed_fraction = 0.0;
  // Fraction the raw threshold proposal would have needed corrected; equal
  // to corrected_fraction when validation is off.
  double threshold_corrected_fraction = 0.0;
  std::size_t refined_changed = 0;  // proposals altered by the correlation table
  std::size_t labeled_count = 0;
  double labeled_fraction = 0.0;
  std::size_t pool_remaining = 0;
  std::size_t table_size = 0;
  double train_loss = 0.0;
  Evaluation eval;
};

/// Seed for iteration-local randomness (shuffles, random selection).
std::uint64_t iteration_seed(std::uint64_t base, int iteration, std::uint64_t stream);

/// The two-stream loop as an explicit state machine so a human-driven
/// service and the headless runner share one code path:
///   begin_iteration()    state matrix -> selection -> pseudo labels -> tasks
///   complete_iteration() commit -> fine-tune -> table build/update -> evaluate
class ActiveLearner {
 public:
  ActiveLearner(const Dataset& data, ALConfig config);
  ActiveLearner(const Dataset& data, ALConfig config, ClassifierModel model);

  const ALConfig& config() const noexcept { return config_; }
  const Dataset& dataset() const noexcept { return *data_; }
  const ClassifierModel& model() const noexcept { return model_; }
  const PoolPartition& partition() const noexcept { return partition_; }
  const CorrelationTable& table() const noexcept { return table_; }
  const std::vector<IterationReport>& history() const noexcept { return history_; }
  std::size_t initial_pool_size() const noexcept { return initial_pool_; }

  /// Iterations completed so far.
  int iteration() const noexcept { return static_cast<int>(history_.size()); }
  bool in_progress() const noexcept { return !open_.ids.empty(); }
  std::optional<StopReason> stop_reason() const;
  bool finished() const { return stop_reason().has_value(); }

  /// Selects the next batch and returns its review tasks, defaults filled in.
  std::vector<AnnotationTask> begin_iteration();

  /// Consumes one final annotation per open task (any order).
  IterationReport complete_iteration(std::span<const AnnotationResult> results);

  /// begin + simulated review + complete.
  IterationReport run_iteration(const SimulatedOracle& oracle);

 private:
  struct OpenBatch {
    std::vector<std::string> ids;
    std::vector<double> scores;
    std::vector<LabelCombination> threshold_proposals;
    std::vector<LabelCombination> proposals;
    std::size_t refined_changed = 0;
  };

  const Dataset* data_;
  ALConfig config_;
  ClassifierModel model_;
  PoolPartition partition_;
  CorrelationTable table_;
  std::vector<Sample> test_;
  std::size_t initial_pool_ = 0;
  std::vector<IterationReport> history_;
  OpenBatch open_;
};

struct RunResult {
  std::vector<IterationReport> series;
  StopReason stop = StopReason::max_iterations;
  ClassifierModel model;
};

/// Headless loop with a simulated oracle until a stop condition holds.
RunResult run(const Dataset& data, const ALConfig& config);
RunResult run(const Dataset& data, const ALConfig& config, ClassifierModel model);

/// Trains on the whole labeled pool at once and evaluates on the test split.
struct BaselineResult {
  IterationReport report;
  ClassifierModel model;
};
BaselineResult run_baseline(const Dataset& data, const ALConfig& config, std::size_t epochs);

/// First report (in iteration order) whose macro-accuracy reaches `band`.
const IterationReport* first_reaching(std::span<const IterationReport> series, double band);

}  // namespace tsal
