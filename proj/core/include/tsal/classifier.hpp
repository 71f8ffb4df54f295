#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tsal/types.hpp"

namespace tsal {

/// Mini-batch SGD settings. Defaults follow the reference training recipe
/// (lr 2e-3, momentum 0.9, batch 32).
struct TrainConfig {
  double learning_rate = 2e-3;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  std::size_t epochs = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Shape of the model around the trainable head.
struct HeadConfig {
  std::size_t hidden_units = 0;    // 0: single linear layer
  std::size_t projection_dim = 0;  // 0: identity frozen stage
};

/// Fixed feature transform that plays the role of the pre-trained backbone.
/// Never touched by training.
struct FrozenStage {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  std::vector<double> projection;  // output_dim x input_dim, row-major; empty means identity

  bool is_identity() const noexcept { return projection.empty(); }
  std::vector<double> apply(std::span<const double> x) const;
  bool operator==(const FrozenStage&) const = default;
};

struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;  // outputs x inputs, row-major
  std::vector<double> bias;

  bool operator==(const DenseLayer&) const = default;
};

/// Multi-label classifier: frozen stage, then up to three dense layers with
/// tanh between them, ending in one logit per label.
class ClassifierModel {
 public:
  ClassifierModel() = default;
  ClassifierModel(LabelSchema schema, FrozenStage frozen, std::vector<DenseLayer> head);

  const LabelSchema& schema() const noexcept { return schema_; }
  const FrozenStage& frozen() const noexcept { return frozen_; }
  const std::vector<DenseLayer>& head() const noexcept { return head_; }
  std::vector<DenseLayer>& head() noexcept { return head_; }
  std::size_t feature_dim() const noexcept { return frozen_.input_dim; }

  std::vector<double> logits(std::span<const double> features) const;
  /// Logits for input that has already passed the frozen stage.
  std::vector<double> head_logits(std::span<const double> embedded) const;
  ProbabilityVector predict(std::span<const double> features) const;

  std::size_t head_parameter_count() const noexcept;
  std::vector<double> head_parameters() const;
  void set_head_parameters(std::span<const double> flat);

  bool operator==(const ClassifierModel&) const = default;

 private:
  LabelSchema schema_;
  FrozenStage frozen_;
  std::vector<DenseLayer> head_;
};

/// Non-owning view of one training pair.
struct TrainingExample {
  std::span<const double> features;
  LabelCombination target;
};

ClassifierModel init_model(const LabelSchema& schema, std::size_t feature_dim,
                           const TrainConfig& config, const HeadConfig& head = {});

/// Mean over the batch of the per-label summed sigmoid cross-entropy.
/// Probabilities are clamped to [1e-12, 1 - 1e-12] before the log.
double sigmoid_ce_loss(std::span<const std::vector<double>> logits,
                       std::span<const LabelCombination> targets);

inline constexpr double kProbClamp = 1e-12;

double sigmoid(double x) noexcept;

/// Loss of the model over a set of examples (same reduction as sigmoid_ce_loss).
double dataset_loss(const ClassifierModel& model, std::span<const TrainingExample> examples);

/// Analytic gradient of dataset_loss with respect to the flattened head
/// parameters (layer by layer, weights then bias).
std::vector<double> head_gradient(const ClassifierModel& model,
                                  std::span<const TrainingExample> examples);

ClassifierModel train(ClassifierModel model, std::span<const TrainingExample> labeled,
                      const TrainConfig& config);

/// Same as train; additionally verifies the frozen stage is byte-identical afterwards.
ClassifierModel fine_tune(ClassifierModel model, std::span<const TrainingExample> batch,
                          const TrainConfig& config);

StateMatrix predict_proba(const ClassifierModel& model, std::span<const Sample> samples);

/// Max relative error between the analytic head gradient and central finite
/// differences (step 1e-5). Relative error is |a - n| / max(|a| + |n|, 1e-6).
double grad_check(const ClassifierModel& model, std::span<const TrainingExample> batch);

/// Checkpoints are JSON documents; doubles are written in shortest
/// round-trip form so load(save(m)) == m bit for bit.
std::string checkpoint_to_string(const ClassifierModel& model);
ClassifierModel checkpoint_from_string(const std::string& text);
void save_checkpoint(const ClassifierModel& model, const std::filesystem::path& path);
ClassifierModel load_checkpoint(const std::filesystem::path& path);

}  // namespace tsal
