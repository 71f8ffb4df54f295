#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "tsal/classifier.hpp"
#include "tsal/label_stream.hpp"
#include "tsal/types.hpp"

namespace tsal {

struct LabelMetrics {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  double accuracy = 0.0;
  double sensitivity = 0.0;  // reported as 0 when undefined
  double specificity = 0.0;  // reported as 0 when undefined
  double auc = 0.0;          // reported as 0 when undefined
  bool sensitivity_defined = false;
  bool specificity_defined = false;
  bool auc_defined = false;
};

struct Evaluation {
  std::vector<LabelMetrics> labels;
  double macro_accuracy = 0.0;
};

/// Rates from a confusion matrix; sensitivity/specificity are flagged
/// undefined (and set to 0) when their denominator is empty.
LabelMetrics confusion_metrics(std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

/// ROC curve through every distinct score threshold, from (0,0) to (1,1).
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);
double auc_trapezoid(std::span<const RocPoint> curve);

/// Probability that a random positive outranks a random negative, ties
/// counting one half. Computed from mid-ranks; nullopt for single-class input.
std::optional<double> roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Thresholded per-label metrics on samples with ground truth.
Evaluation evaluate(const ClassifierModel& model, std::span<const Sample> test,
                    const ThresholdRule& rule = {});

}  // namespace tsal
