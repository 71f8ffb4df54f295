#include "tsal/metrics.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <optional>

namespace tsal {

LabelMetrics confusion_metrics(std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn) {
  LabelMetrics m{tp, tn, fp, fn};
  const std::size_t total = tp + tn + fp + fn;
  m.accuracy = total ? static_cast<double>(tp + tn) / static_cast<double>(total) : 0.0;
  m.sensitivity_defined = tp + fn > 0;
  m.sensitivity = m.sensitivity_defined ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.specificity_defined = tn + fp > 0;
  m.specificity = m.specificity_defined ? static_cast<double>(tn) / static_cast<double>(tn + fp) : 0.0;
  return m;
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::shape_mismatch, "scores and labels differ in length");
  }
  const auto pos = static_cast<double>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
  const auto neg = static_cast<double>(labels.size()) - pos;
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<RocPoint> curve{{0.0, 0.0}};
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i) {
      (labels[order[i]] ? tp : fp) += 1.0;
    }
    curve.push_back({neg > 0 ? fp / neg : 0.0, pos > 0 ? tp / pos : 0.0});
  }
  return curve;
}

double auc_trapezoid(std::span<const RocPoint> curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].tpr + curve[i - 1].tpr) * 0.5;
  }
  return area;
}

std::optional<double> roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::shape_mismatch, "scores and labels differ in length");
  }
  const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) return std::nullopt;

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the mid-rank keeps every quantity an integer.
  std::uint64_t twice_rank_sum = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const std::uint64_t twice_mid = i + 1 + j;  // (i+1) + j = 2 * mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) twice_rank_sum += twice_mid;
    }
    i = j;
  }
  const std::uint64_t twice_u = twice_rank_sum - static_cast<std::uint64_t>(pos) * (pos + 1);
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

Evaluation evaluate(const ClassifierModel& model, std::span<const Sample> test, const ThresholdRule& rule) {
  if (test.empty()) throw Error(ErrorCode::empty_input, "empty test set");
  const std::size_t m = model.schema().size();
  std::vector<std::vector<double>> scores(m);
  std::vector<std::vector<std::uint8_t>> truths(m);
  std::vector<std::array<std::size_t, 4>> counts(m, {0, 0, 0, 0});  // tp tn fp fn
  for (const auto& s : test) {
    if (!s.truth) throw Error(ErrorCode::missing_truth, "test sample '" + s.id + "' has no truth");
    const auto p = model.predict(s.features);
    const auto pred = assign_pseudo(p, rule);
    for (std::size_t j = 0; j < m; ++j) {
      const bool y = (*s.truth)[j];
      const bool yhat = pred[j];
      scores[j].push_back(p[j]);
      truths[j].push_back(y ? 1 : 0);
      ++counts[j][y ? (yhat ? 0 : 3) : (yhat ? 2 : 1)];
    }
  }
  Evaluation ev;
  double acc_sum = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    auto lm = confusion_metrics(counts[j][0], counts[j][1], counts[j][2], counts[j][3]);
    if (auto auc = roc_auc(scores[j], truths[j])) {
      lm.auc = *auc;
      lm.auc_defined = true;
    }
    acc_sum += lm.accuracy;
    ev.labels.push_back(lm);
  }
  ev.macro_accuracy = acc_sum / static_cast<double>(m);
  return ev;
}

}  // namespace tsal
