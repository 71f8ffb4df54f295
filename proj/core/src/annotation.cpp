#include "tsal/annotation.hpp"

#include <algorithm>
#include <random>

namespace tsal {

namespace {

// FNV-1a, used to derive a per-task noise stream.
std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string_view to_string(TaskStatus s) {
  switch (s) {
    case TaskStatus::pending: return "pending";
    case TaskStatus::confirmed: return "confirmed";
    case TaskStatus::corrected: return "corrected";
  }
  return "unknown";
}

std::string_view to_string(AnnotationSource s) {
  return s == AnnotationSource::human ? "human" : "simulated";
}

SimulatedOracle::SimulatedOracle(double noise_rate, std::uint64_t seed)
    : noise_rate_(noise_rate), seed_(seed) {
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "oracle noise rate must lie in [0, 1]");
  }
}

AnnotationResult SimulatedOracle::confirm(const AnnotationTask& task,
                                          const std::optional<LabelCombination>& truth) const {
  if (!truth) {
    throw Error(ErrorCode::missing_truth, "no ground truth for sample '" + task.sample_id + "'");
  }
  LabelCombination final = *truth;
  if (noise_rate_ > 0.0) {
    std::uint64_t h = fnv1a(task.sample_id, seed_ ^ 0x9e3779b97f4a7c15ULL);
    h = fnv1a(std::to_string(task.iteration), h);
    std::mt19937_64 rng(h);
    std::bernoulli_distribution flip(noise_rate_);
    for (std::size_t i = 0; i < final.size(); ++i) {
      if (flip(rng)) final.set(i, !final[i]);
    }
  }
  const bool changed = final != task.proposed;
  return {task.sample_id, std::move(final), changed, AnnotationSource::simulated};
}

AnnotationResult oracle_confirm(const AnnotationTask& task,
                                const std::optional<LabelCombination>& truth) {
  return SimulatedOracle{}.confirm(task, truth);
}

void AnnotationQueue::enqueue(std::vector<AnnotationTask> tasks) {
  std::unique_lock lock(mutex_);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& id = tasks[i].sample_id;
    const bool dup_existing = std::any_of(tasks_.begin(), tasks_.end(), [&](const auto& t) {
      return t.sample_id == id && t.status == TaskStatus::pending;
    });
    const bool dup_batch = std::any_of(tasks.begin(), tasks.begin() + static_cast<std::ptrdiff_t>(i),
                                       [&](const auto& t) { return t.sample_id == id; });
    if (dup_existing || dup_batch) {
      throw Error(ErrorCode::duplicate_id, "task for '" + id + "' is already pending");
    }
  }
  for (auto& t : tasks) {
    t.status = TaskStatus::pending;
    results_.push_back({t.sample_id, {}, false, AnnotationSource::simulated});
    tasks_.push_back(std::move(t));
  }
}

std::optional<AnnotationTask> AnnotationQueue::next() const {
  std::shared_lock lock(mutex_);
  for (const auto& t : tasks_) {
    if (t.status == TaskStatus::pending) return t;
  }
  return std::nullopt;
}

std::optional<AnnotationTask> AnnotationQueue::find(std::string_view sample_id) const {
  std::shared_lock lock(mutex_);
  for (const auto& t : tasks_) {
    if (t.sample_id == sample_id) return t;
  }
  return std::nullopt;
}

AnnotationResult AnnotationQueue::submit(std::string_view sample_id, const LabelCombination& final,
                                         AnnotationSource source) {
  std::unique_lock lock(mutex_);
  auto it = std::find_if(tasks_.begin(), tasks_.end(),
                         [&](const auto& t) { return t.sample_id == sample_id; });
  if (it == tasks_.end()) {
    throw Error(ErrorCode::unknown_id, "no task for '" + std::string(sample_id) + "'");
  }
  if (it->status != TaskStatus::pending) {
    throw Error(ErrorCode::already_finalized, "task '" + std::string(sample_id) + "' is already finalized");
  }
  if (final.size() != it->proposed.size()) {
    throw Error(ErrorCode::invalid_combination, "combination has the wrong length");
  }
  const bool changed = final != it->proposed;
  it->status = changed ? TaskStatus::corrected : TaskStatus::confirmed;
  auto& r = results_[static_cast<std::size_t>(it - tasks_.begin())];
  r = {it->sample_id, final, changed, source};
  return r;
}

AnnotationResult AnnotationQueue::submit(std::string_view sample_id, std::string_view final_text,
                                         AnnotationSource source) {
  return submit(sample_id, decode_combination(final_text), source);
}

QueueCounts AnnotationQueue::counts() const {
  std::shared_lock lock(mutex_);
  QueueCounts c;
  for (const auto& t : tasks_) {
    switch (t.status) {
      case TaskStatus::pending: ++c.pending; break;
      case TaskStatus::confirmed: ++c.confirmed; break;
      case TaskStatus::corrected: ++c.corrected; break;
    }
  }
  return c;
}

bool AnnotationQueue::drained() const { return counts().pending == 0; }

std::vector<AnnotationTask> AnnotationQueue::tasks() const {
  std::shared_lock lock(mutex_);
  return tasks_;
}

std::vector<AnnotationResult> AnnotationQueue::results() const {
  std::shared_lock lock(mutex_);
  std::vector<AnnotationResult> out;
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    if (tasks_[i].status != TaskStatus::pending) out.push_back(results_[i]);
  }
  return out;
}

std::vector<AnnotationResult> AnnotationQueue::take_results() {
  std::unique_lock lock(mutex_);
  for (const auto& t : tasks_) {
    if (t.status == TaskStatus::pending) {
      throw Error(ErrorCode::queue_not_empty, "annotation queue still has pending tasks");
    }
  }
  auto out = std::move(results_);
  tasks_.clear();
  results_.clear();
  return out;
}

}  // namespace tsal
