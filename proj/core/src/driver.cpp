#include "tsal/driver.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace tsal {

namespace {

constexpr std::uint64_t kTrainStream = 0x74726169;   // "trai"
constexpr std::uint64_t kSelectStream = 0x73656c65;  // "sele"
constexpr std::uint64_t kOracleStream = 0x6f726163;  // "orac"

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<TrainingExample> examples_for(const Dataset& data,
                                          const std::vector<Annotation>& labeled) {
  std::vector<TrainingExample> out;
  out.reserve(labeled.size());
  for (const auto& [id, combo] : labeled) out.push_back({data.at(id).features, combo});
  return out;
}

}  // namespace

std::string_view to_string(FinetuneScope s) {
  return s == FinetuneScope::batch ? "batch" : "cumulative";
}

FinetuneScope parse_finetune_scope(std::string_view name) {
  if (name == "batch") return FinetuneScope::batch;
  if (name == "cumulative") return FinetuneScope::cumulative;
  throw Error(ErrorCode::invalid_argument, "unknown finetune scope '" + std::string(name) + "'");
}

std::string_view to_string(StopReason s) {
  switch (s) {
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::pool_exhausted: return "pool_exhausted";
    case StopReason::target_reached: return "target_reached";
  }
  return "unknown";
}

void ALConfig::validate() const {
  if (k_max < 1) throw Error(ErrorCode::invalid_argument, "k_max must be >= 1");
  if (max_iterations < 1) throw Error(ErrorCode::invalid_argument, "max_iterations must be >= 1");
  if (!(threshold.threshold > 0.0 && threshold.threshold < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "threshold must lie in (0, 1)");
  }
  if (!(oracle_noise >= 0.0 && oracle_noise <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "oracle noise must lie in [0, 1]");
  }
  train.validate();
}

std::uint64_t iteration_seed(std::uint64_t base, int iteration, std::uint64_t stream) {
  return splitmix(splitmix(base ^ stream) + static_cast<std::uint64_t>(iteration));
}

ActiveLearner::ActiveLearner(const Dataset& data, ALConfig config)
    : ActiveLearner(data, config, [&] {
        TrainConfig init = config.train;
        init.seed = config.seed;
        return init_model(data.schema(), data.feature_dim(), init, config.head);
      }()) {}

ActiveLearner::ActiveLearner(const Dataset& data, ALConfig config, ClassifierModel model)
    : data_(&data), config_(std::move(config)), model_(std::move(model)) {
  config_.validate();
  if (!(model_.schema() == data.schema()) || model_.feature_dim() != data.feature_dim()) {
    throw Error(ErrorCode::shape_mismatch, "model does not match dataset schema or dimension");
  }
  auto pool_ids = data.ids(Split::pool);
  auto test_ids = data.ids(Split::test);
  if (pool_ids.empty()) throw Error(ErrorCode::invalid_argument, "dataset has no candidate pool");
  if (test_ids.empty()) throw Error(ErrorCode::invalid_argument, "dataset has no test split");
  partition_ = PoolPartition({pool_ids.begin(), pool_ids.end()}, {test_ids.begin(), test_ids.end()});
  initial_pool_ = pool_ids.size();
  test_ = data.subset(Split::test);
  table_ = CorrelationTable(data.schema().size());
}

std::optional<StopReason> ActiveLearner::stop_reason() const {
  if (!history_.empty() && config_.target_metric &&
      history_.back().eval.macro_accuracy >= *config_.target_metric) {
    return StopReason::target_reached;
  }
  if (partition_.candidate().empty()) return StopReason::pool_exhausted;
  if (history_.size() >= config_.max_iterations) return StopReason::max_iterations;
  return std::nullopt;
}

std::vector<AnnotationTask> ActiveLearner::begin_iteration() {
  if (in_progress()) throw Error(ErrorCode::queue_not_empty, "an iteration is already open");
  if (partition_.candidate().empty()) throw Error(ErrorCode::empty_input, "candidate pool is empty");
  const int t = iteration() + 1;

  std::vector<Sample> pool;
  pool.reserve(partition_.candidate().size());
  for (const auto& id : partition_.candidate()) pool.push_back(data_->at(id));
  StateMatrix state = predict_proba(model_, pool);
  state.iteration = t;

  const auto batch = select(state, data_->schema(), config_.strategy,
                            static_cast<int>(config_.k_max), iteration_seed(config_.seed, t, kSelectStream));

  std::unordered_map<std::string_view, std::size_t> row_of;
  for (std::size_t i = 0; i < state.ids.size(); ++i) row_of.emplace(state.ids[i], i);

  OpenBatch open;
  std::vector<AnnotationTask> tasks;
  for (std::size_t k = 0; k < batch.ids.size(); ++k) {
    const auto& p = state.rows[row_of.at(batch.ids[k])];
    AnnotationTask task;
    task.sample_id = batch.ids[k];
    task.prob = p;
    task.iteration = t;
    if (config_.validation) {
      auto outcome = refine_pseudo(p, table_, config_.threshold, config_.max_refine_distance);
      task.threshold_proposal = outcome.proposed;
      task.proposed = outcome.refined;
      task.distance = outcome.distance;
      task.validated = outcome.validated;
      if (outcome.changed) ++open.refined_changed;
    } else {
      task.threshold_proposal = assign_pseudo(p, config_.threshold);
      task.proposed = task.threshold_proposal;
    }
    open.ids.push_back(task.sample_id);
    open.scores.push_back(batch.scores[k]);
    open.threshold_proposals.push_back(task.threshold_proposal);
    open.proposals.push_back(task.proposed);
    tasks.push_back(std::move(task));
  }
  open_ = std::move(open);
  return tasks;
}

IterationReport ActiveLearner::complete_iteration(std::span<const AnnotationResult> results) {
  if (!in_progress()) throw Error(ErrorCode::invalid_argument, "no open iteration");
  const auto n = open_.ids.size();
  if (results.size() != n) {
    throw Error(ErrorCode::shape_mismatch, "expected " + std::to_string(n) + " annotations, got " +
                                               std::to_string(results.size()));
  }
  std::unordered_map<std::string_view, const AnnotationResult*> by_id;
  for (const auto& r : results) {
    if (!by_id.emplace(r.sample_id, &r).second) {
      throw Error(ErrorCode::duplicate_id, "duplicate annotation for '" + r.sample_id + "'");
    }
  }
  const int t = iteration() + 1;

  std::vector<Annotation> annotated;
  std::vector<LabelCombination> finals;
  annotated.reserve(n);
  std::size_t corrected = 0, threshold_wrong = 0;
  for (std::size_t k = 0; k < n; ++k) {
    auto it = by_id.find(open_.ids[k]);
    if (it == by_id.end()) throw Error(ErrorCode::unknown_id, "missing annotation for '" + open_.ids[k] + "'");
    const auto& final = it->second->final;
    if (final.size() != data_->schema().size()) {
      throw Error(ErrorCode::invalid_combination, "annotation has wrong length");
    }
    if (final != open_.proposals[k]) ++corrected;
    if (final != open_.threshold_proposals[k]) ++threshold_wrong;
    annotated.emplace_back(open_.ids[k], final);
    finals.push_back(final);
  }
  partition_ = commit_annotations(partition_, annotated);

  std::vector<Annotation> train_set;
  if (config_.finetune_scope == FinetuneScope::cumulative) {
    train_set.assign(partition_.labeled().begin(), partition_.labeled().end());
  } else {
    train_set = annotated;
  }
  const auto examples = examples_for(*data_, train_set);
  TrainConfig tc = config_.train;
  tc.seed = iteration_seed(config_.seed, t, kTrainStream);
  model_ = fine_tune(std::move(model_), examples, tc);

  // Table from this iteration's confirmed samples, profiled by the freshly
  // tuned model that will answer the next round's queries. The first build
  // initializes the table.
  std::vector<ProbabilityVector> profiles;
  profiles.reserve(n);
  for (const auto& id : open_.ids) profiles.push_back(model_.predict(data_->at(id).features));
  auto fresh = build_table(profiles, finals, t);
  table_ = update_table(table_, fresh.table);

  IterationReport rep;
  rep.iteration = t;
  rep.selected = open_.ids;
  rep.selected_scores = open_.scores;
  rep.corrected = corrected;
  rep.corrected_fraction = static_cast<double>(corrected) / static_cast<double>(n);
  rep.reviewed_fraction = 1.0;
  rep.threshold_corrected_fraction = static_cast<double>(threshold_wrong) / static_cast<double>(n);
  rep.refined_changed = open_.refined_changed;
  rep.labeled_count = partition_.labeled().size();
  rep.labeled_fraction = static_cast<double>(rep.labeled_count) / static_cast<double>(initial_pool_);
  rep.pool_remaining = partition_.candidate().size();
  rep.table_size = table_.size();
  rep.train_loss = dataset_loss(model_, examples);
  rep.eval = evaluate(model_, test_, config_.threshold);

  open_ = {};
  history_.push_back(rep);
  return rep;
}

IterationReport ActiveLearner::run_iteration(const SimulatedOracle& oracle) {
  const auto tasks = begin_iteration();
  std::vector<AnnotationResult> results;
  results.reserve(tasks.size());
  for (const auto& task : tasks) results.push_back(oracle.confirm(task, data_->at(task.sample_id).truth));
  return complete_iteration(results);
}

RunResult run(const Dataset& data, const ALConfig& config, ClassifierModel model) {
  ActiveLearner learner(data, config, std::move(model));
  const SimulatedOracle oracle(config.oracle_noise, iteration_seed(config.seed, 0, kOracleStream));
  while (!learner.finished()) learner.run_iteration(oracle);
  return {learner.history(), *learner.stop_reason(), learner.model()};
}

RunResult run(const Dataset& data, const ALConfig& config) {
  ActiveLearner learner(data, config);
  return run(data, config, learner.model());
}

BaselineResult run_baseline(const Dataset& data, const ALConfig& config, std::size_t epochs) {
  config.validate();
  TrainConfig tc = config.train;
  tc.seed = config.seed;
  auto model = init_model(data.schema(), data.feature_dim(), tc, config.head);
  const auto pool = data.subset(Split::pool);
  const auto test = data.subset(Split::test);
  if (pool.empty() || test.empty()) throw Error(ErrorCode::invalid_argument, "baseline needs pool and test splits");

  std::vector<TrainingExample> examples;
  examples.reserve(pool.size());
  for (const auto& s : pool) {
    if (!s.truth) throw Error(ErrorCode::missing_truth, "pool sample '" + s.id + "' has no truth");
    examples.push_back({s.features, *s.truth});
  }
  tc.epochs = epochs;
  tc.seed = iteration_seed(config.seed, 0, kTrainStream);
  model = train(std::move(model), examples, tc);

  IterationReport rep;
  rep.iteration = 0;
  rep.labeled_count = pool.size();
  rep.labeled_fraction = 1.0;
  rep.reviewed_fraction = 1.0;
  rep.train_loss = dataset_loss(model, examples);
  rep.eval = evaluate(model, test, config.threshold);
  return {std::move(rep), std::move(model)};
}

const IterationReport* first_reaching(std::span<const IterationReport> series, double band) {
  for (const auto& r : series) {
    if (r.eval.macro_accuracy >= band) return &r;
  }
  return nullptr;
}

}  // namespace tsal
