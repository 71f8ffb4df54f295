#include "tsal/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

namespace tsal {

namespace {

using json = nlohmann::json;

struct ForwardPass {
  // activations[0] is the embedded input; activations[l + 1] is the output of
  // layer l (tanh for hidden layers, raw logits for the last one).
  std::vector<std::vector<double>> activations;
};

ForwardPass forward(const std::vector<DenseLayer>& head, std::span<const double> embedded) {
  ForwardPass pass;
  pass.activations.reserve(head.size() + 1);
  pass.activations.emplace_back(embedded.begin(), embedded.end());
  for (std::size_t l = 0; l < head.size(); ++l) {
    const auto& layer = head[l];
    const auto& in = pass.activations.back();
    std::vector<double> out(layer.outputs);
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      const double* w = layer.weights.data() + o * layer.inputs;
      double acc = layer.bias[o];
      for (std::size_t i = 0; i < layer.inputs; ++i) acc += w[i] * in[i];
      out[o] = (l + 1 < head.size()) ? std::tanh(acc) : acc;
    }
    pass.activations.push_back(std::move(out));
  }
  return pass;
}

double clamped(double p) noexcept { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

// Loss of a single example, summed over labels.
double example_loss(std::span<const double> logits, const LabelCombination& target) {
  double loss = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    const double p = clamped(sigmoid(logits[j]));
    loss -= target[j] ? std::log(p) : std::log(1.0 - p);
  }
  return loss;
}

std::vector<DenseLayer> zeros_like(const std::vector<DenseLayer>& head) {
  std::vector<DenseLayer> out = head;
  for (auto& l : out) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  return out;
}

// Accumulates d(sum of example losses)/d(head) into grad; returns the summed loss.
double accumulate_gradient(const std::vector<DenseLayer>& head, std::span<const double> embedded,
                           const LabelCombination& target, std::vector<DenseLayer>& grad) {
  const ForwardPass pass = forward(head, embedded);
  const auto& logits = pass.activations.back();
  std::vector<double> delta(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) {
    const double p = sigmoid(logits[j]);
    // The clamp is flat outside its range, so its derivative vanishes there.
    const bool inside = p > kProbClamp && p < 1.0 - kProbClamp;
    delta[j] = inside ? p - (target[j] ? 1.0 : 0.0) : 0.0;
  }
  for (std::size_t l = head.size(); l-- > 0;) {
    const auto& layer = head[l];
    auto& g = grad[l];
    const auto& in = pass.activations[l];
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      double* gw = g.weights.data() + o * layer.inputs;
      for (std::size_t i = 0; i < layer.inputs; ++i) gw[i] += delta[o] * in[i];
      g.bias[o] += delta[o];
    }
    if (l == 0) break;
    std::vector<double> prev(layer.inputs, 0.0);
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      const double* w = layer.weights.data() + o * layer.inputs;
      for (std::size_t i = 0; i < layer.inputs; ++i) prev[i] += w[i] * delta[o];
    }
    for (std::size_t i = 0; i < layer.inputs; ++i) prev[i] *= 1.0 - in[i] * in[i];
    delta = std::move(prev);
  }
  return example_loss(logits, target);
}

void check_examples(const ClassifierModel& model, std::span<const TrainingExample> examples) {
  if (examples.empty()) throw Error(ErrorCode::empty_input, "no training examples");
  for (const auto& ex : examples) {
    if (ex.features.size() != model.feature_dim()) {
      throw Error(ErrorCode::shape_mismatch, "example feature dimension does not match model");
    }
    if (ex.target.size() != model.schema().size()) {
      throw Error(ErrorCode::shape_mismatch, "target length does not match label count");
    }
  }
}

std::vector<std::vector<double>> embed_all(const ClassifierModel& model,
                                           std::span<const TrainingExample> examples) {
  std::vector<std::vector<double>> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(model.frozen().apply(ex.features));
  return out;
}

DenseLayer make_layer(std::size_t inputs, std::size_t outputs, std::mt19937_64& rng) {
  DenseLayer layer{inputs, outputs, std::vector<double>(inputs * outputs), std::vector<double>(outputs)};
  const double bound = 1.0 / std::sqrt(static_cast<double>(inputs));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& w : layer.weights) w = dist(rng);
  for (auto& b : layer.bias) b = dist(rng);
  return layer;
}

json layer_to_json(const DenseLayer& l) {
  return {{"inputs", l.inputs}, {"outputs", l.outputs}, {"weights", l.weights}, {"bias", l.bias}};
}

DenseLayer layer_from_json(const json& j) {
  DenseLayer l;
  l.inputs = j.at("inputs").get<std::size_t>();
  l.outputs = j.at("outputs").get<std::size_t>();
  l.weights = j.at("weights").get<std::vector<double>>();
  l.bias = j.at("bias").get<std::vector<double>>();
  if (l.weights.size() != l.inputs * l.outputs || l.bias.size() != l.outputs) {
    throw Error(ErrorCode::parse_error, "checkpoint layer has inconsistent shape");
  }
  return l;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::invalid_argument, "learning_rate must be positive");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "momentum must lie in [0, 1)");
  }
  if (batch_size < 1) throw Error(ErrorCode::invalid_argument, "batch_size must be >= 1");
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> FrozenStage::apply(std::span<const double> x) const {
  if (x.size() != input_dim) {
    throw Error(ErrorCode::shape_mismatch, "feature dimension " + std::to_string(x.size()) +
                                               " does not match model input " +
                                               std::to_string(input_dim));
  }
  if (is_identity()) return {x.begin(), x.end()};
  std::vector<double> out(output_dim, 0.0);
  for (std::size_t o = 0; o < output_dim; ++o) {
    const double* row = projection.data() + o * input_dim;
    for (std::size_t i = 0; i < input_dim; ++i) out[o] += row[i] * x[i];
  }
  return out;
}

ClassifierModel::ClassifierModel(LabelSchema schema, FrozenStage frozen, std::vector<DenseLayer> head)
    : schema_(std::move(schema)), frozen_(std::move(frozen)), head_(std::move(head)) {
  if (head_.empty() || head_.size() > 3) {
    throw Error(ErrorCode::invalid_argument, "head must have between one and three layers");
  }
  std::size_t width = frozen_.output_dim;
  for (const auto& l : head_) {
    if (l.inputs != width || l.weights.size() != l.inputs * l.outputs || l.bias.size() != l.outputs) {
      throw Error(ErrorCode::shape_mismatch, "head layer shapes are inconsistent");
    }
    width = l.outputs;
  }
  if (width != schema_.size()) {
    throw Error(ErrorCode::shape_mismatch, "head output must equal the label count");
  }
  if (!frozen_.is_identity() && frozen_.projection.size() != frozen_.input_dim * frozen_.output_dim) {
    throw Error(ErrorCode::shape_mismatch, "projection has wrong size");
  }
}

std::vector<double> ClassifierModel::head_logits(std::span<const double> embedded) const {
  return std::move(forward(head_, embedded).activations.back());
}

std::vector<double> ClassifierModel::logits(std::span<const double> features) const {
  return head_logits(frozen_.apply(features));
}

ProbabilityVector ClassifierModel::predict(std::span<const double> features) const {
  auto z = logits(features);
  for (auto& v : z) v = sigmoid(v);
  return ProbabilityVector(std::move(z));
}

std::size_t ClassifierModel::head_parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : head_) n += l.weights.size() + l.bias.size();
  return n;
}

std::vector<double> ClassifierModel::head_parameters() const {
  std::vector<double> flat;
  flat.reserve(head_parameter_count());
  for (const auto& l : head_) {
    flat.insert(flat.end(), l.weights.begin(), l.weights.end());
    flat.insert(flat.end(), l.bias.begin(), l.bias.end());
  }
  return flat;
}

void ClassifierModel::set_head_parameters(std::span<const double> flat) {
  if (flat.size() != head_parameter_count()) {
    throw Error(ErrorCode::shape_mismatch, "parameter vector has wrong length");
  }
  auto it = flat.begin();
  for (auto& l : head_) {
    std::copy_n(it, l.weights.size(), l.weights.begin());
    it += static_cast<std::ptrdiff_t>(l.weights.size());
    std::copy_n(it, l.bias.size(), l.bias.begin());
    it += static_cast<std::ptrdiff_t>(l.bias.size());
  }
}

ClassifierModel init_model(const LabelSchema& schema, std::size_t feature_dim,
                           const TrainConfig& config, const HeadConfig& head) {
  if (feature_dim < 1) throw Error(ErrorCode::invalid_argument, "feature_dim must be >= 1");
  config.validate();
  std::mt19937_64 rng(config.seed);

  FrozenStage frozen{feature_dim, feature_dim, {}};
  if (head.projection_dim > 0) {
    frozen.output_dim = head.projection_dim;
    frozen.projection.resize(head.projection_dim * feature_dim);
    std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(feature_dim)));
    for (auto& w : frozen.projection) w = dist(rng);
  }

  std::vector<DenseLayer> layers;
  std::size_t width = frozen.output_dim;
  if (head.hidden_units > 0) {
    layers.push_back(make_layer(width, head.hidden_units, rng));
    width = head.hidden_units;
  }
  layers.push_back(make_layer(width, schema.size(), rng));
  return ClassifierModel(schema, std::move(frozen), std::move(layers));
}

double sigmoid_ce_loss(std::span<const std::vector<double>> logits,
                       std::span<const LabelCombination> targets) {
  if (logits.empty()) throw Error(ErrorCode::empty_input, "empty batch");
  if (logits.size() != targets.size()) {
    throw Error(ErrorCode::shape_mismatch, "logits and targets differ in batch size");
  }
  double total = 0.0;
  for (std::size_t n = 0; n < logits.size(); ++n) {
    if (logits[n].size() != targets[n].size()) {
      throw Error(ErrorCode::shape_mismatch, "logit vector and target differ in length");
    }
    total += example_loss(logits[n], targets[n]);
  }
  return total / static_cast<double>(logits.size());
}

double dataset_loss(const ClassifierModel& model, std::span<const TrainingExample> examples) {
  check_examples(model, examples);
  double total = 0.0;
  for (const auto& ex : examples) total += example_loss(model.logits(ex.features), ex.target);
  return total / static_cast<double>(examples.size());
}

std::vector<double> head_gradient(const ClassifierModel& model,
                                  std::span<const TrainingExample> examples) {
  check_examples(model, examples);
  auto grad = zeros_like(model.head());
  for (const auto& ex : examples) {
    accumulate_gradient(model.head(), model.frozen().apply(ex.features), ex.target, grad);
  }
  ClassifierModel holder = model;
  holder.head() = std::move(grad);
  auto flat = holder.head_parameters();
  const double inv = 1.0 / static_cast<double>(examples.size());
  for (auto& g : flat) g *= inv;
  return flat;
}

ClassifierModel train(ClassifierModel model, std::span<const TrainingExample> labeled,
                      const TrainConfig& config) {
  config.validate();
  if (config.epochs == 0) return model;
  check_examples(model, labeled);

  const auto embedded = embed_all(model, labeled);
  std::vector<std::size_t> order(labeled.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed);

  auto velocity = zeros_like(model.head());
  auto& head = model.head();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      auto grad = zeros_like(head);
      double loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        loss += accumulate_gradient(head, embedded[order[k]], labeled[order[k]].target, grad);
      }
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::divergence, "non-finite training loss; learning rate too large?");
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t l = 0; l < head.size(); ++l) {
        auto step = [&](std::vector<double>& w, std::vector<double>& v, const std::vector<double>& g) {
          for (std::size_t i = 0; i < w.size(); ++i) {
            v[i] = config.momentum * v[i] - config.learning_rate * g[i] * scale;
            w[i] += v[i];
          }
        };
        step(head[l].weights, velocity[l].weights, grad[l].weights);
        step(head[l].bias, velocity[l].bias, grad[l].bias);
      }
    }
  }
  for (const auto& l : head) {
    for (double w : l.weights) {
      if (!std::isfinite(w)) throw Error(ErrorCode::divergence, "non-finite parameter after training");
    }
  }
  return model;
}

ClassifierModel fine_tune(ClassifierModel model, std::span<const TrainingExample> batch,
                          const TrainConfig& config) {
  const FrozenStage before = model.frozen();
  ClassifierModel tuned = train(std::move(model), batch, config);
  const auto& after = tuned.frozen();
  const bool same = before.input_dim == after.input_dim && before.output_dim == after.output_dim &&
                    before.projection.size() == after.projection.size() &&
                    std::memcmp(before.projection.data(), after.projection.data(),
                                before.projection.size() * sizeof(double)) == 0;
  if (!same) throw Error(ErrorCode::invalid_argument, "frozen stage changed during fine-tuning");
  return tuned;
}

StateMatrix predict_proba(const ClassifierModel& model, std::span<const Sample> samples) {
  StateMatrix state;
  state.ids.reserve(samples.size());
  state.rows.reserve(samples.size());
  for (const auto& s : samples) {
    state.ids.push_back(s.id);
    state.rows.push_back(model.predict(s.features));
  }
  return state;
}

double grad_check(const ClassifierModel& model, std::span<const TrainingExample> batch) {
  constexpr double kStep = 1e-5;
  const auto analytic = head_gradient(model, batch);
  ClassifierModel probe = model;
  auto params = model.head_parameters();
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + kStep;
    probe.set_head_parameters(params);
    const double up = dataset_loss(probe, batch);
    params[i] = saved - kStep;
    probe.set_head_parameters(params);
    const double down = dataset_loss(probe, batch);
    params[i] = saved;
    const double numeric = (up - down) / (2.0 * kStep);
    const double denom = std::max(std::abs(analytic[i]) + std::abs(numeric), 1e-6);
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

std::string checkpoint_to_string(const ClassifierModel& model) {
  json j;
  j["format"] = "tsal-checkpoint";
  j["version"] = 1;
  j["labels"] = model.schema().labels();
  j["exclusive_index"] = model.schema().exclusive_index();
  j["frozen"] = {{"input_dim", model.frozen().input_dim},
                 {"output_dim", model.frozen().output_dim},
                 {"projection", model.frozen().projection}};
  json layers = json::array();
  for (const auto& l : model.head()) layers.push_back(layer_to_json(l));
  j["head"] = std::move(layers);
  return j.dump();
}

ClassifierModel checkpoint_from_string(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format") != "tsal-checkpoint" || j.at("version") != 1) {
      throw Error(ErrorCode::parse_error, "not a version 1 checkpoint");
    }
    LabelSchema schema(j.at("labels").get<std::vector<std::string>>(),
                       j.at("exclusive_index").get<std::size_t>());
    const auto& fz = j.at("frozen");
    FrozenStage frozen{fz.at("input_dim").get<std::size_t>(), fz.at("output_dim").get<std::size_t>(),
                       fz.at("projection").get<std::vector<double>>()};
    std::vector<DenseLayer> head;
    for (const auto& l : j.at("head")) head.push_back(layer_from_json(l));
    return ClassifierModel(std::move(schema), std::move(frozen), std::move(head));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const ClassifierModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  out << checkpoint_to_string(model) << '\n';
}

ClassifierModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str());
}

}  // namespace tsal
