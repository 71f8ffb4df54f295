#include "tsal/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json_codec.hpp"

namespace tsal {

using json = nlohmann::json;

namespace detail {

json to_json(const ALConfig& c) {
  json j = {{"k_max", c.k_max},
            {"max_iterations", c.max_iterations},
            {"strategy", to_string(c.strategy.kind)},
            {"threshold", c.threshold.threshold},
            {"strict_threshold", c.threshold.strict},
            {"validation", c.validation},
            {"seed", c.seed},
            {"finetune_scope", to_string(c.finetune_scope)},
            {"learning_rate", c.train.learning_rate},
            {"momentum", c.train.momentum},
            {"batch_size", c.train.batch_size},
            {"epochs", c.train.epochs},
            {"hidden_units", c.head.hidden_units},
            {"projection_dim", c.head.projection_dim},
            {"oracle_noise", c.oracle_noise}};
  j["max_refine_distance"] = c.max_refine_distance ? json(*c.max_refine_distance) : json(nullptr);
  j["target_metric"] = c.target_metric ? json(*c.target_metric) : json(nullptr);
  return j;
}

json to_json(const Evaluation& eval, const LabelSchema& schema) {
  json labels = json::array();
  for (std::size_t j = 0; j < eval.labels.size(); ++j) {
    const auto& m = eval.labels[j];
    labels.push_back({{"label", schema.name(j)},
                      {"tp", m.tp},
                      {"tn", m.tn},
                      {"fp", m.fp},
                      {"fn", m.fn},
                      {"accuracy", m.accuracy},
                      {"sensitivity", m.sensitivity},
                      {"sensitivity_defined", m.sensitivity_defined},
                      {"specificity", m.specificity},
                      {"specificity_defined", m.specificity_defined},
                      {"auc", m.auc},
                      {"auc_defined", m.auc_defined}});
  }
  return {{"macro_accuracy", eval.macro_accuracy}, {"labels", std::move(labels)}};
}

json to_json(const IterationReport& r, const LabelSchema& schema) {
  return {{"record", "iteration"},
          {"iteration", r.iteration},
          {"selected", r.selected},
          {"selected_scores", r.selected_scores},
          {"corrected", r.corrected},
          {"corrected_fraction", r.corrected_fraction},
          {"reviewed_fraction", r.reviewed_fraction},
          {"threshold_corrected_fraction", r.threshold_corrected_fraction},
          {"refined_changed", r.refined_changed},
          {"labeled_count", r.labeled_count},
          {"labeled_fraction", r.labeled_fraction},
          {"pool_remaining", r.pool_remaining},
          {"table_size", r.table_size},
          {"train_loss", r.train_loss},
          {"metrics", to_json(r.eval, schema)}};
}

json to_json(const AnnotationTask& t, const LabelSchema& schema) {
  json probs = json::object();
  for (std::size_t j = 0; j < t.prob.size(); ++j) probs[schema.name(j)] = t.prob[j];
  return {{"sample_id", t.sample_id},
          {"iteration", t.iteration},
          {"status", to_string(t.status)},
          {"proposed", encode_combination(t.proposed)},
          {"threshold_proposal", encode_combination(t.threshold_proposal)},
          {"validated", t.validated},
          {"distance", t.distance ? json(*t.distance) : json(nullptr)},
          {"probabilities", t.prob.values()},
          {"probabilities_by_label", std::move(probs)}};
}

json to_json(const AnnotationResult& r) {
  return {{"sample_id", r.sample_id},
          {"final", encode_combination(r.final)},
          {"changed", r.changed},
          {"status", r.changed ? "corrected" : "confirmed"},
          {"source", to_string(r.source)}};
}

}  // namespace detail

RunMetadata make_metadata(std::string mode, const ALConfig& config, const Dataset& data) {
  RunMetadata meta;
  meta.mode = std::move(mode);
  meta.config = config;
  meta.dataset_name = data.name();
  meta.dataset_hash = dataset_hash(data);
  meta.pool_size = data.ids(Split::pool).size();
  meta.test_size = data.ids(Split::test).size();
  return meta;
}

std::string iteration_to_json(const IterationReport& report, const LabelSchema& schema) {
  return detail::to_json(report, schema).dump();
}

std::string report_to_string(const RunMetadata& meta, const LabelSchema& schema,
                             std::span<const IterationReport> series, std::optional<StopReason> stop) {
  json header = {{"record", "run"},
                 {"format", "tsal-report"},
                 {"version", 1},
                 {"mode", meta.mode},
                 {"seed", meta.config.seed},
                 {"config", detail::to_json(meta.config)},
                 {"dataset", {{"name", meta.dataset_name},
                              {"hash", meta.dataset_hash},
                              {"pool_size", meta.pool_size},
                              {"test_size", meta.test_size}}},
                 {"labels", schema.labels()},
                 {"exclusive_index", schema.exclusive_index()}};
  if (meta.baseline_epochs) header["baseline_epochs"] = *meta.baseline_epochs;
  std::string out = header.dump();
  out += '\n';
  for (const auto& r : series) {
    out += detail::to_json(r, schema).dump();
    out += '\n';
  }
  json summary = {{"record", "summary"}, {"iterations", series.size()}};
  summary["stop_reason"] = stop ? json(std::string(to_string(*stop))) : json(nullptr);
  if (!series.empty()) {
    summary["final_macro_accuracy"] = series.back().eval.macro_accuracy;
    summary["final_labeled_fraction"] = series.back().labeled_fraction;
  }
  out += summary.dump();
  out += '\n';
  return out;
}

void write_report(const std::filesystem::path& path, const RunMetadata& meta, const LabelSchema& schema,
                  std::span<const IterationReport> series, std::optional<StopReason> stop) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  out << report_to_string(meta, schema, series, stop);
}

std::string report_to_csv(std::string_view report_text) {
  std::istringstream in{std::string(report_text)};
  std::string line;
  std::vector<std::string> labels;
  std::string out;
  bool have_header = false;
  char buf[64];
  auto pct = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.4f", 100.0 * v);
    return std::string(buf);
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::parse_error, std::string("malformed report line: ") + e.what());
    }
    const auto kind = j.value("record", "");
    if (kind == "run") {
      labels = j.at("labels").get<std::vector<std::string>>();
      out += "iteration,labeled_count,labeled_pct,corrected_pct,threshold_corrected_pct,macro_accuracy_pct";
      for (const auto& l : labels) {
        out += "," + l + "_acc," + l + "_sen," + l + "_spe," + l + "_auc";
      }
      out += '\n';
      have_header = true;
    } else if (kind == "iteration") {
      if (!have_header) throw Error(ErrorCode::parse_error, "report has no run header");
      out += std::to_string(j.at("iteration").get<int>());
      out += "," + std::to_string(j.at("labeled_count").get<std::size_t>());
      out += pct(j.at("labeled_fraction").get<double>());
      out += pct(j.at("corrected_fraction").get<double>());
      out += pct(j.at("threshold_corrected_fraction").get<double>());
      const auto& m = j.at("metrics");
      out += pct(m.at("macro_accuracy").get<double>());
      for (const auto& l : m.at("labels")) {
        out += pct(l.at("accuracy").get<double>());
        out += pct(l.at("sensitivity").get<double>());
        out += pct(l.at("specificity").get<double>());
        out += pct(l.at("auc").get<double>());
      }
      out += '\n';
    }
  }
  if (!have_header) throw Error(ErrorCode::parse_error, "report has no run header");
  return out;
}

}  // namespace tsal
