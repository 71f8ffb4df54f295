#include "tsal/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "json.hpp"

namespace tsal {

namespace {

using json = nlohmann::json;

std::vector<std::vector<double>> label_signatures(const SynthConfig& cfg) {
  // Independent stream from the sample draws so changing n does not move centers.
  std::mt19937_64 rng(cfg.seed ^ 0x5bd1e9955bd1e995ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> sig(cfg.schema.size(), std::vector<double>(cfg.feature_dim));
  for (auto& v : sig) {
    double norm = 0.0;
    for (auto& x : v) {
      x = normal(rng);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x *= cfg.signature_scale / norm;
  }
  return sig;
}

}  // namespace

void SynthConfig::validate() const {
  if (feature_dim < 1) throw Error(ErrorCode::invalid_argument, "feature_dim must be >= 1");
  if (prior.empty()) throw Error(ErrorCode::invalid_argument, "combination prior is empty");
  if (!(noise_scale >= 0.0)) throw Error(ErrorCode::invalid_argument, "noise_scale must be >= 0");
  double total = 0.0;
  const std::size_t ex = schema.exclusive_index();
  for (const auto& p : prior) {
    if (p.combo.size() != schema.size()) {
      throw Error(ErrorCode::invalid_combination, "prior combination has wrong length");
    }
    if (!(p.probability >= 0.0)) throw Error(ErrorCode::invalid_argument, "negative prior probability");
    if (!(p.spread >= 0.0)) throw Error(ErrorCode::invalid_argument, "negative spread");
    if (!p.center.empty() && p.center.size() != feature_dim) {
      throw Error(ErrorCode::shape_mismatch, "prior center has wrong dimension");
    }
    if (p.combo[ex] && p.combo.count() > 1) {
      throw Error(ErrorCode::invalid_combination,
                  "combination " + encode_combination(p.combo) + " pairs the exclusive label with another");
    }
    total += p.probability;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::invalid_argument, "prior does not sum to 1");
}

SynthConfig lusms_synth_v1(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.name = "lusms-synth-v1";
  cfg.schema = LabelSchema({"A-line", "B-line", "P-lesion", "P-effusion"}, 0);
  cfg.n_samples = 2000;
  cfg.n_test = 500;
  cfg.feature_dim = 32;
  cfg.noise_scale = 0.75;
  cfg.signature_scale = 8.0;
  cfg.seed = seed;
  const std::pair<const char*, double> prior[] = {
      {"1000", 0.40}, {"0100", 0.22}, {"0110", 0.14}, {"0010", 0.10},
      {"0111", 0.04}, {"0101", 0.04}, {"0011", 0.03}, {"0001", 0.03},
  };
  // Each finding combination also has a mild mode (30% of its mass) that sits
  // 40% of the way from the A-line center toward the full presentation.
  constexpr double mild_share = 0.3, mild_severity = 0.4;
  for (const auto& [com, p] : prior) {
    const auto combo = decode_combination(com);
    if (combo[0]) {
      cfg.prior.push_back({combo, p, {}, 1.0, 1.0});
      continue;
    }
    cfg.prior.push_back({combo, p * (1.0 - mild_share), {}, 1.0, 1.0});
    cfg.prior.push_back({combo, p * mild_share, {}, 1.0, mild_severity});
  }
  return cfg;
}

Dataset generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  const auto sig = label_signatures(cfg);
  std::vector<std::vector<double>> centers;
  std::vector<double> weights;
  for (const auto& p : cfg.prior) {
    std::vector<double> c = p.center;
    if (c.empty()) {
      c.assign(cfg.feature_dim, 0.0);
      const std::size_t ex = cfg.schema.exclusive_index();
      const double w = p.combo[ex] ? 1.0 : p.severity;
      for (std::size_t j = 0; j < p.combo.size(); ++j) {
        if (!p.combo[j]) continue;
        for (std::size_t d = 0; d < cfg.feature_dim; ++d) c[d] += w * sig[j][d];
      }
      if (!p.combo[ex] && w != 1.0) {
        for (std::size_t d = 0; d < cfg.feature_dim; ++d) c[d] += (1.0 - w) * sig[ex][d];
      }
    }
    centers.push_back(std::move(c));
    weights.push_back(p.probability);
  }

  std::mt19937_64 rng(cfg.seed);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset data(cfg.name, cfg.schema, cfg.feature_dim);
  const std::size_t total = cfg.n_samples + cfg.n_test;
  const int width = total > 99999 ? static_cast<int>(std::to_string(total).size()) : 5;
  char id[32];
  for (std::size_t n = 0; n < total; ++n) {
    const std::size_t k = pick(rng);
    const double scale = cfg.noise_scale * cfg.prior[k].spread;
    Sample s;
    std::snprintf(id, sizeof id, "s%0*zu", width, n);
    s.id = id;
    s.features = centers[k];
    for (auto& x : s.features) x += scale * normal(rng);
    s.truth = cfg.prior[k].combo;
    data.add(std::move(s), n < cfg.n_samples ? Split::pool : Split::test);
  }
  return data;
}

std::string synth_config_to_json(const SynthConfig& cfg) {
  json prior = json::array();
  for (const auto& p : cfg.prior) {
    json e = {{"combination", encode_combination(p.combo)}, {"probability", p.probability}, {"spread", p.spread}, {"severity", p.severity}};
    if (!p.center.empty()) e["center"] = p.center;
    prior.push_back(std::move(e));
  }
  json j = {{"name", cfg.name},
            {"labels", cfg.schema.labels()},
            {"exclusive_index", cfg.schema.exclusive_index()},
            {"n_samples", cfg.n_samples},
            {"n_test", cfg.n_test},
            {"feature_dim", cfg.feature_dim},
            {"noise_scale", cfg.noise_scale},
            {"signature_scale", cfg.signature_scale},
            {"seed", cfg.seed},
            {"prior", std::move(prior)}};
  return j.dump(2);
}

SynthConfig synth_config_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    SynthConfig cfg;
    cfg.name = j.value("name", "synthetic");
    cfg.schema = LabelSchema(j.at("labels").get<std::vector<std::string>>(),
                             j.value("exclusive_index", std::size_t{0}));
    cfg.n_samples = j.at("n_samples").get<std::size_t>();
    cfg.n_test = j.value("n_test", std::size_t{0});
    cfg.feature_dim = j.at("feature_dim").get<std::size_t>();
    cfg.noise_scale = j.value("noise_scale", 1.0);
    cfg.signature_scale = j.value("signature_scale", 3.0);
    cfg.seed = j.value("seed", std::uint64_t{0});
    for (const auto& e : j.at("prior")) {
      CombinationPrior p;
      p.combo = decode_combination(e.at("combination").get<std::string>(), cfg.schema);
      p.probability = e.at("probability").get<double>();
      p.spread = e.value("spread", 1.0);
      p.severity = e.value("severity", 1.0);
      if (e.contains("center")) p.center = e.at("center").get<std::vector<double>>();
      cfg.prior.push_back(std::move(p));
    }
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("malformed synth config: ") + e.what());
  }
}

}  // namespace tsal
