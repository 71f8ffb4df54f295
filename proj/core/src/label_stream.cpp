#include "tsal/label_stream.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace tsal {

const std::vector<double>* CorrelationTable::find(const LabelCombination& com) const {
  auto it = entries_.find(com);
  return it == entries_.end() ? nullptr : &it->second;
}

void CorrelationTable::put(const LabelCombination& com, std::vector<double> rv) {
  if (com.size() != label_count_ || rv.size() != label_count_) {
    throw Error(ErrorCode::shape_mismatch, "table entry length does not match label count");
  }
  double sum = 0.0;
  for (double v : rv) {
    if (!(v >= 0.0)) throw Error(ErrorCode::invalid_argument, "relationship vector entry < 0");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::invalid_argument, "relationship vector does not sum to 1");
  }
  entries_[com] = std::move(rv);
}

LabelCombination assign_pseudo(const ProbabilityVector& p, double threshold, bool strict) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "threshold must lie in (0, 1)");
  }
  auto out = LabelCombination::zeros(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    out.set(i, strict ? p[i] > threshold : p[i] >= threshold);
  }
  return out;
}

std::vector<double> normalize_rv(std::span<const double> p_avg) {
  double sum = 0.0;
  for (double v : p_avg) {
    if (!(v >= 0.0)) throw Error(ErrorCode::invalid_argument, "cannot normalize negative entry");
    sum += v;
  }
  if (!(sum > 0.0)) throw Error(ErrorCode::invalid_argument, "cannot normalize a zero-sum vector");
  std::vector<double> out(p_avg.begin(), p_avg.end());
  for (auto& v : out) v /= sum;
  return out;
}

TableBuild build_table(std::span<const ProbabilityVector> probs,
                       std::span<const LabelCombination> combos, int iteration) {
  if (probs.empty()) throw Error(ErrorCode::empty_input, "no samples to build a table from");
  if (probs.size() != combos.size()) {
    throw Error(ErrorCode::shape_mismatch, "probabilities and combinations are misaligned");
  }
  const std::size_t m = combos.front().size();
  std::map<LabelCombination, std::pair<std::vector<double>, std::size_t>> groups;
  for (std::size_t n = 0; n < probs.size(); ++n) {
    if (probs[n].size() != m || combos[n].size() != m) {
      throw Error(ErrorCode::shape_mismatch, "inconsistent label count in table input");
    }
    auto& [sum, count] = groups[combos[n]];
    if (sum.empty()) sum.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) sum[i] += probs[n][i];
    ++count;
  }

  TableBuild out{CorrelationTable(m, iteration), {}};
  for (auto& [com, acc] : groups) {
    auto& [sum, count] = acc;
    for (auto& v : sum) v /= static_cast<double>(count);
    const double total = std::accumulate(sum.begin(), sum.end(), 0.0);
    if (!(total > 0.0)) {
      out.skipped.push_back(com);
      continue;
    }
    out.table.put(com, normalize_rv(sum));
  }
  return out;
}

std::pair<LabelCombination, double> nearest_combination(std::span<const double> q,
                                                        const CorrelationTable& table) {
  if (table.empty()) throw Error(ErrorCode::empty_input, "correlation table is empty");
  if (q.size() != table.label_count()) {
    throw Error(ErrorCode::shape_mismatch, "query length does not match table");
  }
  const LabelCombination* best = nullptr;
  double best_dist = 0.0;
  // Map order is ascending combination, so keeping the first minimum breaks ties.
  for (const auto& [com, rv] : table.entries()) {
    double d = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) d += std::abs(q[i] - rv[i]);
    if (!best || d < best_dist) {
      best = &com;
      best_dist = d;
    }
  }
  return {*best, best_dist};
}

RefinementOutcome refine_pseudo(const ProbabilityVector& p, const CorrelationTable& table,
                                const ThresholdRule& rule, std::optional<double> max_distance) {
  RefinementOutcome out;
  out.proposed = assign_pseudo(p, rule);
  out.refined = out.proposed;
  const auto values = p.values();
  const double total = std::accumulate(values.begin(), values.end(), 0.0);
  if (table.empty() || !(total > 0.0)) return out;

  auto [com, dist] = nearest_combination(normalize_rv(values), table);
  out.distance = dist;
  if (max_distance && dist > *max_distance) return out;
  out.refined = std::move(com);
  out.validated = true;
  out.changed = out.refined != out.proposed;
  return out;
}

CorrelationTable update_table(const CorrelationTable& old, const CorrelationTable& fresh) {
  if (old.label_count() != fresh.label_count()) {
    throw Error(ErrorCode::shape_mismatch, "tables disagree on label count");
  }
  CorrelationTable next = old;
  next.set_iteration_built(fresh.iteration_built());
  for (const auto& [com, rv_new] : fresh.entries()) {
    const auto* rv_old = old.find(com);
    bool accept = true;
    if (rv_old) {
      for (std::size_t i = 0; i < com.size() && accept; ++i) {
        if (com[i]) accept = rv_new[i] >= (*rv_old)[i];
      }
    }
    if (accept) next.put(com, rv_new);
  }
  return next;
}

std::string dump_table(const CorrelationTable& table) {
  std::string out;
  char buf[32];
  for (const auto& [com, rv] : table.entries()) {
    out += encode_combination(com);
    for (double v : rv) {
      std::snprintf(buf, sizeof buf, " %.6f", v);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

CorrelationTable parse_table(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::pair<LabelCombination, std::vector<double>>> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string com_text;
    ls >> com_text;
    auto com = decode_combination(com_text);
    std::vector<double> rv;
    double v = 0.0;
    while (ls >> v) rv.push_back(v);
    if (!ls.eof() || rv.size() != com.size()) {
      throw Error(ErrorCode::parse_error, "malformed table line " + std::to_string(line_no));
    }
    rows.emplace_back(std::move(com), std::move(rv));
  }
  if (rows.empty()) return {};
  CorrelationTable table(rows.front().first.size());
  for (auto& [com, rv] : rows) table.put(com, normalize_rv(rv));
  return table;
}

}  // namespace tsal
