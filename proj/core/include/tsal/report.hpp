#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "tsal/dataset.hpp"
#include "tsal/driver.hpp"

namespace tsal {

struct RunMetadata {
  std::string mode = "active";  // "active" or "baseline"
  ALConfig config;
  std::string dataset_name;
  std::string dataset_hash;
  std::size_t pool_size = 0;
  std::size_t test_size = 0;
  std::optional<std::size_t> baseline_epochs;
};

RunMetadata make_metadata(std::string mode, const ALConfig& config, const Dataset& data);

/// Report series: JSON lines. The first line is the run header
/// ({"record":"run",...} with the config echo, seed and dataset hash), then
/// one {"record":"iteration",...} per iteration, then a {"record":"summary"}.
/// Rates are fractions in [0,1]; the CSV export converts them to percent.
std::string report_to_string(const RunMetadata& meta, const LabelSchema& schema,
                             std::span<const IterationReport> series,
                             std::optional<StopReason> stop = std::nullopt);
void write_report(const std::filesystem::path& path, const RunMetadata& meta,
                  const LabelSchema& schema, std::span<const IterationReport> series,
                  std::optional<StopReason> stop = std::nullopt);

/// One JSON object for a single iteration (no trailing newline).
std::string iteration_to_json(const IterationReport& report, const LabelSchema& schema);

/// Flattens a report series into CSV: iteration, labeled count/percent,
/// corrected percents, macro accuracy and per-label acc/sen/spe/auc in percent.
std::string report_to_csv(std::string_view report_text);

}  // namespace tsal
