#pragma once

// JSON encoders shared by the report writer and the HTTP service.

#include "json.hpp"
#include "tsal/annotation.hpp"
#include "tsal/driver.hpp"

namespace tsal::detail {

nlohmann::json to_json(const ALConfig& config);
nlohmann::json to_json(const Evaluation& eval, const LabelSchema& schema);
nlohmann::json to_json(const IterationReport& report, const LabelSchema& schema);
nlohmann::json to_json(const AnnotationTask& task, const LabelSchema& schema);
nlohmann::json to_json(const AnnotationResult& result);

}  // namespace tsal::detail
