#pragma once

// JSON forms of the evaluation reports and a plain-text rendering of any of
// them.

#include <string>

#include <json.hpp>

#include "chdzdt/eval/compose.hpp"
#include "chdzdt/eval/downstream.hpp"
#include "chdzdt/eval/metrics.hpp"
#include "chdzdt/eval/noise.hpp"
#include "chdzdt/eval/probe.hpp"

namespace chdzdt::eval {

nlohmann::json to_json(const Prf& prf);
nlohmann::json to_json(const ClusterReport& r);
nlohmann::json to_json(const CorrelationReport& r);
nlohmann::json to_json(const NoiseReport& r);
nlohmann::json to_json(const ProbeReport& r);
nlohmann::json to_json(const TrainingTrace& t);
nlohmann::json to_json(const MorphReport& r);
nlohmann::json to_json(const PosReport& r);
nlohmann::json to_json(const SentimentReport& r);
// Fitted parameters (W as nested rows) and the held-out scores.
nlohmann::json to_json(const CompositionModel& m, const ComposeEval& e, bool include_matrix = true);

// Two aligned columns, one line per scalar leaf. Nested keys are joined with
// '.', and array elements are keyed by their label/feature/affix/mode/kind
// field when present.
std::string format_table(const nlohmann::json& report);

}  // namespace chdzdt::eval
