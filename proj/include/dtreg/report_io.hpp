#pragma once

#include <iosfwd>
#include <optional>

#include <json.hpp>

#include "dtreg/inference.hpp"
#include "dtreg/optimizer.hpp"
#include "dtreg/simlab.hpp"

namespace dtreg {

// beta_hat, scheme, iterates, final_loss, converged, evals.
nlohmann::json to_json(const FitResult& fit);

nlohmann::json to_json(const SimDesign& design);

// Reads a design object. Missing truncation constants are reported through
// has_constants so the caller can calibrate them.
SimDesign design_from_json(const nlohmann::json& j, bool* has_constants = nullptr);

// One row per (estimator, parameter): estimator,parameter,bias,se,see,cp95.
void write_report_csv(std::ostream& out, const SimulationReport& report);

nlohmann::json to_json(const SimulationReport& report,
                       const std::optional<Calibration>& calibration = std::nullopt);

// Per-replication estimates and resampled SEs, one row per estimator.
void write_replications_csv(std::ostream& out, const SimulationReport& report);

// Fixed four-decimal rendering used by every table; NaN prints as `nan`.
std::string format_fixed4(double v);

// Pretty-printed with a trailing newline.
void write_json(std::ostream& out, const nlohmann::json& j);

}  // namespace dtreg
