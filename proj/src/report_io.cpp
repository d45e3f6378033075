#include "dtreg/report_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "dtreg/error.hpp"

namespace dtreg {

namespace {

// JSON has no NaN; nlohmann writes null, which is what we want for "not
// available", but infinities are spelled as strings so they survive.
nlohmann::json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

nlohmann::json vector_json(const std::vector<double>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

std::string full_precision(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::string format_fixed4(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  std::string s(buf);
  if (s == "-0.0000") s = "0.0000";
  return s;
}

void write_json(std::ostream& out, const nlohmann::json& j) { out << j.dump(2) << '\n'; }

nlohmann::json to_json(const FitResult& fit) {
  nlohmann::json j;
  j["beta_hat"] = vector_json(fit.beta_hat);
  j["scheme"] = to_string(fit.scheme);
  nlohmann::json its = nlohmann::json::array();
  for (const auto& it : fit.iterates) its.push_back(vector_json(it));
  j["iterates"] = std::move(its);
  j["final_loss"] = number(fit.final_loss);
  j["converged"] = fit.converged;
  j["evals"] = fit.evals;
  return j;
}

nlohmann::json to_json(const SimDesign& d) {
  return {{"n", d.n},
          {"beta0", vector_json(d.beta0)},
          {"error", to_string(d.error)},
          {"truncation", to_string(d.truncation)},
          {"lower_const", number(d.lower_const)},
          {"upper_const", number(d.upper_const)},
          {"seed", d.seed}};
}

SimDesign design_from_json(const nlohmann::json& j, bool* has_constants) {
  if (!j.is_object()) throw InputError("design must be a JSON object");
  static const char* const kKnown[] = {"n", "beta0", "error", "truncation",
                                       "lower_const", "upper_const", "seed"};
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* k : kKnown) known = known || key == k;
    if (!known) throw InputError("unknown design field '" + key + "'");
  }
  SimDesign d;
  try {
    if (j.contains("n")) d.n = j.at("n").get<std::size_t>();
    if (j.contains("beta0")) d.beta0 = j.at("beta0").get<std::vector<double>>();
    if (j.contains("error")) d.error = parse_error_law(j.at("error").get<std::string>());
    if (j.contains("truncation"))
      d.truncation = parse_truncation_scheme(j.at("truncation").get<std::string>());
    if (j.contains("seed")) d.seed = j.at("seed").get<std::uint64_t>();
    const bool lower = j.contains("lower_const");
    const bool upper = j.contains("upper_const");
    if (lower != upper) throw InputError("give both truncation constants or neither");
    if (lower) {
      d.lower_const = j.at("lower_const").get<double>();
      d.upper_const = j.at("upper_const").get<double>();
    }
    if (has_constants != nullptr) *has_constants = lower;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad design field: ") + e.what());
  }
  return d;
}

void write_report_csv(std::ostream& out, const SimulationReport& report) {
  out << "estimator,parameter,bias,se,see,cp95\n";
  for (const auto& r : report.rows) {
    out << to_string(r.estimator) << ",beta_" << (r.parameter + 1) << ',' << format_fixed4(r.bias)
        << ',' << format_fixed4(r.se) << ',' << format_fixed4(r.see) << ','
        << format_fixed4(r.cp95) << '\n';
  }
}

nlohmann::json to_json(const SimulationReport& report,
                       const std::optional<Calibration>& calibration) {
  nlohmann::json j;
  j["design"] = to_json(report.design);
  nlohmann::json est = nlohmann::json::array();
  for (Estimator e : report.options.estimators) est.push_back(to_string(e));
  j["options"] = {{"replications", report.options.replications},
                  {"B", report.options.B},
                  {"estimators", std::move(est)},
                  {"level", report.options.level},
                  {"logrank_iterations", report.options.fit.logrank_iterations},
                  {"strategy", to_string(report.options.fit.strategy)}};
  if (calibration) {
    j["calibration"] = {{"lower_const", calibration->lower_const},
                        {"upper_const", calibration->upper_const},
                        {"left_rate", calibration->achieved.left},
                        {"right_rate", calibration->achieved.right},
                        {"reached", calibration->reached}};
  }
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"estimator", to_string(r.estimator)},
                    {"parameter", "beta_" + std::to_string(r.parameter + 1)},
                    {"bias", r.bias},
                    {"se", r.se},
                    {"see", r.see},
                    {"cp95", r.cp95},
                    {"replications", r.replications}});
  }
  j["rows"] = std::move(rows);
  j["failures"] = report.failures;
  nlohmann::json errors = nlohmann::json::array();
  for (const auto& rec : report.records)
    if (!rec.ok) errors.push_back({{"replication", rec.index}, {"error", rec.error}});
  j["failed_replications"] = std::move(errors);
  j["valid"] = report.valid;
  return j;
}

void write_replications_csv(std::ostream& out, const SimulationReport& report) {
  const std::size_t p = report.design.beta0.size();
  out << "replication,estimator";
  for (std::size_t k = 0; k < p; ++k) out << ",beta_" << (k + 1);
  for (std::size_t k = 0; k < p; ++k) out << ",se_" << (k + 1);
  out << '\n';
  for (const auto& rec : report.records) {
    if (!rec.ok) continue;
    auto row = [&](const char* name, const std::vector<double>& est, const std::vector<double>& se) {
      out << rec.index + 1 << ',' << name;
      for (std::size_t k = 0; k < p; ++k) out << ',' << full_precision(est[k]);
      for (std::size_t k = 0; k < p; ++k) out << ',' << (se.empty() ? "nan" : full_precision(se[k]));
      out << '\n';
    };
    for (std::size_t e = 0; e < rec.runs.size(); ++e)
      row(to_string(report.options.estimators[e]), rec.runs[e].estimate, rec.runs[e].se);
    if (!rec.logrank_converged.empty()) row("logrank_converged", rec.logrank_converged, {});
  }
}

}  // namespace dtreg
