#include "cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include "dtreg/error.hpp"
#include "dtreg/inference.hpp"
#include "dtreg/optimizer.hpp"
#include "dtreg/quasar.hpp"
#include "dtreg/report_io.hpp"
#include "dtreg/simlab.hpp"

namespace dtreg {

namespace {

using nlohmann::json;

// Raised when a result was written but its resampling summary is unusable.
struct InvalidSummary : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit(const std::string& path, std::ostream& out, const std::function<void(std::ostream&)>& write) {
  if (path.empty() || path == "-") {
    write(out);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw InputError("cannot write " + path);
  write(file);
  if (!file) throw InputError("failed writing " + path);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

struct FitFlags {
  std::string scheme = "wilcoxon";
  int iterations = 3;
  std::string strategy = "direct";

  void attach(CLI::App* cmd) {
    cmd->add_option("--scheme", scheme, "Pair weights: wilcoxon or logrank")->capture_default_str();
    cmd->add_option("--iterations", iterations, "Log-rank iteration count")->capture_default_str();
    cmd->add_option("--strategy", strategy, "Wilcoxon minimization: direct or iterative")
        ->capture_default_str();
  }

  FitOptions options() const {
    if (iterations < 0) throw InputError("--iterations must be nonnegative");
    FitOptions o;
    o.scheme = parse_weight_scheme(scheme);
    o.logrank_iterations = iterations;
    o.strategy = parse_strategy(strategy);
    return o;
  }
};

struct InferenceFlags {
  std::size_t B = 500;
  std::uint64_t seed = 1;
  double level = 0.95;

  void attach(CLI::App* cmd) {
    cmd->add_option("--B", B, "Number of perturbation replicates")->capture_default_str();
    cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    cmd->add_option("--level", level, "Confidence level")->capture_default_str();
  }
};

// Fit plus perturbation resampling, reported per coefficient.
json analyze(const TruncatedSample& sample, const FitOptions& fopts, const InferenceFlags& inf,
             const std::vector<std::string>& names, const std::vector<Sided>& sided,
             const std::string& replicates_out, std::ostream& out, bool& valid) {
  if (!(inf.level > 0.0 && inf.level < 1.0)) throw InputError("--level must lie in (0, 1)");
  const FitResult f = fit(sample, fopts);
  ResampleOptions ro;
  ro.B = inf.B;
  ro.seed = inf.seed;
  const ResampleSummary s = resample(sample, f, fopts, ro);
  valid = s.valid;
  if (!replicates_out.empty())
    emit(replicates_out, out, [&](std::ostream& o) { write_replicates_csv(o, s); });

  json coefs = json::array();
  for (std::size_t j = 0; j < sample.dim(); ++j) {
    json c;
    c["name"] = names[j];
    c["estimate"] = f.beta_hat[j];
    c["se"] = s.se[j];
    if (s.valid && s.se[j] > 0.0) {
      const Interval ci = wald_interval(f.beta_hat[j], s.se[j], inf.level);
      c["interval"] = {ci.lo, ci.hi};
      c["quantile_interval"] = {replicate_quantile(s, j, 0.5 - 0.5 * inf.level),
                                replicate_quantile(s, j, 0.5 + 0.5 * inf.level)};
      const WaldTest t = wald_test(f.beta_hat[j], s.se[j], sided[j]);
      c["test"] = {{"sided", to_string(sided[j])}, {"statistic", t.statistic}, {"p_value", t.p_value}};
    } else {
      c["interval"] = nullptr;
      c["quantile_interval"] = nullptr;
      c["test"] = nullptr;
    }
    coefs.push_back(std::move(c));
  }
  json failed = json::array();
  for (std::size_t b : s.failed) failed.push_back(b + 1);
  return {{"fit", to_json(f)},
          {"resample",
           {{"B", s.B},
            {"succeeded", s.replicates.size()},
            {"failed", std::move(failed)},
            {"valid", s.valid},
            {"seed", inf.seed},
            {"shape", ro.law.shape},
            {"rate", ro.law.rate}}},
          {"level", inf.level},
          {"coefficients", std::move(coefs)}};
}

std::vector<std::string> beta_names(std::size_t p) {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < p; ++k) names.push_back("beta_" + std::to_string(k + 1));
  return names;
}

std::vector<Estimator> parse_estimators(const std::string& list) {
  std::vector<Estimator> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_estimator(item));
  if (out.empty()) throw InputError("no estimators given");
  return out;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Regression with a doubly truncated response"};
  app.name("dtreg");
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: all cores)");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Estimate coefficients; FitResult JSON out");
  std::string fit_in, fit_out;
  FitFlags fit_flags;
  fit_cmd->add_option("data", fit_in, "Sample CSV (y,l,r,x1,...)")->required();
  fit_cmd->add_option("-o,--output", fit_out, "Output file (default stdout)");
  fit_flags.attach(fit_cmd);

  // resample
  auto* res_cmd = app.add_subcommand("resample", "Fit plus perturbation standard errors and tests");
  std::string res_in, res_out, res_reps, res_sided = "two-sided";
  FitFlags res_fit;
  InferenceFlags res_inf;
  res_cmd->add_option("data", res_in, "Sample CSV (y,l,r,x1,...)")->required();
  res_cmd->add_option("-o,--output", res_out, "Output file (default stdout)");
  res_cmd->add_option("--replicates-out", res_reps, "Write the replicate estimates as CSV");
  res_cmd->add_option("--sided", res_sided, "Wald test: two-sided or greater")->capture_default_str();
  res_fit.attach(res_cmd);
  res_inf.attach(res_cmd);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo study of the estimators");
  std::string sim_design, sim_csv, sim_json, sim_iterates;
  std::string sim_estimators = "naive,wilcoxon,logrank";
  std::size_t sim_reps = 200, sim_B = 200;
  double sim_level = 0.95;
  bool sim_full = false, sim_compare = false;
  std::uint64_t sim_seed = 0;
  FitFlags sim_fit;
  sim_cmd->add_option("design", sim_design, "Design JSON")->required();
  sim_cmd->add_option("--replications", sim_reps, "Simulated data sets")->capture_default_str();
  sim_cmd->add_option("--B", sim_B, "Perturbation replicates per data set (0 skips)")
      ->capture_default_str();
  sim_cmd->add_option("--estimators", sim_estimators, "Comma-separated list")->capture_default_str();
  sim_cmd->add_option("--level", sim_level, "Coverage level")->capture_default_str();
  auto* sim_seed_opt = sim_cmd->add_option("--seed", sim_seed, "Override the design seed");
  sim_cmd->add_flag("--full-scale", sim_full, "1000 replications with B = 500");
  sim_cmd->add_flag("--compare-convergence", sim_compare,
                    "Also iterate log-rank to convergence (see --emit-iterates)");
  sim_cmd->add_option("--csv", sim_csv, "Report CSV file (default stdout)");
  sim_cmd->add_option("--json", sim_json, "Report JSON file");
  sim_cmd->add_option("--emit-iterates", sim_iterates, "Per-replication estimates CSV");
  sim_fit.attach(sim_cmd);

  // calibrate
  auto* cal_cmd = app.add_subcommand("calibrate", "Choose truncation constants for target rates");
  std::string cal_design, cal_out;
  CalibrationOptions cal_opts;
  cal_cmd->add_option("design", cal_design, "Design JSON")->required();
  cal_cmd->add_option("--left", cal_opts.target_left, "Target left truncation rate")
      ->capture_default_str();
  cal_cmd->add_option("--right", cal_opts.target_right, "Target right truncation rate")
      ->capture_default_str();
  cal_cmd->add_option("--attempts", cal_opts.attempts, "Monte Carlo draws")->capture_default_str();
  cal_cmd->add_option("--seed", cal_opts.seed, "Random seed")->capture_default_str();
  cal_cmd->add_option("-o,--output", cal_out, "Output file (default stdout)");

  // quasar
  auto* qso_cmd = app.add_subcommand("quasar", "Luminosity evolution analysis of quasar records");
  std::string qso_in, qso_out, qso_curve, qso_curve_out, qso_sided = "greater";
  FitFlags qso_fit;
  InferenceFlags qso_inf;
  qso_inf.level = 0.90;  // quasar evolution intervals are reported at 90%
  qso_cmd->add_option("records", qso_in, "Record CSV (z,m,a,b)")->required();
  qso_cmd->add_option("-o,--output", qso_out, "Analysis JSON file (default stdout)");
  qso_cmd->add_option("--loss-curve", qso_curve, "Loss curve grid lo:hi:step (linear model)");
  qso_cmd->add_option("--curve-out", qso_curve_out, "Loss curve TSV file (default stdout)");
  qso_cmd->add_option("--sided", qso_sided, "Test for the linear model: greater or two-sided")
      ->capture_default_str();
  qso_fit.attach(qso_cmd);
  qso_inf.attach(qso_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (threads < 0) throw InputError("--threads must be positive");
    if (threads > 0) omp_set_num_threads(threads);

    if (*fit_cmd) {
      const TruncatedSample sample = read_sample_csv(fit_in);
      const FitResult f = fit(sample, fit_flags.options());
      emit(fit_out, out, [&](std::ostream& o) { write_json(o, to_json(f)); });
      return kExitOk;
    }

    if (*res_cmd) {
      const TruncatedSample sample = read_sample_csv(res_in);
      const Sided sided = parse_sided(res_sided);
      bool valid = false;
      const json j = analyze(sample, res_fit.options(), res_inf, beta_names(sample.dim()),
                             std::vector<Sided>(sample.dim(), sided), res_reps, out, valid);
      emit(res_out, out, [&](std::ostream& o) { write_json(o, j); });
      if (!valid) throw InvalidSummary("too many failed replicates; standard errors unusable");
      return kExitOk;
    }

    if (*sim_cmd) {
      bool has_constants = false;
      SimDesign design = design_from_json(read_json_file(sim_design), &has_constants);
      if (*sim_seed_opt) design.seed = sim_seed;
      std::optional<Calibration> cal;
      if (!has_constants && design.truncation != TruncationScheme::None) {
        cal = calibrate_truncation(design);
        design.lower_const = cal->lower_const;
        design.upper_const = cal->upper_const;
        if (!cal->reached) err << "warning: calibration missed the 15% targets\n";
      }
      StudyOptions so;
      so.replications = sim_full ? 1000 : sim_reps;
      so.B = sim_full ? 500 : sim_B;
      so.estimators = parse_estimators(sim_estimators);
      so.level = sim_level;
      so.fit = sim_fit.options();
      so.compare_convergence = sim_compare;
      const SimulationReport report = run_study(design, so);
      if (!sim_csv.empty() || sim_json.empty())
        emit(sim_csv, out, [&](std::ostream& o) { write_report_csv(o, report); });
      if (!sim_json.empty())
        emit(sim_json, out, [&](std::ostream& o) { write_json(o, to_json(report, cal)); });
      if (!sim_iterates.empty())
        emit(sim_iterates, out, [&](std::ostream& o) { write_replications_csv(o, report); });
      if (!report.valid) throw InvalidSummary("more than 2% of replications failed");
      return kExitOk;
    }

    if (*cal_cmd) {
      SimDesign design = design_from_json(read_json_file(cal_design));
      const Calibration cal = calibrate_truncation(design, cal_opts);
      design.lower_const = cal.lower_const;
      design.upper_const = cal.upper_const;
      const json j = {{"design", to_json(design)},
                      {"left_rate", cal.achieved.left},
                      {"right_rate", cal.achieved.right},
                      {"reached", cal.reached}};
      emit(cal_out, out, [&](std::ostream& o) { write_json(o, j); });
      if (!cal.reached) err << "warning: calibration missed its targets\n";
      return kExitOk;
    }

    if (*qso_cmd) {
      const auto records = load_quasar(qso_in);
      const Sided sided = parse_sided(qso_sided);
      std::size_t swapped = 0;
      const TruncatedSample linear = evolution_sample(records, EvolutionModel::Linear, &swapped);
      if (swapped > 0)
        err << "warning: " << swapped
            << " records had luminosity bounds in reverse order; exchanged\n";
      const bool curve_on_stdout = !qso_curve.empty() && qso_curve_out.empty();
      if (!qso_curve.empty()) {
        const auto curve = loss_curve(linear, parse_grid(qso_curve));
        emit(qso_curve_out, out, [&](std::ostream& o) { write_loss_curve(o, curve); });
      }
      // The curve alone is the answer when it took stdout and no file was named.
      if (curve_on_stdout && qso_out.empty()) return kExitOk;

      const FitOptions fopts = qso_fit.options();
      bool valid_lin = false, valid_quad = false;
      json j;
      j["records"] = records.size();
      j["swapped_bounds"] = swapped;
      j["linear"] = analyze(linear, fopts, qso_inf, {"log1p_z"}, {sided}, "", out, valid_lin);
      const TruncatedSample quad = evolution_sample(records, EvolutionModel::Quadratic);
      j["quadratic"] = analyze(quad, fopts, qso_inf, {"log1p_z", "log1p_z_squared"},
                               {Sided::TwoSided, Sided::TwoSided}, "", out, valid_quad);
      emit(qso_out, out, [&](std::ostream& o) { write_json(o, j); });
      if (!valid_lin || !valid_quad)
        throw InvalidSummary("too many failed replicates; standard errors unusable");
      return kExitOk;
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const OptimizationError& e) {
    err << "optimization failed: " << e.what() << '\n';
    return kExitOptimization;
  } catch (const InvalidSummary& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidResample;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace dtreg
