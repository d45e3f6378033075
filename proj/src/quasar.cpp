#include "dtreg/quasar.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <utility>

#include "csv.hpp"
#include "dtreg/error.hpp"
#include "dtreg/loss.hpp"

namespace dtreg {

std::vector<QuasarRecord> load_quasar(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!csv::trim(line).empty()) {
      header = csv::split(line);
      break;
    }
  }
  if (header != std::vector<std::string>{"z", "m", "a", "b"})
    throw InputError("expected header `z,m,a,b`", lineno);

  std::vector<QuasarRecord> records;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() != 4)
      throw InputError("line " + std::to_string(lineno) + ": expected 4 fields, got " +
                           std::to_string(fields.size()),
                       lineno);
    QuasarRecord q;
    try {
      q.z = parse_real(fields[0]);
      q.m = parse_real(fields[1]);
      q.a = parse_real(fields[2]);
      q.b = parse_real(fields[3]);
    } catch (const InputError& e) {
      throw InputError("line " + std::to_string(lineno) + ": " + e.what(), lineno);
    }
    const std::size_t index = records.size();
    if (!std::isfinite(q.z) || !std::isfinite(q.m) || !std::isfinite(q.a) || !std::isfinite(q.b))
      throw InputError("record " + std::to_string(index) + ": non-finite value", index);
    if (!(q.a < q.m && q.m < q.b))
      throw InputError("record " + std::to_string(index) + ": magnitude outside (a, b)", index);
    records.push_back(q);
  }
  return records;
}

std::vector<QuasarRecord> load_quasar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return load_quasar(in);
}

double log_luminosity(double z, double m) {
  if (!(z > 0.0)) throw InputError("redshift must be positive");
  const double big_z = 1.0 + z;
  return 19.894 - 2.303 * m / 2.5 + std::log(big_z - std::sqrt(big_z)) - 0.5 * std::log(big_z);
}

LuminosityObservation to_luminosity(const QuasarRecord& record) {
  LuminosityObservation out;
  out.obs.y = log_luminosity(record.z, record.m);
  out.obs.l = log_luminosity(record.z, record.a);
  out.obs.r = log_luminosity(record.z, record.b);
  if (out.obs.l > out.obs.r) {
    std::swap(out.obs.l, out.obs.r);
    out.bounds_swapped = true;
  }
  if (!(out.obs.l < out.obs.y && out.obs.y < out.obs.r))
    throw InputError("luminosity outside its mapped bounds");
  return out;
}

const char* to_string(EvolutionModel model) {
  return model == EvolutionModel::Linear ? "linear" : "quadratic";
}

TruncatedSample evolution_sample(const std::vector<QuasarRecord>& records, EvolutionModel model,
                                 std::size_t* swapped_count) {
  std::vector<Observation> raw;
  raw.reserve(records.size());
  std::size_t swapped = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    LuminosityObservation lum;
    try {
      lum = to_luminosity(records[i]);
    } catch (const InputError& e) {
      throw InputError("record " + std::to_string(i) + ": " + e.what(), i);
    }
    if (lum.bounds_swapped) ++swapped;
    const double g = std::log1p(records[i].z);
    lum.obs.x = model == EvolutionModel::Linear ? std::vector<double>{g}
                                                : std::vector<double>{g, g * g};
    raw.push_back(std::move(lum.obs));
  }
  if (swapped_count != nullptr) *swapped_count = swapped;
  return validate_sample(std::move(raw));
}

std::vector<CurvePoint> loss_curve(const TruncatedSample& sample, const std::vector<double>& grid) {
  if (sample.dim() != 1) throw InputError("loss curve needs a one-covariate model");
  std::vector<CurvePoint> curve;
  curve.reserve(grid.size());
  for (double theta : grid) {
    const double beta[1] = {theta};
    curve.push_back({theta, loss(sample, beta)});
  }
  return curve;
}

std::vector<double> parse_grid(const std::string& spec) {
  const auto first = spec.find(':');
  const auto second = first == std::string::npos ? first : spec.find(':', first + 1);
  if (second == std::string::npos || spec.find(':', second + 1) != std::string::npos)
    throw InputError("grid must look like lo:hi:step, got '" + spec + "'");
  const double lo = parse_real(spec.substr(0, first));
  const double hi = parse_real(spec.substr(first + 1, second - first - 1));
  const double step = parse_real(spec.substr(second + 1));
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(step > 0.0) || !std::isfinite(step) || hi < lo)
    throw InputError("grid needs finite lo <= hi and a positive step");
  const double count = std::floor((hi - lo) / step + 1e-9);
  if (count > 1e7) throw InputError("grid has too many points");
  std::vector<double> grid;
  // lo + k * step rather than accumulation, so points do not drift.
  for (std::size_t k = 0; k <= static_cast<std::size_t>(count); ++k)
    grid.push_back(lo + static_cast<double>(k) * step);
  return grid;
}

void write_loss_curve(std::ostream& out, const std::vector<CurvePoint>& curve) {
  out << "theta\tloss\n";
  char buf[96];
  for (const auto& pt : curve) {
    std::snprintf(buf, sizeof(buf), "%.4f\t%.4f\n", pt.theta, pt.loss);
    out << buf;
  }
}

}  // namespace dtreg
