#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dtreg/sample.hpp"

namespace dtreg {

// Redshift z and apparent magnitude m, observed because a < m < b.
struct QuasarRecord {
  double z = 0.0;
  double m = 0.0;
  double a = 0.0;
  double b = 0.0;
};

// CSV with header `z,m,a,b`. Throws InputError with the record index when
// a < m < b fails, or with the line number for malformed rows.
std::vector<QuasarRecord> load_quasar(std::istream& in);
std::vector<QuasarRecord> load_quasar(const std::string& path);

// Natural-log luminosity from redshift and magnitude, Einstein-de Sitter.
double log_luminosity(double z, double m);

struct LuminosityObservation {
  Observation obs;
  // The magnitude bounds map to luminosity bounds in reverse order (brighter
  // means smaller m); set when l and r had to be exchanged.
  bool bounds_swapped = false;
};

// Response and bounds for one record, with no covariates filled in.
LuminosityObservation to_luminosity(const QuasarRecord& record);

enum class EvolutionModel { Linear, Quadratic };

const char* to_string(EvolutionModel model);

// Covariates log(1 + z), plus its square for the quadratic model.
// swapped_count, when given, receives how many records had reversed bounds.
TruncatedSample evolution_sample(const std::vector<QuasarRecord>& records, EvolutionModel model,
                                 std::size_t* swapped_count = nullptr);

struct CurvePoint {
  double theta;
  double loss;
};

// loss() along a grid of one-dimensional coefficients.
std::vector<CurvePoint> loss_curve(const TruncatedSample& sample, const std::vector<double>& grid);

// Parses `lo:hi:step` into lo, lo + step, ... up to hi inclusive.
std::vector<double> parse_grid(const std::string& spec);

// TSV with header `theta<TAB>loss`, four decimals.
void write_loss_curve(std::ostream& out, const std::vector<CurvePoint>& curve);

}  // namespace dtreg
