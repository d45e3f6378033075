#include "dtreg/sample.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "csv.hpp"
#include "dtreg/error.hpp"

namespace dtreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using csv::trim;

std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

double parse_real(const std::string& field) {
  const std::string s = trim(field);
  if (s == "inf" || s == "+inf" || s == "Inf" || s == "+Inf") return kInf;
  if (s == "-inf" || s == "-Inf") return -kInf;
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (!s.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (s.empty() || ec != std::errc() || ptr != end)
    throw InputError("not a number: '" + s + "'");
  return v;
}

TruncatedSample validate_sample(std::vector<Observation> raw) {
  if (raw.empty()) throw InputError("empty sample");
  const std::size_t p = raw.front().x.size();
  if (p == 0) throw InputError("observation 0 has no covariates", 0);

  TruncatedSample s;
  s.p_ = p;
  const std::size_t n = raw.size();
  s.y_.reserve(n);
  s.x_.reserve(n * p);
  s.lower_gap_.reserve(n);
  s.upper_gap_.reserve(n);
  bool untruncated = true;

  for (std::size_t i = 0; i < n; ++i) {
    const Observation& o = raw[i];
    auto reject = [i](const std::string& why) {
      throw InputError("observation " + std::to_string(i) + ": " + why, i);
    };
    if (o.x.size() != p) reject("ragged covariates (expected " + std::to_string(p) + ")");
    if (!std::isfinite(o.y)) reject("non-finite response");
    for (double v : o.x)
      if (!std::isfinite(v)) reject("non-finite covariate");
    if (std::isnan(o.l) || o.l == kInf) reject("invalid left bound");
    if (std::isnan(o.r) || o.r == -kInf) reject("invalid right bound");
    if (o.y == o.l) reject("response at left bound");
    if (o.y < o.l) reject("response below left bound");
    if (o.y == o.r) reject("response at right bound");
    if (o.y > o.r) reject("response above right bound");

    const double lg = o.l - o.y;
    const double ug = o.r - o.y;
    // Rounding can close a gap that is positive in exact arithmetic.
    if (!(lg < 0.0)) reject("response indistinguishable from left bound");
    if (!(ug > 0.0)) reject("response indistinguishable from right bound");

    untruncated = untruncated && o.l == -kInf && o.r == kInf;
    s.y_.push_back(o.y);
    s.x_.insert(s.x_.end(), o.x.begin(), o.x.end());
    s.lower_gap_.push_back(lg);
    s.upper_gap_.push_back(ug);
  }
  s.untruncated_ = untruncated;
  s.obs_ = std::move(raw);
  return s;
}

std::vector<double> linear_predictor(const TruncatedSample& sample,
                                     std::span<const double> beta) {
  const std::size_t n = sample.size();
  const std::size_t p = sample.dim();
  if (beta.size() != p)
    throw InputError("coefficient vector has length " + std::to_string(beta.size()) +
                     ", sample dimension is " + std::to_string(p));
  std::vector<double> eta(n);
  const auto x = sample.covariates();
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < p; ++k) acc += beta[k] * x[i * p + k];
    eta[i] = acc;
  }
  return eta;
}

ResidualFrame residuals(const TruncatedSample& sample,
                        std::span<const double> beta) {
  const auto eta = linear_predictor(sample, beta);
  ResidualFrame f;
  const std::size_t n = sample.size();
  f.e.resize(n);
  f.lb.resize(n);
  f.rb.resize(n);
  f.beta.assign(beta.begin(), beta.end());
  for (std::size_t i = 0; i < n; ++i) {
    const Observation& o = sample[i];
    f.e[i] = o.y - eta[i];
    f.lb[i] = o.l - eta[i];
    f.rb[i] = o.r - eta[i];
  }
  return f;
}

TruncatedSample drop_truncation(const TruncatedSample& sample) {
  std::vector<Observation> raw(sample.observations().begin(),
                               sample.observations().end());
  for (auto& o : raw) {
    o.l = -kInf;
    o.r = kInf;
  }
  return validate_sample(std::move(raw));
}

TruncatedSample read_sample_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) {
      header = csv::split(line);
      break;
    }
  }
  if (header.size() < 4 || header[0] != "y" || header[1] != "l" || header[2] != "r")
    throw InputError("expected header `y,l,r,x1,...,xp`", lineno);
  const std::size_t p = header.size() - 3;

  std::vector<Observation> raw;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() != header.size())
      throw InputError("line " + std::to_string(lineno) + ": expected " +
                           std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       lineno);
    Observation o;
    try {
      o.y = parse_real(fields[0]);
      o.l = parse_real(fields[1]);
      o.r = parse_real(fields[2]);
      o.x.resize(p);
      for (std::size_t k = 0; k < p; ++k) o.x[k] = parse_real(fields[3 + k]);
    } catch (const InputError& e) {
      throw InputError("line " + std::to_string(lineno) + ": " + e.what(), lineno);
    }
    raw.push_back(std::move(o));
  }
  return validate_sample(std::move(raw));
}

TruncatedSample read_sample_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return read_sample_csv(in);
}

void write_sample_csv(std::ostream& out, const TruncatedSample& sample) {
  out << "y,l,r";
  for (std::size_t k = 0; k < sample.dim(); ++k) out << ",x" << (k + 1);
  out << '\n';
  for (const auto& o : sample.observations()) {
    out << format_real(o.y) << ',' << format_real(o.l) << ',' << format_real(o.r);
    for (double v : o.x) out << ',' << format_real(v);
    out << '\n';
  }
}

}  // namespace dtreg
