#include "reachrl/curve.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace reachrl {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_curve_fragment(std::ostream& os, const std::vector<CurveRow>& rows) {
  os << "step mean std\n";
  for (const CurveRow& r : rows)
    os << r.step << ' ' << fmt(r.mean) << ' ' << fmt(r.stddev) << "\n";
}

std::vector<CurveRow> read_curve_fragment(std::istream& is) {
  std::string header;
  if (!std::getline(is, header) || header != "step mean std")
    throw std::runtime_error("bad curve fragment header");
  std::vector<CurveRow> rows;
  CurveRow r;
  while (is >> r.step >> r.mean >> r.stddev) rows.push_back(r);
  return rows;
}

std::string aggregate_curves(const std::vector<RunCurve>& runs) {
  static const std::array<std::string, 3> kVariants = {"topline", "unsup",
                                                       "graph"};
  for (const RunCurve& run : runs) {
    bool known = false;
    for (const auto& v : kVariants) known = known || run.variant == v;
    if (!known)
      throw std::runtime_error("unknown curve variant '" + run.variant +
                               "' for " + run.label);
  }

  // shared step grid, taken from the first run
  std::vector<long> steps;
  for (const RunCurve& run : runs) {
    if (steps.empty()) {
      for (const CurveRow& r : run.rows) steps.push_back(r.step);
    }
  }
  std::string offenders;
  for (const RunCurve& run : runs) {
    bool same = run.rows.size() == steps.size();
    for (std::size_t i = 0; same && i < steps.size(); ++i)
      same = run.rows[i].step == steps[i];
    if (!same) offenders += (offenders.empty() ? "" : ", ") + run.label;
  }
  if (!offenders.empty())
    throw std::runtime_error("step grids do not match for: " + offenders);

  std::ostringstream os;
  os << kCurveHeader << "\n";
  for (std::size_t i = 0; i < steps.size(); ++i) {
    os << steps[i];
    for (const auto& variant : kVariants) {
      double sum = 0.0, sum2 = 0.0;
      int n = 0;
      for (const RunCurve& run : runs) {
        if (run.variant != variant) continue;
        sum += run.rows[i].mean;
        sum2 += run.rows[i].mean * run.rows[i].mean;
        ++n;
      }
      if (n == 0) {
        os << " nan nan";
      } else {
        double mean = sum / n;
        double var = n > 1 ? (sum2 - n * mean * mean) / (n - 1) : 0.0;
        os << ' ' << fmt(mean) << ' ' << fmt(std::sqrt(std::max(0.0, var)));
      }
    }
    os << "\n";
  }
  return os.str();
}

CurveTable parse_curve_file(std::istream& is) {
  std::string header;
  if (!std::getline(is, header) || header != kCurveHeader)
    throw std::runtime_error("bad curve file header");
  CurveTable table;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    long step;
    std::array<double, 6> vals;
    if (!(ls >> step)) throw std::runtime_error("bad curve file row: " + line);
    for (double& v : vals) {
      std::string tok;
      if (!(ls >> tok)) throw std::runtime_error("bad curve file row: " + line);
      char* end = nullptr;
      v = std::strtod(tok.c_str(), &end);  // accepts nan, unlike operator>>
      if (end == tok.c_str() || *end != '\0')
        throw std::runtime_error("bad curve file row: " + line);
    }
    if (!table.steps.empty() && step <= table.steps.back())
      throw std::runtime_error("curve file steps not strictly increasing");
    table.steps.push_back(step);
    table.values.push_back(vals);
  }
  return table;
}

}  // namespace reachrl
