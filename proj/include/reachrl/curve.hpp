#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace reachrl {

struct CurveRow {
  long step = 0;
  double mean = 0.0;
  double stddev = 0.0;
};

// Per-run fragment: header `step mean std`, one row per evaluation.
void write_curve_fragment(std::ostream& os, const std::vector<CurveRow>& rows);
std::vector<CurveRow> read_curve_fragment(std::istream& is);

struct RunCurve {
  std::string variant;  // topline | unsup | graph
  std::string label;    // used in error messages (e.g. the run directory)
  std::vector<CurveRow> rows;
};

inline const char* kCurveHeader =
    "step topline-mean topline-std unsup-mean unsup-std graph-mean graph-std";

// Cross-seed aggregation: per variant, mean and sample standard deviation
// of the run means at each step. Variants with no runs emit nan columns.
// Throws when the runs disagree on the step grid, listing the offenders.
std::string aggregate_curves(const std::vector<RunCurve>& runs);

struct CurveTable {
  std::vector<long> steps;
  // columns in header order: 3 variants x (mean, std)
  std::vector<std::array<double, 6>> values;
};

CurveTable parse_curve_file(std::istream& is);

}  // namespace reachrl
