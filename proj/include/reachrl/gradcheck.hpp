#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "reachrl/net.hpp"

namespace reachrl {

struct GradCheckResult {
  std::string family;
  double max_rel_err = 0.0;
  int draws = 0;
};

// Central finite differences of a scalar loss over a flat parameter vector.
VectorXd finite_difference_gradient(
    const std::function<double(const VectorXd&)>& loss, const VectorXd& params,
    double eps = 1e-5);

// rel err = |a - f| / max(1e-6, |a| + |f|), maximised over components
double max_relative_error(const VectorXd& analytic, const VectorXd& fd);

// Finite-difference validation of every loss family used in the project:
// net-mse, rnet-bce, critic, actor, temperature. `corrupt` perturbs one
// analytic gradient on purpose (negative-control hook for the CLI tests).
std::vector<GradCheckResult> run_gradient_checks(int draws, std::uint64_t seed,
                                                 bool corrupt = false);

}  // namespace reachrl
