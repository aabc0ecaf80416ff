#pragma once

#include <Eigen/Dense>

#include <vector>

namespace gmrfglm {

/// Sample autocorrelation at lag j (autocovariances normalized by n).
double autocorrelation(const Eigen::VectorXd &trace, int lag);

/// IF = 1 + 2 sum_j rho_j, truncated before the first lag with rho_j <= 0.
/// Requires at least 100 values; a constant trace throws "zero variance".
double inefficiency_factor(const Eigen::VectorXd &trace);

/// Monte Carlo standard error of the trace mean, sd * sqrt(IF / n).
double mc_standard_error(const Eigen::VectorXd &trace);

struct ConvergenceCurve {
  double final_value = 0.0;
  std::vector<double> rel_error;
  /// 1-based index of the first entry with rel_error < tol, or -1.
  int first_within = -1;
};

/// eps_j = |x_j / final - 1|. Throws when final is zero.
ConvergenceCurve convergence_curve(const Eigen::VectorXd &trace, double final_value,
                                   double tol = 0.01);

/// One curve per column of `traces` (iterations x parameters), using the
/// last row as the final value. With cumulative = true the curves are
/// computed on running means (the MCMC variant).
std::vector<ConvergenceCurve> convergence_report(const Eigen::MatrixXd &traces,
                                                 bool cumulative = false, double tol = 0.01);

Eigen::MatrixXd cumulative_mean(const Eigen::MatrixXd &traces);

} // namespace gmrfglm
