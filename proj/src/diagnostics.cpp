#include "gmrfglm/diagnostics.hpp"
#include "gmrfglm/error.hpp"

#include <cmath>

namespace gmrfglm {

namespace {

double centered_variance(const Eigen::VectorXd &c) { return c.squaredNorm() / c.size(); }

} // namespace

double autocorrelation(const Eigen::VectorXd &trace, int lag) {
  const Eigen::Index n = trace.size();
  if (lag < 0 || lag >= n)
    throw Error("autocorrelation: lag out of range");
  const Eigen::VectorXd c = trace.array() - trace.mean();
  const double v = centered_variance(c);
  if (!(v > 0.0) || trace.maxCoeff() == trace.minCoeff())
    throw Error("autocorrelation: zero variance");
  return c.head(n - lag).dot(c.tail(n - lag)) / n / v;
}

double inefficiency_factor(const Eigen::VectorXd &trace) {
  const Eigen::Index n = trace.size();
  if (n < 100)
    throw Error("inefficiency_factor: trace must have at least 100 values");
  const Eigen::VectorXd c = trace.array() - trace.mean();
  const double v = centered_variance(c);
  if (!(v > 0.0) || !std::isfinite(v) || trace.maxCoeff() == trace.minCoeff())
    throw Error("inefficiency_factor: zero variance");
  double sum = 0.0;
  for (Eigen::Index j = 1; j < n; ++j) {
    const double rho = c.head(n - j).dot(c.tail(n - j)) / n / v;
    if (!(rho > 0.0))
      break;
    sum += rho;
  }
  return 1.0 + 2.0 * sum;
}

double mc_standard_error(const Eigen::VectorXd &trace) {
  const double n = static_cast<double>(trace.size());
  const Eigen::VectorXd c = trace.array() - trace.mean();
  const double sd = std::sqrt(c.squaredNorm() / (n - 1.0));
  return sd * std::sqrt(inefficiency_factor(trace) / n);
}

ConvergenceCurve convergence_curve(const Eigen::VectorXd &trace, double final_value, double tol) {
  if (final_value == 0.0)
    throw Error("convergence_report: final value is zero");
  ConvergenceCurve c;
  c.final_value = final_value;
  c.rel_error.resize(trace.size());
  for (Eigen::Index j = 0; j < trace.size(); ++j) {
    c.rel_error[j] = std::abs(trace[j] / final_value - 1.0);
    if (c.first_within < 0 && c.rel_error[j] < tol)
      c.first_within = static_cast<int>(j) + 1;
  }
  return c;
}

Eigen::MatrixXd cumulative_mean(const Eigen::MatrixXd &traces) {
  Eigen::MatrixXd out(traces.rows(), traces.cols());
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(traces.cols());
  for (Eigen::Index i = 0; i < traces.rows(); ++i) {
    acc += traces.row(i);
    out.row(i) = acc / static_cast<double>(i + 1);
  }
  return out;
}

std::vector<ConvergenceCurve> convergence_report(const Eigen::MatrixXd &traces, bool cumulative,
                                                 double tol) {
  if (traces.rows() == 0)
    throw Error("convergence_report: empty trace");
  const Eigen::MatrixXd t = cumulative ? cumulative_mean(traces) : traces;
  std::vector<ConvergenceCurve> out;
  for (Eigen::Index c = 0; c < t.cols(); ++c)
    out.push_back(convergence_curve(t.col(c), t(t.rows() - 1, c), tol));
  return out;
}

} // namespace gmrfglm
