#pragma once

#include <Eigen/Dense>

#include <string>

namespace gmrfglm {

/// Contrast c^T W_{.,n} > gamma. When `percent` is set, gamma is a
/// percentage of the dataset grand mean and must be resolved before use.
struct Contrast {
  std::string name;
  Eigen::VectorXd c;
  double gamma = 0.0;
  bool percent = false;

  /// Threshold in signal units.
  double threshold(double grand_mean) const { return percent ? gamma / 100.0 * grand_mean : gamma; }
};

/// Parses "name:w1,...,wK:gamma" where gamma may end in '%'.
Contrast parse_contrast(const std::string &text);

} // namespace gmrfglm
