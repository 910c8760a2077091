#pragma once

#include <vector>

namespace rlab {

struct ScalingFit
{
  std::vector<double> xs;
  std::vector<double> ys;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Ordinary least squares of log y on log x; needs at least three points, all positive.
ScalingFit fit_loglog(const std::vector<double> &xs, const std::vector<double> &ys);

} // namespace rlab
