#include "rlab/fit.hpp"

#include "rlab/errors.hpp"

#include <cmath>

namespace rlab {

ScalingFit fit_loglog(const std::vector<double> &x, const std::vector<double> &y)
{
  require(x.size() == y.size(), "fit_loglog: length mismatch");
  require(x.size() >= 3, "fit_loglog: need at least three points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0 && y[i] > 0 && std::isfinite(x[i]) && std::isfinite(y[i]), "fit_loglog: values must be positive");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx, dy = std::log(y[i]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  require(sxx > 0, "fit_loglog: x values must not all coincide");
  ScalingFit f;
  f.xs = x;
  f.ys = y;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

} // namespace rlab
