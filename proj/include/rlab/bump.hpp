#pragma once

#include <cmath>

namespace rlab {

// C∞ step: 0 for t ≤ 0, 1 for t ≥ 1, built from h(t) = e^{−1/t}.
inline double smooth_step(double t)
{
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

// exp(1 − 1/(1 − t²)) on |t| < 1, zero outside; equals 1 at t = 0.
inline double exp_bump(double t)
{
  const double q = 1.0 - t * t;
  return q > 0.0 ? std::exp(1.0 - 1.0 / q) : 0.0;
}

// 1 on |t| ≤ inner, 0 on |t| ≥ outer, smooth in between.
inline double plateau(double t, double inner, double outer)
{
  return smooth_step((outer - std::abs(t)) / (outer - inner));
}

// Wave-packet bump profile: 1 on [−1,1], 0 outside [−2,2].
inline double packet_bump(double t) { return plateau(t, 1.0, 2.0); }

} // namespace rlab
