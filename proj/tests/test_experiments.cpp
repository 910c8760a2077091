#include <doctest.h>

#include "rlab/catalog.hpp"
#include "rlab/experiments.hpp"
#include "rlab/random.hpp"

#include <cmath>

using namespace rlab;
using Eigen::VectorXd;

TEST_CASE("log-log fit")
{
  const ScalingFit id = fit_loglog({1, 2, 4, 8}, {1, 2, 4, 8});
  CHECK(id.slope == doctest::Approx(1.0));
  CHECK(id.r_squared == doctest::Approx(1.0));
  CHECK(fit_loglog({1, 2, 4}, {5, 5, 5}).slope == doctest::Approx(0.0));
  const ScalingFit pw = fit_loglog({1, 2, 4, 8}, {3, 12, 48, 192});
  CHECK(pw.slope == doctest::Approx(2.0));
  CHECK(pw.intercept == doctest::Approx(std::log(3.0)));
  CHECK(pw.xs.size() == 4);

  Rng rng(5);
  std::vector<double> xs, ys;
  for (double x = 1; x <= 64; x *= 2) {
    xs.push_back(x);
    ys.push_back(x * x * (1 + 0.01 * uniform(rng, -1.0, 1.0)));
  }
  CHECK(std::abs(fit_loglog(xs, ys).slope - 2) < 0.05);
  CHECK_THROWS_AS(fit_loglog({8}, {1}), PreconditionError);
  CHECK_THROWS_AS(fit_loglog({1, 2}, {1, 2}), PreconditionError);
  CHECK_THROWS_AS(fit_loglog({1, 2, 4}, {1, 0, 2}), PreconditionError);
}

TEST_CASE("trigonometric test densities")
{
  const Box box{VectorXd{{-0.5, -0.1}}, VectorXd{{0.5, 0.1}}};
  const Density f = trig_density(box, 2, 9);
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const VectorXd u = uniform_box(rng, 2, 0.6);
    const double a = std::abs(f(u));
    CHECK(a <= 1.0);
    if (!box.contains(u)) CHECK(a == 0.0);
  }
  // The same seed on a rescaled box is the rescaled density.
  const Density g = trig_density(Box{VectorXd{{-1.0, -1.0}}, VectorXd{{1.0, 1.0}}}, 2, 9);
  for (int t = 0; t < 20; ++t) {
    const VectorXd s = uniform_box(rng, 2, 1.0);
    CHECK(std::abs(f(VectorXd{{0.5 * s(0), 0.1 * s(1)}}) - g(s)) < 1e-14);
  }
  const Density one{[](const VectorXd &) { return cplx(1.0); }, std::nullopt};
  CHECK(l2_norm(one, box, 8) == doctest::Approx(std::sqrt(0.2)));
}

TEST_CASE("stratified cube integral")
{
  StratifiedOptions o;
  o.cells_per_axis = 4;
  o.samples = 4000;
  // Constants are exact; an affine function is unbiased.
  auto affine = [](const VectorXd &x) { return VectorXd{{1.0, 2.0 + x(0) - 3 * x(2)}}; };
  for (int shells : {0, 2}) {
    o.shells = shells;
    const StratifiedEstimate e = stratified_cube_integral(affine, 3, 4.0, o, 3);
    CHECK(e.value(0) == doctest::Approx(512.0).epsilon(1e-12));
    CHECK(std::abs(e.value(1) - 1024.0) < 4 * e.std_error(1));
    CHECK(e.std_error(0) == doctest::Approx(0.0));
  }
  // A Gaussian, with dyadic intervals.
  o.shells = 3;
  o.samples = 20000;
  auto gauss = [](const VectorXd &x) { return VectorXd::Constant(1, std::exp(-x.squaredNorm())); };
  const StratifiedEstimate g = stratified_cube_integral(gauss, 2, 16.0, o, 4);
  CHECK(std::abs(g.value(0) - M_PI) < 4 * g.std_error(0) + 1e-9);
  CHECK(g.std_error(0) < 0.01 * M_PI);
  o.samples = 10;
  CHECK_THROWS_AS(stratified_cube_integral(gauss, 2, 16.0, o, 4), BudgetError);
}

TEST_CASE("example ensembles")
{
  CHECK(predicted_delta_exponent(1, 2) == 1.0);
  CHECK(predicted_delta_exponent(2, 2) == 3.0);
  CHECK(predicted_delta_exponent(0, 3) == 0.0);
  const Ensemble e3 = catalog::paraboloid_example(3, 2);
  REQUIRE(e3.families.size() == 2);
  CHECK(e3.families.back().depth() == 1);
  CHECK(e3.exponents == std::vector<double>{2.0, 2.0});
  const BLDatum L = ensemble_datum(e3);
  CHECK(L.kernels()[1].dim() == 2);
  CHECK(is_finite_blreg(L).finite);
  CHECK(is_finite_blreg(ensemble_datum(catalog::transverse_planes())).finite);
  CHECK_FALSE(is_finite_blreg(ensemble_datum(catalog::coincident_planes())).finite);
}

TEST_CASE("restriction scaling on the paraboloid")
{
  ExperimentOptions o;
  o.mc.samples = 8000;
  const std::vector<double> deltas{0.25, 0.125, 0.0625, 0.03125, 0.015625};
  const ScalingResult r = restriction_scaling_experiment(catalog::paraboloid_example(3, 2), 32, deltas, o, 1);
  CHECK(r.predicted == 1.0);
  CHECK(r.rows.size() == 5);
  CHECK(std::abs(r.fit.slope - 1.0) <= 0.15);
  for (const auto &row : r.rows) CHECK(row.std_error < 0.05 * row.integral);

  ExperimentOptions twice = o;
  twice.mc.samples = 16000;
  CHECK(std::abs(restriction_scaling_experiment(catalog::paraboloid_example(3, 2), 32, deltas, twice, 1).fit.slope - r.fit.slope) <=
        0.02);

  // With k = n nothing is localised.
  ExperimentOptions small;
  small.mc.samples = 1000;
  small.mc.cells_per_axis = 4;
  const ScalingResult flat = restriction_scaling_experiment(catalog::paraboloid_example(3, 3), 4, {0.5, 0.25, 0.125}, small, 2);
  CHECK(flat.predicted == 0.0);
  CHECK(std::abs(flat.fit.slope) < 1e-12);
}

TEST_CASE("restriction scaling preconditions")
{
  ExperimentOptions o;
  o.mc.samples = 1000;
  o.mc.cells_per_axis = 4;
  const Ensemble e = catalog::paraboloid_example(3, 2);
  CHECK_THROWS_AS(restriction_scaling_experiment(e, 8, {0.125, 0.25, 0.5}, o, 0), PreconditionError);
  CHECK_THROWS_AS(restriction_scaling_experiment(e, 8, {1.0, 0.5, 0.25}, o, 0), PreconditionError);
  CHECK_THROWS_AS(restriction_scaling_experiment(catalog::coincident_planes(), 8, {0.5, 0.25, 0.125}, o, 0),
                  PreconditionError);
  ExperimentOptions fixed = o;
  fixed.quad.adapt = false;
  CHECK_THROWS_AS(restriction_scaling_experiment(e, 32, {0.5, 0.25, 0.125}, fixed, 0), BudgetError);
}

TEST_CASE("growth in R: transverse planes against coincident planes")
{
  ExperimentOptions o;
  o.mc.samples = 8000;
  o.mc.shells = 2;
  o.mc.cells_per_axis = 4;
  o.degree = 1;
  o.support_radius = 0.9;
  const std::vector<double> Rs{8, 16, 32};
  const ScalingResult t = r_growth_experiment(catalog::transverse_planes(), Rs, o, 1);
  CHECK(t.fit.slope <= 0.1);
  CHECK_THROWS_AS(r_growth_experiment(catalog::coincident_planes(), Rs, o, 1), PreconditionError);
  o.require_finite = false;
  const ScalingResult c = r_growth_experiment(catalog::coincident_planes(), Rs, o, 1);
  CHECK(c.fit.slope >= 0.8);
  CHECK_THROWS_AS(r_growth_experiment(catalog::transverse_planes(), {8}, o, 1), PreconditionError);
}
