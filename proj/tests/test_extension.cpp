#include <doctest.h>

#include "rlab/bump.hpp"
#include "rlab/catalog.hpp"
#include "rlab/extension.hpp"
#include "rlab/random.hpp"

#include <cmath>

using namespace rlab;
using Eigen::VectorXd;

namespace {

AmplitudeSpec indicator(int d, double r)
{
  AmplitudeSpec a;
  a.kind = AmplitudeSpec::Kind::Indicator;
  a.center = VectorXd::Zero(d);
  a.radius = r;
  return a;
}

AmplitudeSpec bump(int d, double r)
{
  AmplitudeSpec a;
  a.center = VectorXd::Zero(d);
  a.radius = r;
  return a;
}

Density constant_one() { return {[](const VectorXd &) { return cplx(1.0); }, std::nullopt}; }

// Composite Simpson on [−r, r] for ∫ e^{i(x₁u + x₂u²)} du.
cplx parabola_oracle(double x1, double x2, double r, int panels)
{
  const double h = 2 * r / panels;
  cplx sum = 0.0;
  for (int i = 0; i <= panels; ++i) {
    const double u = -r + i * h;
    const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    sum += w * std::polar(1.0, x1 * u + x2 * u * u);
  }
  return sum * h / 3.0;
}

} // namespace

TEST_CASE("extension of the constant on a flat box matches the sinc product")
{
  const PolyGraphParam flat = PolyGraphParam::flat(2, 1, 1.0);
  QuadratureSpec q{32, QuadratureRule::GaussLegendre, true};
  Rng rng(11);
  for (int t = 0; t < 10; ++t) {
    const VectorXd x = uniform_box(rng, 3, 20.0);
    const double r = 0.6;
    cplx exact = 1.0;
    for (int i = 0; i < 2; ++i) exact *= 2 * std::sin(r * x(i)) / x(i);
    const ExtensionValue v = extend(flat, indicator(2, r), constant_one(), x, q);
    CHECK(std::abs(v.value - exact) < 1e-10);
    CHECK(v.error_estimate < 1e-8);
  }
}

TEST_CASE("extension on a parabola against Simpson")
{
  const PolyGraphParam par = PolyGraphParam::from_coefficients(1, 1, {{"2", {1.0}}}, 1.0);
  QuadratureSpec q{64, QuadratureRule::GaussLegendre, true};
  for (double x2 : {0.0, 3.0, -17.0, 40.0}) {
    const VectorXd x{{5.0, x2}};
    const cplx ref = parabola_oracle(5.0, x2, 0.7, 20000);
    const ExtensionValue v = extend(par, indicator(1, 0.7), constant_one(), x, q);
    CHECK(std::abs(v.value - ref) < 1e-9);
  }
}

TEST_CASE("extension basics")
{
  const PolyGraphParam par = PolyGraphParam::from_coefficients(2, 1, {{"2,0", {1.0}}, {"0,2", {1.0}}}, 1.0);
  const AmplitudeSpec a = bump(2, 0.5);
  Density f{[](const VectorXd &u) { return std::polar(1.0 + u(0), 4 * u(1)); }, std::nullopt};
  QuadratureSpec q{96, QuadratureRule::Midpoint, true};

  // At x = 0 the extension is the integral of f·a.
  cplx mass = 0.0;
  double abs_mass = 0.0;
  {
    const TensorGrid g = tensor_grid(a.support(), {400, 400}, QuadratureRule::Midpoint, 1'000'000);
    for (Eigen::Index j = 0; j < g.weights.size(); ++j) {
      mass += f(g.nodes.col(j)) * a(g.nodes.col(j)) * g.weights(j);
      abs_mass += std::abs(f(g.nodes.col(j))) * a(g.nodes.col(j)) * g.weights(j);
    }
  }
  CHECK(std::abs(extend(par, a, f, VectorXd::Zero(3), q).value - mass) < 1e-9);

  Density zero{[](const VectorXd &) { return cplx(0.0); }, std::nullopt};
  CHECK(std::abs(extend(par, a, zero, VectorXd::Constant(3, 2.0), q).value) == 0.0);

  Rng rng(3);
  for (int t = 0; t < 10; ++t) {
    const VectorXd x = uniform_box(rng, 3, 30.0);
    const ExtensionValue v = extend(par, a, f, x, q);
    CHECK(std::abs(v.value) <= abs_mass * (1 + 1e-9));
    // The halving estimate bounds the error of the finer rule.
    const ExtensionValue fine = extend(par, a, f, x, QuadratureSpec{384, QuadratureRule::Midpoint, true});
    CHECK(std::abs(v.value - fine.value) <= v.error_estimate);
    CHECK(fine.error_estimate < v.error_estimate);
  }
}

TEST_CASE("extension preconditions")
{
  const PolyGraphParam par = PolyGraphParam::flat(2, 1, 1.0);
  CHECK_THROWS_AS(extend(par, bump(2, 1.2), constant_one(), VectorXd::Zero(3)), PreconditionError);
  CHECK_THROWS_AS(extend(par, bump(2, 0.5), constant_one(), VectorXd::Zero(2)), PreconditionError);
  QuadratureSpec fixed{16, QuadratureRule::Midpoint, false};
  CHECK_THROWS_AS(extend(par, bump(2, 0.5), constant_one(), VectorXd::Constant(3, 500.0), fixed), BudgetError);
}

TEST_CASE("grid density interpolates multilinear data exactly")
{
  Density f{[](const VectorXd &u) { return cplx(1 + 2 * u(0) - u(1) + 0.5 * u(0) * u(1), u(1)); }, std::nullopt};
  const Box box{VectorXd::Constant(2, -1.0), VectorXd::Constant(2, 1.0)};
  const GridDensity g(box, {5, 7}, f);
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const VectorXd u = uniform_box(rng, 2, 1.0);
    CHECK(std::abs(g(u) - f(u)) < 1e-12);
  }
  CHECK(g(VectorXd::Constant(2, 1.5)) == cplx(0.0));
}

TEST_CASE("slice decomposition reconstructs the extension")
{
  const double mu = 1.0 / 16;
  const AmplitudeSpec a = bump(2, 0.5);
  QuadratureSpec ref_q{400, QuadratureRule::GaussLegendre, true};

  SUBCASE("paraboloid chain")
  {
    const NestedFamily F = catalog::paraboloid_chain(3, 4.0);
    Density f{[mu](const VectorXd &u) { return exp_bump(u(1) / (0.9 * mu)) * std::polar(1.0, 3 * u(0)); },
              Box{VectorXd{{-1.0, -0.9 * mu}}, VectorXd{{1.0, 0.9 * mu}}}};
    const SliceDecomposition dec = slice_decompose(F, 1, a, f, VectorXd::Constant(1, mu));
    CHECK(dec.normalisation() == doctest::Approx(1.0));
    Rng rng(5);
    for (int t = 0; t < 8; ++t) {
      const VectorXd x = uniform_box(rng, 3, 8.0);
      const cplx ref = extend(F.sigma0(), a, f, x, ref_q).value;
      CHECK(std::abs(dec.evaluate(x) - ref) <= 1e-6 * std::abs(ref));
    }
  }
  SUBCASE("curved chain")
  {
    const NestedFamily F = catalog::curved_chain(4.0);
    Density f{[mu](const VectorXd &u) {
                return exp_bump((u(1) - 0.5 * u(0) * u(0)) / (0.8 * mu)) * std::polar(1.0, 3 * u(0));
              },
              Box{VectorXd{{-1.0, -0.8 * mu}}, VectorXd{{1.0, 0.125 + 0.8 * mu}}}};
    const SliceDecomposition dec = slice_decompose(F, 1, a, f, VectorXd::Constant(1, mu));
    CHECK(dec.normalisation() > 1.0);
    Rng rng(6);
    for (int t = 0; t < 8; ++t) {
      const VectorXd x = uniform_box(rng, 3, 8.0);
      const cplx ref = extend(F.sigma0(), a, f, x, ref_q).value;
      CHECK(std::abs(dec.evaluate(x) - ref) <= 1e-6 * std::abs(ref));
    }
    // Slice data agree with the composed maps.
    const VectorXd eta{{0.02}}, s{{0.1}};
    const VectorXd u = F.phi<double>(0, 1, s, eta);
    CHECK(std::abs(dec.slice_density(eta, s) - f(u)) < 1e-15);
    CHECK(dec.slice_amplitude(eta, s) <= a(u) * phi_jacobian_det(F, 1, s, eta));
    CHECK((dec.slice_surface(eta, VectorXd::Zero(1))).norm() < 1e-15);
  }
}

TEST_CASE("slice decomposition rejects densities off the neighbourhood")
{
  const NestedFamily F = catalog::paraboloid_chain(3, 4.0);
  Density wide{[](const VectorXd &u) { return cplx(exp_bump(u(1) / 0.3)); }, std::nullopt};
  CHECK_THROWS_AS(slice_decompose(F, 1, bump(2, 0.5), wide, VectorXd::Constant(1, 1.0 / 16)), PreconditionError);
}

TEST_CASE("local constancy expansion")
{
  const AmplitudeSpec a = bump(2, 0.5);
  Density g{[](const VectorXd &s) { return cplx(std::cos(2 * s(0)), 0.3 * s(0)); }, std::nullopt};
  const double R = 8.0;
  const VectorXd mu = VectorXd::Constant(1, 0.5 / R);

  SUBCASE("affine chain: the zeroth order term is exact")
  {
    const LocalConstancyReport rep = local_constancy_error(catalog::linear_chain(3, 4.0), 1, g, a, R, mu, 2);
    for (double e : rep.errors) CHECK(e < 1e-12);
  }
  SUBCASE("curved chain: geometric decay in the order")
  {
    const LocalConstancyReport rep = local_constancy_error(catalog::curved_chain(4.0), 1, g, a, R, mu, 3);
    REQUIRE(rep.errors.size() == 4);
    for (std::size_t N = 1; N < 4; ++N) CHECK(rep.errors[N] <= 0.5 * rep.errors[N - 1]);
  }
  SUBCASE("scales must sit below 1/R")
  {
    CHECK_THROWS_AS(local_constancy_error(catalog::curved_chain(4.0), 1, g, a, R, VectorXd::Constant(1, 0.2), 1),
                    PreconditionError);
  }
}
