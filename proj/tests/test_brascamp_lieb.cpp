#include <doctest.h>

#include "bl_data.hpp"
#include "rlab/random.hpp"

#include <cmath>

using namespace rlab;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd e(int n, int i)
{
  VectorXd v = VectorXd::Zero(n);
  v(i) = 1.0;
  return v;
}

double fitted_slope(const std::vector<double> &x, const std::vector<double> &y)
{
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

} // namespace

TEST_CASE("datum validation")
{
  CHECK_THROWS_AS(BLDatum({MatrixXd{{1.0, 0.0}, {2.0, 0.0}}}, {0.5}), PreconditionError);
  CHECK_THROWS_AS(BLDatum({MatrixXd::Identity(2, 2)}, {1.5}), PreconditionError);
  CHECK_THROWS_AS(BLDatum({MatrixXd::Identity(2, 2)}, {0.0}), PreconditionError);
  CHECK_THROWS_AS(BLDatum({MatrixXd::Identity(2, 2), MatrixXd::Identity(3, 3)}, {0.5, 0.5}), PreconditionError);
}

TEST_CASE("bl_functional examples")
{
  const BLDatum lw = testdata::loomis_whitney();
  CHECK(bl_functional(Subspace::zero(3), lw) == 0.0);
  CHECK(bl_functional(Subspace::whole(3), lw) == 0.0);
  CHECK(bl_functional(span_of<double>({e(2, 1)}), testdata::duplicated_kernel()) == 1.0);
}

TEST_CASE("alpha on structured data")
{
  const AlphaWitness lw = alpha_lower_bound(testdata::loomis_whitney(), 4, 8, 1);
  CHECK(lw.alpha == 0.0);
  CHECK(lw.exhaustive);
  CHECK(alpha_lower_bound(testdata::identity_datum(3), 4, 8, 1).alpha == 0.0);
  const AlphaWitness dup = alpha_lower_bound(testdata::duplicated_kernel(), 4, 8, 1);
  CHECK(dup.alpha == 1.0);
  CHECK(same_subspace(dup.witness, span_of<double>({e(2, 1)})));
  CHECK(bl_functional(dup.witness, testdata::duplicated_kernel()) == dup.alpha);
}

TEST_CASE("finiteness verdicts")
{
  CHECK(is_finite_blreg(testdata::loomis_whitney()).finite);
  const FinitenessVerdict dup = is_finite_blreg(testdata::duplicated_kernel());
  CHECK_FALSE(dup.finite);
  CHECK(dup.evidence.witness.dim() == 1);
  // k = n orthonormal kernel lines with p = 1/(k−1).
  std::vector<MatrixXd> maps;
  for (int j = 0; j < 4; ++j) maps.push_back(projection_with_kernel(span_of<double>({e(4, j)})));
  CHECK(is_finite_blreg(BLDatum(maps, std::vector<double>(4, 1.0 / 3.0))).finite);
}

TEST_CASE("functional bounds and monotone search")
{
  for (int trial = 0; trial < 30; ++trial) {
    Rng rng(derive_seed(21, {static_cast<std::uint64_t>(trial)}));
    const int n = std::uniform_int_distribution<int>(2, 5)(rng);
    const int k = std::uniform_int_distribution<int>(2, 4)(rng);
    std::vector<MatrixXd> maps;
    std::vector<double> p;
    for (int j = 0; j < k; ++j) {
      const int nj = std::uniform_int_distribution<int>(1, n)(rng);
      maps.push_back(gaussian_matrix(rng, nj, n));
      p.push_back(uniform(rng, 0.1, 1.0));
    }
    const BLDatum datum(maps, p);
    for (int d = 0; d <= n; ++d) {
      Subspace V = orthonormalize(gaussian_matrix(rng, n, d));
      CHECK(bl_functional(V, datum) <= static_cast<double>(V.dim()));
    }
    double prev = -1.0;
    for (int budget : {0, 2, 4, 8}) {
      const double a = alpha_lower_bound(datum, 2, budget, 5).alpha;
      CHECK(a >= prev);
      prev = a;
    }
    CHECK(alpha_lower_bound(datum, 4, 8, 5).alpha >= alpha_lower_bound(datum, 1, 8, 5).alpha);
  }
}

TEST_CASE("wedge and alpha report examples")
{
  auto run = [](std::vector<Subspace> ks) {
    std::vector<MatrixXd> maps;
    for (const auto &K : ks) maps.push_back(projection_with_kernel(K));
    return wedge_alpha_report(ks, maps);
  };
  WedgeAlphaReport a = run({span_of<double>({e(2, 0)}), span_of<double>({e(2, 1)})});
  CHECK(a.wedge == doctest::Approx(1.0));
  CHECK(a.alpha == 0.0);
  CHECK(a.agree);
  WedgeAlphaReport b = run({span_of<double>({e(2, 0)}), span_of<double>({e(2, 0)})});
  CHECK(b.wedge < 1e-12);
  CHECK(b.alpha == 1.0);
  CHECK(b.agree);
  WedgeAlphaReport c = run({span_of<double>({e(3, 0)}), span_of<double>({e(3, 1)}), span_of<double>({e(3, 2)})});
  CHECK(c.wedge == doctest::Approx(1.0));
  CHECK(c.alpha == 0.0);
  CHECK(c.agree);
  CHECK_THROWS_AS(wedge_alpha_report({span_of<double>({e(2, 0)}), span_of<double>({e(2, 1)})},
                                            {MatrixXd{{1.0, 0.0}}, MatrixXd{{1.0, 0.0}}}),
                  PreconditionError);
}

TEST_CASE("blreg lower bounds")
{
  CHECK(blreg_lower_bound(testdata::loomis_whitney(), 2, 3, 1) >= 1.0);
  for (double R : {1.0, 2.0, 3.5}) {
    const double r = blreg_lower_bound(testdata::identity_datum(2), R, 3, 2);
    CHECK(std::abs(r - 1.0) <= 1e-6);
  }
  std::vector<double> Rs{2, 4, 8}, ratios;
  for (double R : Rs) ratios.push_back(blreg_lower_bound(testdata::duplicated_kernel(), R, 3, 3));
  CHECK(std::abs(fitted_slope(Rs, ratios) - 1.0) <= 0.3);
  BLRegOptions tight;
  tight.grid_cap = 1000;
  CHECK_THROWS_AS(blreg_lower_bound(testdata::loomis_whitney(), 8, 1, 1, tight), BudgetError);
}

TEST_CASE("blreg is flat for a scaling-critical finite datum")
{
  // Loomis–Whitney: Σ p_j n_j = n and α = 0.
  std::vector<double> Rs{2, 4, 8}, ratios;
  for (double R : Rs) ratios.push_back(blreg_lower_bound(testdata::loomis_whitney(), R, 4, 9));
  for (std::size_t i = 1; i < ratios.size(); ++i) CHECK(ratios[i] >= ratios[i - 1] - 1e-12);
  CHECK(fitted_slope(Rs, ratios) <= 0.1);
}

TEST_CASE("quantitative wedge check")
{
  const double t = M_PI / 6;
  WedgeCheckReport r = quantitative_wedge_check(
      {span_of<double>({e(2, 0)}), span_of<double>({VectorXd{{std::cos(t), std::sin(t)}}})}, 4, 3, 1);
  CHECK(r.predicted == doctest::Approx(2.0));
  CHECK(r.ratio > 0.5);
  CHECK(r.ratio < 2.0);
  WedgeCheckReport o = quantitative_wedge_check({span_of<double>({e(2, 0)}), span_of<double>({e(2, 1)})}, 4, 3, 1);
  CHECK(o.predicted == doctest::Approx(1.0));
  // Three nearly coplanar lines in ℝ³.
  const double eps = 0.2;
  std::vector<Subspace> lines{span_of<double>({e(3, 0)}), span_of<double>({e(3, 1)}),
                              span_of<double>({VectorXd{{1.0, 1.0, eps}}})};
  WedgeCheckReport c = quantitative_wedge_check(lines, 3, 3, 1);
  CHECK(c.predicted == doctest::Approx(std::pow(c.wedge, -0.5)));
  CHECK_THROWS_AS(quantitative_wedge_check({span_of<double>({e(2, 0)}), span_of<double>({e(2, 0)})}, 2, 1, 1),
                  PreconditionError);
}

TEST_CASE("subensemble monotonicity")
{
  Rng rng(31);
  MatrixXd child = gaussian_matrix(rng, 2, 4);
  MatrixXd parent = child.topRows(1);
  CHECK(subensemble_monotonicity_check({parent}, {child}, 100, 1));
  CHECK(subensemble_monotonicity_check({child}, {child}, 50, 1));
  CHECK(subensemble_monotonicity_check({gaussian_matrix(rng, 2, 4)}, {MatrixXd::Identity(4, 4)}, 50, 1));
  CHECK_THROWS_AS(subensemble_monotonicity_check({gaussian_matrix(rng, 1, 4)}, {child}, 10, 1), PreconditionError);
}

TEST_CASE("random kernel configurations")
{
  Rng rng(31);
  for (int t = 0; t < 20; ++t) {
    const int n = 3 + t % 2;
    const KernelConfiguration dep = random_kernel_configuration(n, 2, KernelConfigKind::Dependent, rng);
    CHECK(wedge_magnitude(dep.kernels) < 1e-12);
    const KernelConfiguration over = random_kernel_configuration(n, 2, KernelConfigKind::Oversubscribed, rng);
    CHECK(over.kernels[0].dim() + over.kernels[1].dim() == n + 1);
    const KernelConfiguration gen = random_kernel_configuration(n, n, KernelConfigKind::Generic, rng);
    long total = 0;
    for (const auto &K : gen.kernels) total += K.dim();
    CHECK(total <= n);
    CHECK(wedge_magnitude(gen.kernels) > 1e-6);
  }
  CHECK_THROWS_AS(random_kernel_configuration(2, 2, KernelConfigKind::Oversubscribed, rng), PreconditionError);
}

TEST_CASE("wedge and alpha agree on every swept configuration")
{
  const WedgeAlphaSweep sw = wedge_alpha_sweep(48, 5);
  CHECK(sw.agreements == 48);
  int zero = 0;
  for (const auto &r : sw.reports) zero += r.wedge <= 1e-8 ? 1 : 0;
  CHECK(zero > 10);
  CHECK(zero < 38);
}
