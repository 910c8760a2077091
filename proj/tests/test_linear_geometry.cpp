#include <doctest.h>

#include "rlab/linear_geometry.hpp"
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

Subspace span(std::initializer_list<VectorXd> vs) { return span_of<double>(vs); }

// Random orthogonal matrix from the QR factorisation of a Gaussian matrix.
MatrixXd random_rotation(Rng &rng, int m)
{
  Eigen::HouseholderQR<MatrixXd> qr(gaussian_matrix(rng, m, m));
  return qr.householderQ();
}

} // namespace

TEST_CASE("orthonormalize examples")
{
  Subspace a = orthonormalize(std::vector<VectorXd>{e(2, 0), 2.0 * e(2, 0)}, 2);
  CHECK(a.dim() == 1);
  CHECK(same_subspace(a, span({e(2, 0)})));
  CHECK(orthonormalize(std::vector<VectorXd>{}, 3).dim() == 0);
  Subspace b = orthonormalize(std::vector<VectorXd>{VectorXd::Ones(2), VectorXd{{1.0, -1.0}}}, 2);
  CHECK(b.dim() == 2);
  CHECK(same_subspace(b, Subspace::whole(2)));
  CHECK_THROWS_AS(orthonormalize(std::vector<VectorXd>{e(2, 0), e(3, 0)}, 2), PreconditionError);
}

TEST_CASE("kernel examples")
{
  CHECK(same_subspace(kernel(MatrixXd{{1.0, 0.0}}), span({e(2, 1)})));
  CHECK(kernel(MatrixXd::Identity(3, 3)).dim() == 0);
  MatrixXd L{{1, 0, 0}, {0, 1, 0}};
  Subspace K = kernel(L);
  CHECK(same_subspace(K, span({e(3, 2)})));
  CHECK((L * K.basis()).norm() <= 1e-10 * L.norm());
}

TEST_CASE("sum and intersection examples")
{
  CHECK(same_subspace(subspace_intersect(span({e(3, 0), e(3, 1)}), span({e(3, 1), e(3, 2)})), span({e(3, 1)})));
  CHECK(same_subspace(subspace_sum(span({e(3, 0)}), span({e(3, 0)})), span({e(3, 0)})));
  VectorXd v{{1.0, 1.0, 0.0}};
  Subspace I = subspace_intersect(span({v}), span({e(3, 0), e(3, 1)}));
  CHECK(I.dim() == 1);
  CHECK(std::abs(std::abs(I.basis().col(0).dot(v / std::sqrt(2.0))) - 1.0) < 1e-12);
  CHECK_THROWS_AS(subspace_sum(span({e(2, 0)}), span({e(3, 0)})), PreconditionError);
}

TEST_CASE("wedge magnitude examples")
{
  CHECK(wedge_magnitude(std::vector<Subspace>{span({e(2, 0)}), span({e(2, 1)})}) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(wedge_magnitude(std::vector<Subspace>{span({e(2, 0)}), span({e(2, 0)})}) < 1e-14);
  const double t = M_PI / 6;
  CHECK(wedge_magnitude(std::vector<Subspace>{span({e(2, 0)}), span({VectorXd{{std::cos(t), std::sin(t)}}})}) ==
        doctest::Approx(0.5).epsilon(1e-14));
  CHECK(wedge_magnitude(std::vector<Subspace>{}) == 1.0);
  CHECK(wedge_magnitude(std::vector<Subspace>{span({e(2, 0)}), span({e(2, 1)}), span({e(2, 0)})}) == 0.0);
}

TEST_CASE("dim_image examples")
{
  CHECK(dim_image(MatrixXd{{1.0, 0.0}}, span({e(2, 1)})) == 0);
  Subspace V = span({e(3, 0), e(3, 2)});
  CHECK(dim_image(MatrixXd::Identity(3, 3), V) == 2);
  CHECK(dim_image(MatrixXd{{1, 0, 0}, {0, 1, 0}}, V) == 1);
}

TEST_CASE("rank-nullity on random maps and subspaces")
{
  for (int trial = 0; trial < 200; ++trial) {
    Rng rng(derive_seed(11, {static_cast<std::uint64_t>(trial)}));
    const int n = std::uniform_int_distribution<int>(1, 6)(rng);
    const int m = std::uniform_int_distribution<int>(1, 6)(rng);
    const int r = std::uniform_int_distribution<int>(0, std::min(n, m))(rng);
    MatrixXd L = gaussian_matrix(rng, m, r) * gaussian_matrix(rng, r, n);
    if (r == 0) L.setZero(m, n);
    Subspace K = kernel(L);
    // Mix kernel directions into V so intersections are nontrivial.
    const int dv = std::uniform_int_distribution<int>(0, n)(rng);
    MatrixXd gens = gaussian_matrix(rng, n, dv);
    const int from_kernel = std::min<int>(dv, static_cast<int>(K.dim()));
    if (from_kernel > 0) gens.leftCols(from_kernel) = K.basis() * gaussian_matrix(rng, K.dim(), from_kernel);
    Subspace V = orthonormalize(gens);
    CHECK(dim_image(L, V) + subspace_intersect(V, K).dim() == V.dim());
  }
}

TEST_CASE("wedge is invariant under rotations within each subspace")
{
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(derive_seed(12, {static_cast<std::uint64_t>(trial)}));
    const int n = std::uniform_int_distribution<int>(2, 6)(rng);
    std::vector<Subspace> vs, rotated;
    int used = 0;
    while (used < n) {
      const int d = std::uniform_int_distribution<int>(1, n - used)(rng);
      Subspace V = orthonormalize(gaussian_matrix(rng, n, d));
      vs.push_back(V);
      rotated.emplace_back(n, V.basis() * random_rotation(rng, d));
      used += d;
    }
    const double w = wedge_magnitude(vs);
    CHECK(w >= 0.0);
    CHECK(w <= 1.0);
    CHECK(std::abs(w - wedge_magnitude(rotated)) <= 10 * kDefaultRankTol);
  }
}

TEST_CASE("intersection duality")
{
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(derive_seed(13, {static_cast<std::uint64_t>(trial)}));
    const int n = std::uniform_int_distribution<int>(2, 6)(rng);
    // Share a random common part so intersections are not always trivial.
    const int c = std::uniform_int_distribution<int>(0, n - 1)(rng);
    MatrixXd common = gaussian_matrix(rng, n, c);
    const int a = std::uniform_int_distribution<int>(0, n - c)(rng);
    const int b = std::uniform_int_distribution<int>(0, n - c)(rng);
    MatrixXd ga(n, c + a), gb(n, c + b);
    ga << common, gaussian_matrix(rng, n, a);
    gb << common, gaussian_matrix(rng, n, b);
    Subspace A = orthonormalize(ga), B = orthonormalize(gb);
    Subspace I = subspace_intersect(A, B);
    Subspace D = complement(subspace_sum(complement(A), complement(B)));
    CHECK(subspace_distance(I, D) <= 10 * kDefaultRankTol);
    CHECK(A.dim() + B.dim() == subspace_sum(A, B).dim() + I.dim());
  }
}

TEST_CASE("wedge equals one exactly for orthonormal families")
{
  Rng rng(14);
  MatrixXd Q = random_rotation(rng, 5);
  std::vector<Subspace> vs{Subspace(5, Q.leftCols(2)), Subspace(5, Q.middleCols(2, 2)), Subspace(5, Q.rightCols(1))};
  CHECK(std::abs(wedge_magnitude(vs) - 1.0) <= 1e-12);
  vs[2] = orthonormalize(MatrixXd(Q.col(4) + 0.1 * Q.col(0)));
  CHECK(wedge_magnitude(vs) < 1.0 - 1e-6);
}
