#pragma once

#include "errors.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

// Small-dimensional subspace algebra. Rank decisions use one relative singular-value
// threshold; subspaces are compared through their orthogonal projectors.

namespace rlab {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline constexpr double kDefaultRankTol = 1e-10;

template <typename Scalar = double>
class SubspaceBasis
{
public:
  using Matrix = Mat<Scalar>;

  SubspaceBasis() = default;

  // `columns` must already be orthonormal; use orthonormalize() for arbitrary spanning sets.
  SubspaceBasis(Eigen::Index ambient_dim, Matrix columns, Scalar tol = Scalar(kDefaultRankTol))
      : n_(ambient_dim), q_(std::move(columns)), tol_(tol)
  {
    if (q_.cols() == 0) q_.resize(n_, 0);
    require(n_ >= 1, "SubspaceBasis: ambient dimension must be positive");
    require(q_.rows() == n_, "SubspaceBasis: vector length differs from ambient dimension");
    require(q_.cols() <= n_, "SubspaceBasis: more vectors than the ambient dimension");
    Matrix gram = q_.transpose() * q_;
    gram -= Matrix::Identity(q_.cols(), q_.cols());
    Scalar slack = std::max<Scalar>(tol_, Scalar(1e-12)) * Scalar(10);
    require(q_.cols() == 0 || gram.cwiseAbs().maxCoeff() <= slack, "SubspaceBasis: vectors are not orthonormal");
  }

  static SubspaceBasis zero(Eigen::Index n) { return SubspaceBasis(n, Matrix(n, 0)); }
  static SubspaceBasis whole(Eigen::Index n) { return SubspaceBasis(n, Matrix::Identity(n, n)); }

  Eigen::Index ambient_dim() const { return n_; }
  Eigen::Index dim() const { return q_.cols(); }
  const Matrix &basis() const { return q_; }
  Scalar tol() const { return tol_; }

  Matrix projector() const { return q_ * q_.transpose(); }

private:
  Eigen::Index n_ = 1;
  Matrix q_ = Matrix(1, 0);
  Scalar tol_ = Scalar(kDefaultRankTol);
};

using Subspace = SubspaceBasis<double>;

namespace detail {

template <typename Scalar>
Eigen::Index numerical_rank(const Vec<Scalar> &sv, Scalar threshold)
{
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > threshold) ++r;
  return r;
}

} // namespace detail

// Columns of `vectors` are the spanning set.
template <typename Derived>
SubspaceBasis<typename Derived::Scalar> orthonormalize(const Eigen::MatrixBase<Derived> &vectors,
                                                       typename Derived::Scalar tol = kDefaultRankTol)
{
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = vectors.rows();
  require(tol > 0, "orthonormalize: tol must be positive");
  if (vectors.cols() == 0) return SubspaceBasis<Scalar>(n, Mat<Scalar>(n, 0), tol);
  Eigen::JacobiSVD<Mat<Scalar>> svd(vectors.derived(), Eigen::ComputeFullU);
  const Vec<Scalar> sv = svd.singularValues();
  const Scalar smax = sv.size() ? sv(0) : Scalar(0);
  const Eigen::Index r = smax > 0 ? detail::numerical_rank<Scalar>(sv, tol * smax) : 0;
  return SubspaceBasis<Scalar>(n, svd.matrixU().leftCols(r), tol);
}

template <typename Scalar>
SubspaceBasis<Scalar> orthonormalize(const std::vector<Vec<Scalar>> &vectors, Eigen::Index n,
                                     Scalar tol = Scalar(kDefaultRankTol))
{
  Mat<Scalar> m(n, static_cast<Eigen::Index>(vectors.size()));
  for (std::size_t j = 0; j < vectors.size(); ++j) {
    require(vectors[j].size() == n, "orthonormalize: dimension mismatch among input vectors");
    m.col(static_cast<Eigen::Index>(j)) = vectors[j];
  }
  return orthonormalize(m, tol);
}

template <typename Derived>
Eigen::Index matrix_rank(const Eigen::MatrixBase<Derived> &L, typename Derived::Scalar tol = kDefaultRankTol)
{
  using Scalar = typename Derived::Scalar;
  if (L.size() == 0) return 0;
  Eigen::JacobiSVD<Mat<Scalar>> svd(L.derived());
  const Vec<Scalar> sv = svd.singularValues();
  return sv(0) > 0 ? detail::numerical_rank<Scalar>(sv, tol * sv(0)) : 0;
}

// Null space of L (rows × n); returned vectors satisfy |Lv| <= tol·|L|.
template <typename Derived>
SubspaceBasis<typename Derived::Scalar> kernel(const Eigen::MatrixBase<Derived> &L,
                                               typename Derived::Scalar tol = kDefaultRankTol)
{
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = L.cols();
  require(tol > 0, "kernel: tol must be positive");
  if (L.rows() == 0) return SubspaceBasis<Scalar>(n, Mat<Scalar>::Identity(n, n), tol);
  Eigen::JacobiSVD<Mat<Scalar>> svd(L.derived(), Eigen::ComputeFullV);
  const Vec<Scalar> sv = svd.singularValues();
  const Eigen::Index r = sv(0) > 0 ? detail::numerical_rank<Scalar>(sv, tol * sv(0)) : 0;
  return SubspaceBasis<Scalar>(n, svd.matrixV().rightCols(n - r), tol);
}

template <typename Scalar>
SubspaceBasis<Scalar> complement(const SubspaceBasis<Scalar> &A)
{
  if (A.dim() == 0) return SubspaceBasis<Scalar>(A.ambient_dim(), Mat<Scalar>::Identity(A.ambient_dim(), A.ambient_dim()), A.tol());
  return kernel(A.basis().transpose(), A.tol());
}

template <typename Scalar>
SubspaceBasis<Scalar> subspace_sum(const SubspaceBasis<Scalar> &A, const SubspaceBasis<Scalar> &B)
{
  require(A.ambient_dim() == B.ambient_dim(), "subspace_sum: ambient dimension mismatch");
  Mat<Scalar> m(A.ambient_dim(), A.dim() + B.dim());
  m << A.basis(), B.basis();
  return orthonormalize(m, std::max(A.tol(), B.tol()));
}

template <typename Scalar>
SubspaceBasis<Scalar> subspace_intersect(const SubspaceBasis<Scalar> &A, const SubspaceBasis<Scalar> &B)
{
  require(A.ambient_dim() == B.ambient_dim(), "subspace_intersect: ambient dimension mismatch");
  return complement(subspace_sum(complement(A), complement(B)));
}

// Product of the singular values of the concatenated bases, i.e. sqrt of the Gram determinant.
template <typename Scalar>
Scalar wedge_magnitude(const std::vector<SubspaceBasis<Scalar>> &subspaces)
{
  if (subspaces.empty()) return Scalar(1);
  const Eigen::Index n = subspaces.front().ambient_dim();
  Eigen::Index total = 0;
  for (const auto &V : subspaces) {
    require(V.ambient_dim() == n, "wedge_magnitude: ambient dimension mismatch");
    total += V.dim();
  }
  if (total > n) return Scalar(0);
  if (total == 0) return Scalar(1);
  Mat<Scalar> m(n, total);
  Eigen::Index c = 0;
  for (const auto &V : subspaces) {
    m.middleCols(c, V.dim()) = V.basis();
    c += V.dim();
  }
  Eigen::JacobiSVD<Mat<Scalar>> svd(m);
  Scalar w = svd.singularValues().prod();
  return std::clamp(w, Scalar(0), Scalar(1));
}

// Rank of L restricted to V, judged relative to the norm of L.
template <typename Derived, typename Scalar>
Eigen::Index dim_image(const Eigen::MatrixBase<Derived> &L, const SubspaceBasis<Scalar> &V, Scalar tol = Scalar(kDefaultRankTol))
{
  require(L.cols() == V.ambient_dim(), "dim_image: map and subspace dimensions differ");
  if (V.dim() == 0 || L.rows() == 0) return 0;
  const Mat<Scalar> Ld = L.derived();
  Eigen::JacobiSVD<Mat<Scalar>> full(Ld);
  const Scalar norm = full.singularValues()(0);
  if (norm <= 0) return 0;
  Eigen::JacobiSVD<Mat<Scalar>> svd(Mat<Scalar>(Ld * V.basis()));
  return detail::numerical_rank<Scalar>(svd.singularValues(), tol * norm);
}

// Operator norm of the difference of orthogonal projectors.
template <typename Scalar>
Scalar subspace_distance(const SubspaceBasis<Scalar> &A, const SubspaceBasis<Scalar> &B)
{
  require(A.ambient_dim() == B.ambient_dim(), "subspace_distance: ambient dimension mismatch");
  Mat<Scalar> d = A.projector() - B.projector();
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(d, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

template <typename Scalar>
bool same_subspace(const SubspaceBasis<Scalar> &A, const SubspaceBasis<Scalar> &B, Scalar tol = Scalar(1e-8))
{
  return A.dim() == B.dim() && subspace_distance(A, B) <= tol;
}

template <typename Scalar>
SubspaceBasis<Scalar> span_of(std::initializer_list<Vec<Scalar>> vs)
{
  std::vector<Vec<Scalar>> v(vs);
  require(!v.empty(), "span_of: need at least one vector");
  return orthonormalize(v, v.front().size());
}

} // namespace rlab
