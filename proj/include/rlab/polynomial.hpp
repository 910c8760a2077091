#pragma once

#include "linear_geometry.hpp"

#include <map>
#include <string>
#include <vector>

namespace rlab {

// Value of a scalar type for domain checks; AutoDiff scalars expose value().
inline double value_of(double x) { return x; }
template <typename T>
auto value_of(const T &x) -> decltype(x.value(), double())
{
  return value_of(x.value());
}

struct Monomial
{
  std::vector<int> powers;   // length d
  Eigen::VectorXd coeffs;    // length m
};

// The graph u ↦ (u, ψ(u)) of a polynomial map ψ: ℝ^d → ℝ^m with ψ(0) = 0, on the open
// sup-norm ball of the given radius.
class PolyGraphParam
{
public:
  PolyGraphParam() = default;
  PolyGraphParam(int in_dim, int out_dim, std::vector<Monomial> terms, double domain_radius);

  // Keys are comma-separated exponent lists, e.g. "2,0" for u₁².
  static PolyGraphParam from_coefficients(int in_dim, int out_dim, const std::map<std::string, std::vector<double>> &c,
                                          double domain_radius);
  static PolyGraphParam flat(int in_dim, int out_dim, double domain_radius);

  int in_dim() const { return d_; }
  int out_dim() const { return m_; }
  int graph_dim() const { return d_ + m_; }
  double domain_radius() const { return radius_; }
  const std::vector<Monomial> &terms() const { return terms_; }
  bool is_affine() const;

  bool in_domain(const Eigen::VectorXd &u, double slack = 0.0) const
  {
    return u.size() == d_ && u.cwiseAbs().maxCoeff() < radius_ - slack;
  }

  template <typename Scalar>
  Vec<Scalar> psi(const Vec<Scalar> &u) const
  {
    Vec<Scalar> out(m_);
    for (int i = 0; i < m_; ++i) out(i) = u(0) * 0.0;
    for (const auto &t : terms_) {
      Scalar mono = u(0) * 0.0 + 1.0;
      for (int a = 0; a < d_; ++a)
        for (int e = 0; e < t.powers[static_cast<std::size_t>(a)]; ++e) mono = mono * u(a);
      for (int i = 0; i < m_; ++i) out(i) += t.coeffs(i) * mono;
    }
    return out;
  }

  // ∂ψ(u), m × d.
  template <typename Scalar>
  Mat<Scalar> psi_jacobian(const Vec<Scalar> &u) const
  {
    Mat<Scalar> J(m_, d_);
    for (int i = 0; i < m_; ++i)
      for (int a = 0; a < d_; ++a) J(i, a) = u(0) * 0.0;
    for (const auto &t : terms_)
      for (int a = 0; a < d_; ++a) {
        const int pa = t.powers[static_cast<std::size_t>(a)];
        if (pa == 0) continue;
        Scalar mono = u(0) * 0.0 + static_cast<double>(pa);
        for (int b = 0; b < d_; ++b) {
          const int e = t.powers[static_cast<std::size_t>(b)] - (b == a ? 1 : 0);
          for (int r = 0; r < e; ++r) mono = mono * u(b);
        }
        for (int i = 0; i < m_; ++i) J(i, a) += t.coeffs(i) * mono;
      }
    return J;
  }

  template <typename Scalar>
  Vec<Scalar> operator()(const Vec<Scalar> &u) const
  {
    Vec<Scalar> out(d_ + m_);
    out.head(d_) = u;
    if (m_ > 0) out.tail(m_) = psi(u);
    return out;
  }

  template <typename Scalar>
  Mat<Scalar> jacobian(const Vec<Scalar> &u) const
  {
    Mat<Scalar> J(d_ + m_, d_);
    for (int i = 0; i < d_; ++i)
      for (int a = 0; a < d_; ++a) J(i, a) = u(0) * 0.0 + (i == a ? 1.0 : 0.0);
    if (m_ > 0) J.bottomRows(m_) = psi_jacobian(u);
    return J;
  }

private:
  int d_ = 0;
  int m_ = 0;
  std::vector<Monomial> terms_;
  double radius_ = 1.0;
};

} // namespace rlab
