#pragma once

#include "brascamp_lieb.hpp"
#include "errors.hpp"
#include "polynomial.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace rlab {

struct FamilyConstants
{
  double mu_threshold = -1.0; // μ∘; negative selects 0.05·domain radius of U₀
  double c_cover = 1e4;       // C∘
  double rho = 0.1;           // ρ∘
  double offset_bound = -1.0; // validity box for each η block; negative selects C∘^{9/8}·μ∘
};

// Chain S_r ⊂ ⋯ ⊂ S₀ given by Σ₀: U₀ → ℝⁿ and links γ_ℓ: U_ℓ → U_{ℓ−1}, all polynomial graphs.
// Levels are numbered 0..r; link(ℓ) is γ_ℓ for ℓ ≥ 1.
class NestedFamily
{
public:
  NestedFamily(int ambient_dim, PolyGraphParam sigma0, std::vector<PolyGraphParam> chain, FamilyConstants constants = {});

  int ambient_dim() const { return n_; }
  int depth() const { return static_cast<int>(chain_.size()); }
  const PolyGraphParam &sigma0() const { return sigma0_; }
  const PolyGraphParam &link(int l) const;
  const std::vector<PolyGraphParam> &chain() const { return chain_; }

  int dim(int l) const;          // d_ℓ
  int codim(int l) const;        // m_ℓ = d_{ℓ−1} − d_ℓ, ℓ ≥ 1
  int codim_total(int l) const;  // c_ℓ = m_1 + ⋯ + m_ℓ
  double radius(int l) const;    // U_ℓ is the open sup-ball of this radius
  int eta_offset(int k, int t) const { return codim_total(t - 1) - codim_total(k); }

  double mu_threshold() const { return mu_threshold_; }
  double c_cover() const { return c_cover_; }
  double rho() const { return rho_; }
  double offset_bound() const { return offset_bound_; }

  // γ_{k,ℓ} = γ_{k+1}∘⋯∘γ_ℓ.
  template <typename Scalar>
  Vec<Scalar> gamma_chain(int k, int l, const Vec<Scalar> &s) const
  {
    check_levels(k, l);
    Vec<Scalar> x = s;
    for (int t = l; t > k; --t) x = link(t)(x);
    return x;
  }

  template <typename Scalar>
  Vec<Scalar> sigma(int l, const Vec<Scalar> &s) const { return gamma_chain<Scalar>(0, l, s); }

  // Σ_ℓ = Σ₀∘σ_ℓ.
  template <typename Scalar>
  Vec<Scalar> embed(int l, const Vec<Scalar> &s) const { return sigma0_(sigma<Scalar>(l, s)); }

  // G_ℓ(s): orthonormal basis of the normal space of M_{ℓ−1,ℓ} at γ_ℓ(s), d_{ℓ−1} × m_ℓ.
  template <typename Scalar>
  Mat<Scalar> normal_frame(int l, const Vec<Scalar> &s) const
  {
    const PolyGraphParam &g = link(l);
    const int d = g.in_dim();
    const int m = g.out_dim();
    Mat<Scalar> N(d + m, m);
    const Mat<Scalar> J = g.psi_jacobian(s);
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < d; ++i) N(i, j) = -J(j, i);
      for (int i = 0; i < m; ++i) N(d + i, j) = s(0) * 0.0 + (i == j ? 1.0 : 0.0);
    }
    // Modified Gram–Schmidt in column order.
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < j; ++i) {
        Scalar dot = N.col(i).dot(N.col(j));
        N.col(j) -= dot * N.col(i);
      }
      using std::sqrt;
      Scalar norm = sqrt(N.col(j).squaredNorm());
      N.col(j) /= norm;
    }
    return N;
  }

  // Φ_{k,ℓ}(s; η) with η = (η_{k+1}, …, η_ℓ) stacked.
  template <typename Scalar>
  Vec<Scalar> phi(int k, int l, const Vec<Scalar> &s, const Vec<Scalar> &eta) const
  {
    check_levels(k, l);
    if (s.size() != dim(l)) throw PreconditionError("phi: s has the wrong dimension");
    if (eta.size() != codim_total(l) - codim_total(k)) throw PreconditionError("phi: eta has the wrong dimension");
    check_domain(l, s);
    for (Eigen::Index i = 0; i < eta.size(); ++i)
      if (!(std::abs(value_of(eta(i))) < offset_bound_)) throw DomainError("phi: offset outside validity box");
    Vec<Scalar> x = s;
    for (int t = l; t > k; --t) {
      const Vec<Scalar> base = link(t)(x);
      const Mat<Scalar> G = normal_frame<Scalar>(t, x);
      const Vec<Scalar> e = eta.segment(eta_offset(k, t), codim(t));
      x = base + G * e;
      check_domain(t - 1, x);
    }
    return x;
  }

  bool in_domain(int l, const Eigen::VectorXd &s) const;

private:
  void check_levels(int k, int l) const
  {
    if (k < 0 || k > l || l > depth()) throw PreconditionError("levels must satisfy 0 <= k <= l <= r");
  }
  template <typename Scalar>
  void check_domain(int l, const Vec<Scalar> &x) const
  {
    const double r = radius(l);
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (!(std::abs(value_of(x(i))) < r)) throw DomainError("point escapes U_" + std::to_string(l));
  }

  int n_;
  PolyGraphParam sigma0_;
  std::vector<PolyGraphParam> chain_;
  double mu_threshold_;
  double c_cover_;
  double rho_;
  double offset_bound_;
};

struct PhiInverse
{
  Eigen::VectorXd s;
  Eigen::VectorXd eta;
  int iterations = 0;
  double residual = 0.0;
};

struct NewtonOptions
{
  int max_iterations = 60;
  double residual_tol = 1e-13;
};

PhiInverse phi_inverse(const NestedFamily &family, int k, int l, const Eigen::VectorXd &x, const NewtonOptions &opts = {});

// Exact Jacobian of (s, η) ↦ Φ_{k,ℓ}(s; η), d_k × d_k.
Eigen::MatrixXd phi_jacobian(const NestedFamily &family, int k, int l, const Eigen::VectorXd &s, const Eigen::VectorXd &eta);

// ∂σ_ℓ(s), d₀ × d_ℓ.
Eigen::MatrixXd sigma_jacobian(const NestedFamily &family, int l, const Eigen::VectorXd &s);
// ∂Σ_ℓ(s), n × d_ℓ.
Eigen::MatrixXd embed_jacobian(const NestedFamily &family, int l, const Eigen::VectorXd &s);

struct DerivativeMatrices
{
  Eigen::MatrixXd dsigma; // d₀ × d_ℓ
  Eigen::MatrixXd B;      // d₀ × c_ℓ
  Eigen::MatrixXd Lambda; // d₀ × d₀ = [B | ∂σ_ℓ]
};

DerivativeMatrices derivative_matrices(const NestedFamily &family, int l, const Eigen::VectorXd &s);

// Distances from points of U_k to the manifolds M_{k,t} = γ_{k,t}(U_t), t = k+1..r, by grid seeding
// plus Gauss–Newton. Seed images are tabulated once per oracle.
class NeighbourhoodOracle
{
public:
  explicit NeighbourhoodOracle(const NestedFamily &family, int k = 0, int seeds_per_axis = 64, int seed_cap = 4096);

  double distance(int t, const Eigen::VectorXd &u) const;
  // u ∈ 𝔑_{k,ℓ}(μ; ρ); mu is indexed by level (mu[t−1] = μ_t), ℓ < 0 means r.
  bool contains(const Eigen::VectorXd &u, const Eigen::VectorXd &mu, double rho, int l = -1) const;
  int base_level() const { return k_; }

private:
  const NestedFamily *family_;
  int k_;
  std::vector<Eigen::MatrixXd> seeds_;  // per t: parameters, d_t × count
  std::vector<Eigen::MatrixXd> images_; // per t: γ_{k,t}(seeds), d_k × count
};

bool neighbourhood_membership(const NestedFamily &family, const Eigen::VectorXd &u, const Eigen::VectorXd &mu, double rho);

struct OmegaInclusionReport
{
  long tested_inner = 0; // points of 𝔑(μ;1) checked to lie in Ω(μ)
  long tested_outer = 0; // points of Ω(μ) checked to lie in 𝔑(μ;C∘)
  long violations_inner = 0;
  long violations_outer = 0;
  long violations() const { return violations_inner + violations_outer; }
};

OmegaInclusionReport verify_omega_inclusions(const NestedFamily &family, const Eigen::VectorXd &mu, int samples,
                                             std::uint64_t seed);

void check_compatible_scales(const Eigen::VectorXd &mu, int depth);

struct Ensemble
{
  std::vector<NestedFamily> families;
  std::vector<double> exponents; // q_j ∈ (0, 2]
};

BLDatum ensemble_datum(const Ensemble &ens);

} // namespace rlab
