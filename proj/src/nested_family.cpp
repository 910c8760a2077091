#include "rlab/nested_family.hpp"
#include "rlab/random.hpp"

#include <unsupported/Eigen/AutoDiff>

#include <algorithm>
#include <limits>

namespace rlab {

using AD = Eigen::AutoDiffScalar<Eigen::VectorXd>;

NestedFamily::NestedFamily(int ambient_dim, PolyGraphParam sigma0, std::vector<PolyGraphParam> chain,
                           FamilyConstants constants)
    : n_(ambient_dim), sigma0_(std::move(sigma0)), chain_(std::move(chain))
{
  require(sigma0_.graph_dim() == n_, "NestedFamily: Σ₀ does not map into the ambient space");
  int prev = sigma0_.in_dim();
  double prev_radius = sigma0_.domain_radius();
  for (std::size_t l = 0; l < chain_.size(); ++l) {
    const PolyGraphParam &g = chain_[l];
    require(g.graph_dim() == prev, "NestedFamily: link " + std::to_string(l + 1) + " has the wrong target dimension");
    require(g.out_dim() >= 1, "NestedFamily: link " + std::to_string(l + 1) + " has zero codimension");
    // γ_ℓ(U_ℓ) must sit compactly inside U_{ℓ−1}; checked on a grid including the corners.
    const int d = g.in_dim();
    const int per_axis = std::max(2, static_cast<int>(std::floor(std::pow(4096.0, 1.0 / d))));
    const double r = g.domain_radius();
    long total = 1;
    for (int a = 0; a < d; ++a) total *= per_axis;
    Eigen::VectorXd s(d);
    for (long node = 0; node < total; ++node) {
      long rest = node;
      for (int a = 0; a < d; ++a) {
        s(a) = -r + 2.0 * r * static_cast<double>(rest % per_axis) / (per_axis - 1);
        rest /= per_axis;
      }
      const Eigen::VectorXd img = g(s);
      require(img.cwiseAbs().maxCoeff() < prev_radius,
              "NestedFamily: link " + std::to_string(l + 1) + " leaves the previous domain");
    }
    prev = g.in_dim();
    prev_radius = r;
  }
  mu_threshold_ = constants.mu_threshold > 0 ? constants.mu_threshold : 0.05 * sigma0_.domain_radius();
  c_cover_ = constants.c_cover;
  rho_ = constants.rho;
  require(c_cover_ >= 1.0, "NestedFamily: C∘ must be at least 1");
  require(rho_ > 0.0, "NestedFamily: ρ∘ must be positive");
  offset_bound_ = constants.offset_bound > 0 ? constants.offset_bound : std::pow(c_cover_, 9.0 / 8.0) * mu_threshold_;
}

const PolyGraphParam &NestedFamily::link(int l) const
{
  if (l < 1 || l > depth()) throw PreconditionError("link index out of range");
  return chain_[static_cast<std::size_t>(l - 1)];
}

int NestedFamily::dim(int l) const
{
  if (l < 0 || l > depth()) throw PreconditionError("level out of range");
  return l == 0 ? sigma0_.in_dim() : link(l).in_dim();
}

int NestedFamily::codim(int l) const { return link(l).out_dim(); }

int NestedFamily::codim_total(int l) const
{
  int c = 0;
  for (int t = 1; t <= l; ++t) c += codim(t);
  return c;
}

double NestedFamily::radius(int l) const
{
  if (l < 0 || l > depth()) throw PreconditionError("level out of range");
  return l == 0 ? sigma0_.domain_radius() : link(l).domain_radius();
}

bool NestedFamily::in_domain(int l, const Eigen::VectorXd &s) const
{
  return s.size() == dim(l) && s.cwiseAbs().maxCoeff() < radius(l);
}

namespace {

Vec<AD> seed_variables(const Eigen::VectorXd &z)
{
  const Eigen::Index D = z.size();
  Vec<AD> v(D);
  for (Eigen::Index i = 0; i < D; ++i) v(i) = AD(z(i), D, i);
  return v;
}

} // namespace

Eigen::MatrixXd phi_jacobian(const NestedFamily &family, int k, int l, const Eigen::VectorXd &s, const Eigen::VectorXd &eta)
{
  const Eigen::Index ds = s.size();
  Eigen::VectorXd z(ds + eta.size());
  z << s, eta;
  const Vec<AD> v = seed_variables(z);
  const Vec<AD> out = family.phi<AD>(k, l, v.head(ds), v.tail(eta.size()));
  Eigen::MatrixXd J(out.size(), z.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const auto &der = out(i).derivatives();
    if (der.size() == 0)
      J.row(i).setZero();
    else
      J.row(i) = der.transpose();
  }
  return J;
}

PhiInverse phi_inverse(const NestedFamily &family, int k, int l, const Eigen::VectorXd &x, const NewtonOptions &opts)
{
  const int dk = family.dim(k);
  const int dl = family.dim(l);
  require(x.size() == dk, "phi_inverse: x has the wrong dimension");
  PhiInverse r;
  r.s = x.head(dl);
  r.eta = Eigen::VectorXd::Zero(dk - dl);
  if (!family.in_domain(k, x)) throw ConvergenceError("phi_inverse: x lies outside U_k");
  // Graph chains: the first d_ℓ coordinates are preserved by γ_{k,ℓ}, which gives the start.
  const double rl = family.radius(l);
  r.s = r.s.cwiseMax(-0.999 * rl).cwiseMin(0.999 * rl);

  auto residual_at = [&](const Eigen::VectorXd &s, const Eigen::VectorXd &eta, Eigen::VectorXd &res) {
    try {
      res = family.phi<double>(k, l, s, eta) - x;
      return true;
    } catch (const DomainError &) {
      return false;
    }
  };

  Eigen::VectorXd res;
  if (!residual_at(r.s, r.eta, res)) throw ConvergenceError("phi_inverse: starting point outside the chart");
  double norm = res.cwiseAbs().maxCoeff();
  for (int it = 0; it < opts.max_iterations; ++it) {
    r.iterations = it;
    if (norm <= opts.residual_tol) break;
    const Eigen::MatrixXd J = phi_jacobian(family, k, l, r.s, r.eta);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
    if (!lu.isInvertible()) throw ConvergenceError("phi_inverse: singular Jacobian");
    const Eigen::VectorXd step = lu.solve(-res);
    double t = 1.0;
    bool accepted = false;
    for (int half = 0; half < 30; ++half, t *= 0.5) {
      const Eigen::VectorXd s1 = r.s + t * step.head(dl);
      const Eigen::VectorXd e1 = r.eta + t * step.tail(dk - dl);
      Eigen::VectorXd res1;
      if (!residual_at(s1, e1, res1)) continue;
      const double n1 = res1.cwiseAbs().maxCoeff();
      if (n1 < norm || n1 <= opts.residual_tol) {
        r.s = s1;
        r.eta = e1;
        res = res1;
        norm = n1;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  r.residual = norm;
  // Newton aims for residual_tol; 1e-12 is accepted once it stalls at rounding level.
  if (!(norm <= std::max(opts.residual_tol, 1e-12)))
    throw ConvergenceError("phi_inverse: Newton iteration did not converge (residual " + std::to_string(norm) + ")");
  return r;
}

Eigen::MatrixXd sigma_jacobian(const NestedFamily &family, int l, const Eigen::VectorXd &s)
{
  Eigen::MatrixXd J = Eigen::MatrixXd::Identity(s.size(), s.size());
  Eigen::VectorXd x = s;
  for (int t = l; t >= 1; --t) {
    J = family.link(t).jacobian<double>(x) * J;
    x = family.link(t)(x);
  }
  return J;
}

Eigen::MatrixXd embed_jacobian(const NestedFamily &family, int l, const Eigen::VectorXd &s)
{
  const Eigen::VectorXd u = family.sigma<double>(l, s);
  return family.sigma0().jacobian<double>(u) * sigma_jacobian(family, l, s);
}

DerivativeMatrices derivative_matrices(const NestedFamily &family, int l, const Eigen::VectorXd &s)
{
  require(s.size() == family.dim(l), "derivative_matrices: s has the wrong dimension");
  if (!family.in_domain(l, s)) throw DomainError("derivative_matrices: s outside U_l");
  const int d0 = family.dim(0);
  DerivativeMatrices D;
  D.dsigma = sigma_jacobian(family, l, s);
  D.B.resize(d0, family.codim_total(l));
  for (int k = 1; k <= l; ++k) {
    const Eigen::VectorXd at_k = family.gamma_chain<double>(k, l, s);
    const Eigen::VectorXd at_km1 = family.link(k)(at_k);
    const Eigen::MatrixXd G = family.normal_frame<double>(k, at_k);
    D.B.middleCols(family.codim_total(k - 1), family.codim(k)) = sigma_jacobian(family, k - 1, at_km1) * G;
  }
  D.Lambda.resize(d0, d0);
  D.Lambda << D.B, D.dsigma;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(D.Lambda);
  const auto &sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 1e-10 * sv(0)) throw PreconditionError("derivative_matrices: Lambda is singular (degenerate chain)");
  return D;
}

NeighbourhoodOracle::NeighbourhoodOracle(const NestedFamily &family, int k, int seeds_per_axis, int seed_cap)
    : family_(&family), k_(k)
{
  require(k >= 0 && k <= family.depth(), "NeighbourhoodOracle: base level out of range");
  for (int t = k + 1; t <= family.depth(); ++t) {
    const int d = family.dim(t);
    const int per_axis = std::max(1, std::min(seeds_per_axis, static_cast<int>(std::floor(std::pow(seed_cap, 1.0 / d) + 1e-9))));
    long count = 1;
    for (int a = 0; a < d; ++a) count *= per_axis;
    const double r = family.radius(t);
    Eigen::MatrixXd S(d, count);
    Eigen::MatrixXd X(family.dim(k), count);
    for (long node = 0; node < count; ++node) {
      long rest = node;
      for (int a = 0; a < d; ++a) {
        S(a, node) = -r + (2.0 * static_cast<double>(rest % per_axis) + 1.0) * r / per_axis;
        rest /= per_axis;
      }
      X.col(node) = family.gamma_chain<double>(k, t, Eigen::VectorXd(S.col(node)));
    }
    seeds_.push_back(std::move(S));
    images_.push_back(std::move(X));
  }
}

double NeighbourhoodOracle::distance(int t, const Eigen::VectorXd &u) const
{
  require(t > k_ && t <= family_->depth(), "NeighbourhoodOracle: level out of range");
  const NestedFamily &F = *family_;
  const std::size_t slot = static_cast<std::size_t>(t - k_ - 1);
  const Eigen::MatrixXd &X = images_[slot];
  Eigen::Index best = 0;
  (X.colwise() - u).colwise().squaredNorm().minCoeff(&best);
  const double r = F.radius(t);
  const int d = F.dim(t);

  auto refine = [&](Eigen::VectorXd s) {
    auto clamp = [&](Eigen::VectorXd v) { return Eigen::VectorXd(v.cwiseMax(-r * (1 - 1e-12)).cwiseMin(r * (1 - 1e-12))); };
    s = clamp(s);
    Eigen::VectorXd res = F.gamma_chain<double>(k_, t, s) - u;
    double dist = res.norm();
    for (int it = 0; it < 50; ++it) {
      // ∂γ_{k,t}(s) by the chain rule.
      Eigen::MatrixXd J = Eigen::MatrixXd::Identity(d, d);
      Eigen::VectorXd x = s;
      for (int q = t; q > k_; --q) {
        J = F.link(q).jacobian<double>(x) * J;
        x = F.link(q)(x);
      }
      const Eigen::VectorXd step = (J.transpose() * J).ldlt().solve(-J.transpose() * res);
      double a = 1.0;
      bool moved = false;
      for (int half = 0; half < 20; ++half, a *= 0.5) {
        const Eigen::VectorXd s1 = clamp(s + a * step);
        const Eigen::VectorXd r1 = F.gamma_chain<double>(k_, t, s1) - u;
        if (r1.norm() < dist) {
          moved = (s1 - s).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, s.cwiseAbs().maxCoeff()) &&
                  dist - r1.norm() > 1e-15;
          s = s1;
          res = r1;
          dist = r1.norm();
          break;
        }
      }
      if (!moved) break;
    }
    return dist;
  };

  double dist = refine(seeds_[slot].col(best));
  if (u.size() >= d) dist = std::min(dist, refine(u.head(d)));
  return dist;
}

bool NeighbourhoodOracle::contains(const Eigen::VectorXd &u, const Eigen::VectorXd &mu, double rho, int l) const
{
  const NestedFamily &F = *family_;
  const int last = l < 0 ? F.depth() : l;
  require(mu.size() >= last, "NeighbourhoodOracle: scale vector too short");
  if (!F.in_domain(k_, u)) return false;
  for (int t = k_ + 1; t <= last; ++t)
    if (!(distance(t, u) < rho * mu(t - 1))) return false;
  return true;
}

bool neighbourhood_membership(const NestedFamily &family, const Eigen::VectorXd &u, const Eigen::VectorXd &mu, double rho)
{
  check_compatible_scales(mu, family.depth());
  return NeighbourhoodOracle(family).contains(u, mu, rho);
}

void check_compatible_scales(const Eigen::VectorXd &mu, int depth)
{
  require(mu.size() == depth, "scale vector must have one entry per level");
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    require(mu(i) > 0, "scales must be positive");
    if (i > 0) require(mu(i - 1) <= mu(i), "scales must be nondecreasing (compatible scales)");
  }
}

namespace {

Eigen::VectorXd sample_eta(Rng &rng, const NestedFamily &F, int k, int l, const Eigen::VectorXd &mu, double factor)
{
  Eigen::VectorXd eta(F.codim_total(l) - F.codim_total(k));
  for (int t = k + 1; t <= l; ++t)
    for (int i = 0; i < F.codim(t); ++i) eta(F.eta_offset(k, t) + i) = uniform(rng, -factor * mu(t - 1), factor * mu(t - 1));
  return eta;
}

} // namespace

OmegaInclusionReport verify_omega_inclusions(const NestedFamily &family, const Eigen::VectorXd &mu, int samples,
                                             std::uint64_t seed)
{
  const int r = family.depth();
  check_compatible_scales(mu, r);
  if (r > 0 && mu(r - 1) > family.c_cover() * family.mu_threshold())
    throw PreconditionError("verify_omega_inclusions: scales exceed C∘·μ∘");
  const double p_half = std::pow(family.c_cover(), 1.0 / 8.0); // half-width factor of P_{k,ℓ}(μ)
  OmegaInclusionReport rep;
  for (int k = 0; k < r; ++k) {
    NeighbourhoodOracle oracle(family, k);
    for (int l = k + 1; l <= r; ++l) {
      for (int i = 0; i < samples; ++i) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(l), static_cast<std::uint64_t>(i)}));
        const Eigen::VectorXd s = uniform_box(rng, family.dim(l), 0.8 * family.radius(l));

        // Inner inclusion: points of 𝔑_{k,ℓ}(μ;1) must come from P_{k,ℓ}(μ).
        {
          const Eigen::VectorXd eta = sample_eta(rng, family, k, l, mu, 1.5);
          Eigen::VectorXd x;
          try {
            x = family.phi<double>(k, l, s, eta);
          } catch (const DomainError &) {
            x.resize(0);
          }
          if (x.size() && oracle.contains(x, mu, 1.0, l)) {
            ++rep.tested_inner;
            bool ok = true;
            try {
              const PhiInverse inv = phi_inverse(family, k, l, x);
              for (int t = k + 1; t <= l && ok; ++t)
                ok = inv.eta.segment(family.eta_offset(k, t), family.codim(t)).cwiseAbs().maxCoeff() <= p_half * mu(t - 1);
              ok = ok && family.in_domain(l, inv.s);
            } catch (const ConvergenceError &) {
              ok = false;
            }
            if (!ok) ++rep.violations_inner;
          }
        }

        // Outer inclusion: Φ(s; η) with η ∈ P_{k,ℓ}(μ) must lie in 𝔑_{k,ℓ}(μ;C∘).
        {
          const Eigen::VectorXd eta = sample_eta(rng, family, k, l, mu, p_half);
          Eigen::VectorXd x;
          try {
            x = family.phi<double>(k, l, s, eta);
          } catch (const DomainError &) {
            continue; // outside the chart: not a point of Ω
          }
          ++rep.tested_outer;
          if (!oracle.contains(x, mu, family.c_cover(), l)) ++rep.violations_outer;
        }
      }
    }
  }
  return rep;
}

BLDatum ensemble_datum(const Ensemble &ens)
{
  const std::size_t k = ens.families.size();
  require(k >= 2, "ensemble_datum: need at least two families");
  require(ens.exponents.size() == k, "ensemble_datum: one exponent per family");
  const int n = ens.families.front().ambient_dim();
  require(static_cast<int>(k) <= n, "ensemble_datum: more families than dimensions");
  std::vector<Eigen::MatrixXd> maps;
  std::vector<double> p;
  for (std::size_t j = 0; j < k; ++j) {
    const NestedFamily &F = ens.families[j];
    require(F.ambient_dim() == n, "ensemble_datum: families live in different spaces");
    const double q = ens.exponents[j];
    require(q > 0.0 && q <= 2.0, "ensemble_datum: exponent q outside (0,2]");
    const int r = F.depth();
    const Eigen::MatrixXd L = embed_jacobian(F, r, Eigen::VectorXd::Zero(F.dim(r))).transpose();
    if (matrix_rank(L) != L.rows())
      throw PreconditionError("ensemble_datum: Jacobian of family " + std::to_string(j) + " is rank deficient");
    maps.push_back(L);
    p.push_back(q / 2.0);
  }
  return BLDatum(std::move(maps), std::move(p));
}

} // namespace rlab
