#include "rlab/extension.hpp"
#include "rlab/bump.hpp"
#include "rlab/random.hpp"

#include <algorithm>
#include <cmath>

namespace rlab {

double AmplitudeSpec::operator()(const Eigen::VectorXd &u) const
{
  require(u.size() == center.size(), "AmplitudeSpec: dimension mismatch");
  double a = 1.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double t = u(i) - center(i);
    switch (kind) {
    case Kind::Indicator:
      a *= std::abs(t) < radius ? 1.0 : 0.0;
      break;
    case Kind::SmoothBump:
      a *= smoothness_width >= radius ? exp_bump(t / radius) : plateau(t, radius - smoothness_width, radius);
      break;
    }
    if (a == 0.0) break;
  }
  return a;
}

GridDensity::GridDensity(const Box &box, std::vector<int> counts, const Density &f) : box_(box), counts_(std::move(counts))
{
  require(static_cast<Eigen::Index>(counts_.size()) == box.dim(), "GridDensity: one count per axis");
  long total = 1;
  for (int c : counts_) {
    require(c >= 2, "GridDensity: need at least two samples per axis");
    total *= c;
  }
  values_.resize(total);
  Eigen::VectorXd u(box.dim());
  for (long j = 0; j < total; ++j) {
    long rest = j;
    for (Eigen::Index a = 0; a < box.dim(); ++a) {
      const int c = counts_[static_cast<std::size_t>(a)];
      u(a) = box.lo(a) + (box.hi(a) - box.lo(a)) * static_cast<double>(rest % c) / (c - 1);
      rest /= c;
    }
    values_(j) = f(u);
  }
}

cplx GridDensity::operator()(const Eigen::VectorXd &u) const
{
  const Eigen::Index d = box_.dim();
  if (!box_.contains(u)) return 0.0;
  std::vector<long> base(static_cast<std::size_t>(d));
  std::vector<double> frac(static_cast<std::size_t>(d));
  for (Eigen::Index a = 0; a < d; ++a) {
    const int c = counts_[static_cast<std::size_t>(a)];
    const double t = (u(a) - box_.lo(a)) / (box_.hi(a) - box_.lo(a)) * (c - 1);
    const long i = std::min<long>(c - 2, static_cast<long>(std::floor(t)));
    base[static_cast<std::size_t>(a)] = i;
    frac[static_cast<std::size_t>(a)] = t - static_cast<double>(i);
  }
  cplx v = 0.0;
  for (long corner = 0; corner < (1L << d); ++corner) {
    double w = 1.0;
    long flat = 0, stride = 1;
    for (Eigen::Index a = 0; a < d; ++a) {
      const bool up = (corner >> a) & 1;
      const std::size_t sa = static_cast<std::size_t>(a);
      w *= up ? frac[sa] : 1.0 - frac[sa];
      flat += (base[sa] + (up ? 1 : 0)) * stride;
      stride *= counts_[sa];
    }
    if (w != 0.0) v += w * values_(flat);
  }
  return v;
}

Density GridDensity::as_density() const
{
  GridDensity copy = *this;
  return {[copy](const Eigen::VectorXd &u) { return copy(u); }, box_};
}

PreparedExtension::PreparedExtension(Eigen::MatrixXd points, Eigen::VectorXcd weights)
    : points_(std::move(points)), weights_(std::move(weights))
{
  require(points_.cols() == weights_.size(), "PreparedExtension: one weight per point");
}

cplx PreparedExtension::operator()(const Eigen::VectorXd &x) const
{
  if (weights_.size() == 0) return 0.0;
  require(x.size() == points_.rows(), "PreparedExtension: x has the wrong dimension");
  const Eigen::VectorXd phase = points_.transpose() * x;
  double re = 0.0, im = 0.0;
  for (Eigen::Index j = 0; j < phase.size(); ++j) {
    const double c = std::cos(phase(j)), s = std::sin(phase(j));
    re += weights_(j).real() * c - weights_(j).imag() * s;
    im += weights_(j).real() * s + weights_(j).imag() * c;
  }
  return {re, im};
}

std::vector<int> resolve_counts(const SurfaceMap &surface, const Box &box, double x_bound, const QuadratureSpec &quad)
{
  require(quad.points_per_axis >= 8, "QuadratureSpec: at least 8 points per axis");
  const Eigen::Index d = box.dim();
  const Eigen::VectorXd h = box.half_width();
  // sup |∂_iΣ| from central differences on a coarse probe grid.
  const int per_axis = std::max(2, std::min(9, static_cast<int>(std::pow(729.0, 1.0 / static_cast<double>(d)))));
  long total = 1;
  for (Eigen::Index a = 0; a < d; ++a) total *= per_axis;
  Eigen::VectorXd sup = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd u(d);
  for (long j = 0; j < total; ++j) {
    long rest = j;
    for (Eigen::Index a = 0; a < d; ++a) {
      u(a) = box.lo(a) + (box.hi(a) - box.lo(a)) * static_cast<double>(rest % per_axis) / (per_axis - 1);
      rest /= per_axis;
    }
    for (Eigen::Index a = 0; a < d; ++a) {
      const double step = 1e-6 * std::max(h(a), 1e-3);
      Eigen::VectorXd up = u, dn = u;
      up(a) += step;
      dn(a) -= step;
      sup(a) = std::max(sup(a), (surface(up) - surface(dn)).norm() / (2 * step));
    }
  }
  std::vector<int> counts(static_cast<std::size_t>(d));
  for (Eigen::Index a = 0; a < d; ++a) {
    const double need = std::ceil(4.0 * x_bound * 1.05 * sup(a) * h(a) / M_PI);
    int M = quad.points_per_axis;
    if (need > M) {
      if (!quad.adapt)
        throw BudgetError("extension: oscillation-resolution precondition violated on axis " + std::to_string(a) +
                          " (need " + std::to_string(static_cast<long>(need)) + " points per axis)");
      M = static_cast<int>(need);
    }
    counts[static_cast<std::size_t>(a)] = M;
  }
  return counts;
}

PreparedExtension prepare_extension(const SurfaceMap &surface, const std::function<double(const Eigen::VectorXd &)> &amp,
                                    const Density &f, const Box &box, double x_bound, const QuadratureSpec &quad)
{
  const std::vector<int> counts = resolve_counts(surface, box, x_bound, quad);
  const TensorGrid g = tensor_grid(box, counts, quad.rule, quad.max_nodes);
  std::vector<Eigen::VectorXd> pts;
  std::vector<cplx> ws;
  for (Eigen::Index j = 0; j < g.weights.size(); ++j) {
    const Eigen::VectorXd u = g.nodes.col(j);
    const double a = amp(u);
    if (a == 0.0) continue;
    const cplx w = f(u) * a * g.weights(j);
    if (w == 0.0) continue;
    pts.push_back(surface(u));
    ws.push_back(w);
  }
  const Eigen::Index n = pts.empty() ? 0 : pts.front().size();
  Eigen::MatrixXd P(n, static_cast<Eigen::Index>(pts.size()));
  Eigen::VectorXcd W(static_cast<Eigen::Index>(ws.size()));
  for (std::size_t j = 0; j < pts.size(); ++j) {
    P.col(static_cast<Eigen::Index>(j)) = pts[j];
    W(static_cast<Eigen::Index>(j)) = ws[j];
  }
  return PreparedExtension(std::move(P), std::move(W));
}

Box extension_box(const PolyGraphParam &param, const AmplitudeSpec &amp, const Density &f)
{
  require(amp.center.size() == param.in_dim(), "extension: amplitude lives in the wrong dimension");
  Box box = amp.support();
  require(box.lo.cwiseAbs().maxCoeff() < param.domain_radius() && box.hi.cwiseAbs().maxCoeff() < param.domain_radius(),
          "extension: amplitude support is not inside the parametrisation domain");
  if (f.support) box = box.intersect(*f.support);
  return box;
}

ExtensionValue extend(const PolyGraphParam &param, const AmplitudeSpec &amp, const Density &f, const Eigen::VectorXd &x,
                      const QuadratureSpec &quad)
{
  require(x.size() == param.graph_dim(), "extend: x has the wrong dimension");
  const Box box = extension_box(param, amp, f);
  if (box.empty()) return {0.0, 0.0};
  const SurfaceMap surface = [&param](const Eigen::VectorXd &u) { return param(u); };
  const std::function<double(const Eigen::VectorXd &)> a = [&amp](const Eigen::VectorXd &u) { return amp(u); };
  const std::vector<int> counts = resolve_counts(surface, box, x.norm(), quad);
  auto integrate = [&](const std::vector<int> &c) {
    const TensorGrid g = tensor_grid(box, c, quad.rule, quad.max_nodes);
    cplx sum = 0.0;
    for (Eigen::Index j = 0; j < g.weights.size(); ++j) {
      const Eigen::VectorXd u = g.nodes.col(j);
      const double av = a(u);
      if (av == 0.0) continue;
      sum += f(u) * av * g.weights(j) * std::polar(1.0, x.dot(surface(u)));
    }
    return sum;
  };
  std::vector<int> half = counts;
  for (int &c : half) c = std::max(4, c / 2);
  ExtensionValue v;
  v.value = integrate(counts);
  v.error_estimate = std::abs(v.value - integrate(half));
  return v;
}

double phi_jacobian_det(const NestedFamily &family, int l, const Eigen::VectorXd &s, const Eigen::VectorXd &eta)
{
  return std::abs(phi_jacobian(family, 0, l, s, eta).determinant());
}

namespace {

// s-box covering the pullback of supp(a) (and supp f) through Φ_ℓ(·;η) for η ∈ P_ℓ(μ).
Box pullback_box(const NestedFamily &F, int l, const AmplitudeSpec &amp, const std::optional<Box> &fsupp,
                 const Eigen::VectorXd &eta_half)
{
  const int dl = F.dim(l);
  double margin = 0.0;
  for (int t = 1; t <= l; ++t)
    margin += eta_half(F.codim_total(t - 1)) * std::sqrt(static_cast<double>(F.codim(t)));
  Box a = amp.support();
  if (fsupp) a = a.intersect(*fsupp);
  Box b{a.lo.head(dl).array() - margin, a.hi.head(dl).array() + margin};
  const double r = 0.999 * F.radius(l);
  b.lo = b.lo.cwiseMax(-r);
  b.hi = b.hi.cwiseMin(r);
  return b;
}

Eigen::VectorXd p_half_widths(const NestedFamily &F, int l, const Eigen::VectorXd &mu)
{
  const double f = std::pow(F.c_cover(), 1.0 / 8.0);
  Eigen::VectorXd h(F.codim_total(l));
  for (int t = 1; t <= l; ++t) h.segment(F.codim_total(t - 1), F.codim(t)).setConstant(f * mu(t - 1));
  return h;
}

void check_slice_scales(const NestedFamily &F, int l, const Eigen::VectorXd &mu)
{
  require(l >= 0 && l <= F.depth(), "slice: level out of range");
  check_compatible_scales(mu, F.depth());
  for (int t = 1; t <= l; ++t)
    require(mu(t - 1) <= F.c_cover() * F.mu_threshold(), "slice: scale exceeds C∘·μ∘");
}

} // namespace

SliceDecomposition slice_decompose(const NestedFamily &family, int l, const AmplitudeSpec &amp, const Density &f,
                                   const Eigen::VectorXd &mu, const SliceOptions &opts)
{
  check_slice_scales(family, l, mu);
  const PolyGraphParam &S = family.sigma0();
  const Box direct = extension_box(S, amp, f);

  // Support precondition: supp(f·a) ⊆ 𝔑_{0,ℓ}(μ).
  if (l > 0 && !direct.empty()) {
    std::vector<int> probe(static_cast<std::size_t>(direct.dim()), opts.support_probe);
    const TensorGrid g = tensor_grid(direct, probe, QuadratureRule::Midpoint, 4'000'000);
    std::vector<double> mag(static_cast<std::size_t>(g.weights.size()));
    double top = 0.0;
    for (Eigen::Index j = 0; j < g.weights.size(); ++j) {
      const Eigen::VectorXd u = g.nodes.col(j);
      mag[static_cast<std::size_t>(j)] = std::abs(f(u)) * amp(u);
      top = std::max(top, mag[static_cast<std::size_t>(j)]);
    }
    NeighbourhoodOracle oracle(family);
    for (Eigen::Index j = 0; j < g.weights.size(); ++j)
      if (mag[static_cast<std::size_t>(j)] > 1e-12 * top && !oracle.contains(g.nodes.col(j), mu, 1.0, l))
        throw PreconditionError("slice_decompose: f·a is not supported in the neighbourhood of M_l");
  }

  SliceDecomposition out;
  out.family_ = &family;
  out.l_ = l;
  out.amp_ = amp;
  out.f_ = f;
  const Eigen::VectorXd eta_half = p_half_widths(family, l, mu);
  out.s_box_ = pullback_box(family, l, amp, f.support, eta_half);
  const double x_bound = opts.x_bound > 0 ? opts.x_bound : 8.0 * std::sqrt(static_cast<double>(family.ambient_dim()));

  const int c = family.codim_total(l);
  TensorGrid eta_grid;
  if (c == 0) {
    eta_grid.nodes.resize(0, 1);
    eta_grid.weights = Eigen::VectorXd::Ones(1);
  } else {
    std::vector<int> counts(static_cast<std::size_t>(c), opts.eta_quad.points_per_axis);
    eta_grid = tensor_grid(Box{-eta_half, eta_half}, counts, opts.eta_quad.rule, opts.eta_quad.max_nodes);
  }
  const SurfaceMap base = [&family, l](const Eigen::VectorXd &s) { return family.embed<double>(l, s); };
  const std::vector<int> s_counts = resolve_counts(base, out.s_box_, x_bound, opts.s_quad);
  const TensorGrid s_grid = tensor_grid(out.s_box_, s_counts, opts.s_quad.rule, opts.s_quad.max_nodes);

  struct Raw
  {
    Eigen::MatrixXd pts;
    std::vector<cplx> w;
    std::vector<double> jac;
  };
  std::vector<Raw> raw(static_cast<std::size_t>(eta_grid.weights.size()));
  double supJ = 1.0;
  const Eigen::VectorXd s0 = Eigen::VectorXd::Zero(family.dim(l));
  for (Eigen::Index e = 0; e < eta_grid.weights.size(); ++e) {
    const Eigen::VectorXd eta = eta_grid.nodes.col(e);
    SliceDecomposition::Slice sl;
    sl.eta = eta;
    sl.eta_weight = eta_grid.weights(e);
    sl.offset = S(family.phi<double>(0, l, s0, eta));
    Raw &r = raw[static_cast<std::size_t>(e)];
    std::vector<Eigen::VectorXd> pts;
    for (Eigen::Index j = 0; j < s_grid.weights.size(); ++j) {
      const Eigen::VectorXd s = s_grid.nodes.col(j);
      Eigen::VectorXd u;
      try {
        u = family.phi<double>(0, l, s, eta);
      } catch (const DomainError &) {
        continue; // outside U₀, where a vanishes
      }
      const double a = amp(u);
      if (a == 0.0) continue;
      const cplx fv = f(u);
      if (fv == 0.0) continue;
      const double J = l == 0 ? 1.0 : phi_jacobian_det(family, l, s, eta);
      supJ = std::max(supJ, J);
      pts.push_back(S(u) - sl.offset);
      r.w.push_back(fv * a * s_grid.weights(j));
      r.jac.push_back(J);
    }
    r.pts.resize(family.ambient_dim(), static_cast<Eigen::Index>(pts.size()));
    for (std::size_t j = 0; j < pts.size(); ++j) r.pts.col(static_cast<Eigen::Index>(j)) = pts[j];
    out.slices_.push_back(std::move(sl));
  }
  out.C_ = supJ;
  for (std::size_t e = 0; e < raw.size(); ++e) {
    Eigen::VectorXcd W(static_cast<Eigen::Index>(raw[e].w.size()));
    for (std::size_t j = 0; j < raw[e].w.size(); ++j) W(static_cast<Eigen::Index>(j)) = raw[e].w[j] * (raw[e].jac[j] / supJ);
    out.slices_[e].inner = PreparedExtension(std::move(raw[e].pts), std::move(W));
  }
  return out;
}

cplx SliceDecomposition::evaluate(const Eigen::VectorXd &x) const
{
  cplx sum = 0.0;
  for (const auto &sl : slices_) {
    if (sl.inner.size() == 0) continue;
    sum += sl.eta_weight * std::polar(1.0, x.dot(sl.offset)) * sl.inner(x);
  }
  return C_ * sum;
}

cplx SliceDecomposition::slice_density(const Eigen::VectorXd &eta, const Eigen::VectorXd &s) const
{
  return f_(family_->phi<double>(0, l_, s, eta));
}

double SliceDecomposition::slice_amplitude(const Eigen::VectorXd &eta, const Eigen::VectorXd &s) const
{
  const Eigen::VectorXd u = family_->phi<double>(0, l_, s, eta);
  return amp_(u) * (l_ == 0 ? 1.0 : phi_jacobian_det(*family_, l_, s, eta)) / C_;
}

Eigen::VectorXd SliceDecomposition::slice_surface(const Eigen::VectorXd &eta, const Eigen::VectorXd &s) const
{
  const PolyGraphParam &S = family_->sigma0();
  return S(family_->phi<double>(0, l_, s, eta)) - S(family_->phi<double>(0, l_, Eigen::VectorXd::Zero(s.size()), eta));
}

namespace {

std::vector<std::vector<int>> multi_indices(int n, int max_order)
{
  std::vector<std::vector<int>> out;
  std::vector<int> a(static_cast<std::size_t>(n), 0);
  // Enumerate by total degree so partial sums by order are prefixes.
  for (int order = 0; order <= max_order; ++order) {
    std::function<void(int, int)> rec = [&](int pos, int left) {
      if (pos == n - 1) {
        a[static_cast<std::size_t>(pos)] = left;
        out.push_back(a);
        return;
      }
      for (int v = left; v >= 0; --v) {
        a[static_cast<std::size_t>(pos)] = v;
        rec(pos + 1, left - v);
      }
    };
    rec(0, order);
  }
  return out;
}

} // namespace

LocalConstancyReport local_constancy_error(const NestedFamily &family, int l, const Density &g, const AmplitudeSpec &amp,
                                           double R, const Eigen::VectorXd &mu, int order, const LocalConstancyOptions &opts)
{
  require(order >= 0, "local_constancy_error: negative truncation order");
  require(R >= 1.0, "local_constancy_error: R must be at least 1");
  check_slice_scales(family, l, mu);
  double top = 0.0;
  for (int t = 1; t <= l; ++t) top = std::max(top, mu(t - 1));
  if (!(top < std::min(1.0 / R, family.c_cover() * family.mu_threshold())))
    throw PreconditionError("local_constancy_error: scales must satisfy max μ_i < min(1/R, C∘μ∘)");

  const int n = family.ambient_dim();
  const PolyGraphParam &S = family.sigma0();
  const Eigen::VectorXd eta_half = p_half_widths(family, l, mu);
  const Box sbox = pullback_box(family, l, amp, std::nullopt, eta_half);
  Box box = g.support ? sbox.intersect(*g.support) : sbox;
  const SurfaceMap base = [&family, l](const Eigen::VectorXd &s) { return family.embed<double>(l, s); };
  const std::vector<int> counts = resolve_counts(base, box, R * std::sqrt(static_cast<double>(n)), opts.s_quad);
  const TensorGrid grid = tensor_grid(box, counts, opts.s_quad.rule, opts.s_quad.max_nodes);
  const Eigen::Index N = grid.weights.size();
  const Eigen::VectorXd s0 = Eigen::VectorXd::Zero(family.dim(l));
  const Eigen::VectorXd zero_eta = Eigen::VectorXd::Zero(family.codim_total(l));

  Eigen::MatrixXd base_pts(n, N);
  Eigen::VectorXcd gw(N);
  for (Eigen::Index j = 0; j < N; ++j) {
    const Eigen::VectorXd s = grid.nodes.col(j);
    base_pts.col(j) = S(family.phi<double>(0, l, s, zero_eta)) - S(family.phi<double>(0, l, s0, zero_eta));
    gw(j) = g(s) * grid.weights(j);
  }

  struct EtaData
  {
    Eigen::MatrixXd pts;  // Σ_{ℓ,η}(s)
    Eigen::MatrixXd err;  // ℰ(s)
    Eigen::VectorXd amp;  // a_{ℓ,η}(s) before normalisation
  };
  std::vector<EtaData> etas;
  double supE = 0.0, supJ = 1.0;
  for (int e = 0; e < opts.eta_samples; ++e) {
    Rng rng(derive_seed(opts.seed, {1, static_cast<std::uint64_t>(e)}));
    Eigen::VectorXd eta(eta_half.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) eta(i) = uniform(rng, -eta_half(i), eta_half(i));
    EtaData d{Eigen::MatrixXd(n, N), Eigen::MatrixXd(n, N), Eigen::VectorXd::Zero(N)};
    const Eigen::VectorXd off = S(family.phi<double>(0, l, s0, eta));
    for (Eigen::Index j = 0; j < N; ++j) {
      const Eigen::VectorXd s = grid.nodes.col(j);
      Eigen::VectorXd u;
      try {
        u = family.phi<double>(0, l, s, eta);
      } catch (const DomainError &) {
        d.pts.col(j) = base_pts.col(j);
        d.err.col(j).setZero();
        continue;
      }
      d.pts.col(j) = S(u) - off;
      d.err.col(j) = d.pts.col(j) - base_pts.col(j);
      const double a = amp(u);
      if (a == 0.0) continue;
      const double J = l == 0 ? 1.0 : phi_jacobian_det(family, l, s, eta);
      supJ = std::max(supJ, J);
      d.amp(j) = a * J;
      supE = std::max(supE, R * d.err.col(j).cwiseAbs().maxCoeff());
    }
    etas.push_back(std::move(d));
  }
  LocalConstancyReport rep;
  rep.C = supE > 1e-12 ? 4.0 * supE : 1.0;
  rep.errors.assign(static_cast<std::size_t>(order + 1), 0.0);
  const auto alphas = multi_indices(n, order);
  std::vector<double> fact(static_cast<std::size_t>(order + 1), 1.0);
  for (int i = 1; i <= order; ++i) fact[static_cast<std::size_t>(i)] = fact[static_cast<std::size_t>(i - 1)] * i;

  for (int xi = 0; xi < opts.x_samples; ++xi) {
    Rng rng(derive_seed(opts.seed, {2, static_cast<std::uint64_t>(xi)}));
    const Eigen::VectorXd x = uniform_box(rng, n, R);
    const Eigen::VectorXd base_phase = base_pts.transpose() * x;
    for (const EtaData &d : etas) {
      const Eigen::VectorXd phase = d.pts.transpose() * x;
      cplx exact = 0.0;
      Eigen::VectorXcd wb(N); // g·a_η·w·e^{ix·Σ_{ℓ,0}}
      for (Eigen::Index j = 0; j < N; ++j) {
        const double a = d.amp(j) / supJ;
        exact += gw(j) * a * std::polar(1.0, phase(j));
        wb(j) = gw(j) * a * std::polar(1.0, base_phase(j));
      }
      cplx approx = 0.0;
      int current = 0;
      for (const auto &alpha : alphas) {
        int deg = 0;
        for (int v : alpha) deg += v;
        while (deg > current) {
          rep.errors[static_cast<std::size_t>(current)] = std::max(rep.errors[static_cast<std::size_t>(current)], std::abs(exact - approx));
          ++current;
        }
        // B_α(x) = Π (i C R^{−1} x_j)^{α_j}/α_j!
        cplx B = 1.0;
        for (int j = 0; j < n; ++j) {
          const int aj = alpha[static_cast<std::size_t>(j)];
          B *= std::pow(cplx(0.0, rep.C * x(j) / R), aj) / fact[static_cast<std::size_t>(aj)];
        }
        // E_{S_ℓ}[a_η^α g](x) with a_η^α = a_η Π (C^{−1} R ℰ_j)^{α_j}.
        cplx T = 0.0;
        for (Eigen::Index k = 0; k < N; ++k) {
          double m = 1.0;
          for (int j = 0; j < n; ++j) {
            const int aj = alpha[static_cast<std::size_t>(j)];
            if (aj) m *= std::pow(R * d.err(j, k) / rep.C, aj);
          }
          T += wb(k) * m;
        }
        approx += B * T;
      }
      rep.errors[static_cast<std::size_t>(current)] = std::max(rep.errors[static_cast<std::size_t>(current)], std::abs(exact - approx));
    }
  }
  return rep;
}

} // namespace rlab
