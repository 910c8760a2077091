#include "rlab/wavepackets.hpp"
#include "rlab/bump.hpp"
#include "rlab/random.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rlab {

namespace {

double psi(const Eigen::VectorXd &y)
{
  double v = 1.0;
  for (Eigen::Index i = 0; i < y.size() && v != 0.0; ++i) v *= packet_bump(y(i));
  return v;
}

double psi_tilde(const Eigen::VectorXd &y)
{
  double v = 1.0;
  for (Eigen::Index i = 0; i < y.size() && v != 0.0; ++i) v *= packet_bump(0.5 * y(i));
  return v;
}

// ∫ψ̃(t)² dt in one dimension.
double psi_tilde_sq_1d()
{
  static const double value = [] {
    const int M = 8192;
    double s = 0.0;
    for (int i = 0; i < M; ++i) {
      const double t = -4.0 + 8.0 * (i + 0.5) / M;
      const double b = packet_bump(0.5 * t);
      s += b * b;
    }
    return s * 8.0 / M;
  }();
  return value;
}

Eigen::VectorXd uniform_in(Rng &rng, const Eigen::VectorXd &half)
{
  Eigen::VectorXd v(half.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = uniform(rng, -half(i), half(i));
  return v;
}

} // namespace

int packet_level(double R, const Eigen::VectorXd &mu)
{
  const double t = 1.0 / std::sqrt(R);
  int l = 0;
  while (l < mu.size() && mu(l) <= t) ++l;
  return l;
}

Eigen::VectorXd packet_scales(const NestedFamily &family, double R, const Eigen::VectorXd &mu, int ell_star)
{
  Eigen::VectorXd D(family.dim(0));
  for (int t = 1; t <= ell_star; ++t) D.segment(family.codim_total(t - 1), family.codim(t)).setConstant(mu(t - 1));
  D.tail(family.dim(ell_star)).setConstant(1.0 / std::sqrt(R));
  return D;
}

WavePacketCover::WavePacketCover(const NestedFamily &family, double R, const Eigen::VectorXd &mu, const CoverOptions &opts)
    : family_(&family), R_(R), mu_(mu)
{
  require(R >= 1.0, "build_cover: R must be at least 1");
  check_compatible_scales(mu, family.depth());
  if (mu.size() > 0) {
    require(mu(0) >= (1.0 - 1e-12) / R, "build_cover: scales must satisfy R^{-1} <= mu_1");
    require(mu(mu.size() - 1) <= family.mu_threshold() * (1.0 + 1e-12), "build_cover: scales must satisfy mu_r <= mu_0");
  }
  ell_star_ = packet_level(R, mu);
  const int ds = family.dim(ell_star_);
  const int d = family.dim(0);
  const double h = 1.0 / std::sqrt(R);
  const double radius = family.radius(ell_star_);
  const long K = static_cast<long>(std::ceil(radius / h)) - 1; // |k h| < radius for |k| ≤ K
  const long per_axis = 2 * K + 1;
  double total = 1.0;
  for (int a = 0; a < ds; ++a) total *= static_cast<double>(per_axis);
  if (total > static_cast<double>(opts.max_cells))
    throw BudgetError("build_cover: anchor grid has " + std::to_string(static_cast<long long>(total)) +
                      " points, over the budget of " + std::to_string(opts.max_cells));

  const double root_c = std::sqrt(family.c_cover());
  const Eigen::VectorXd D = packet_scales(family, R, mu, ell_star_);
  std::optional<NeighbourhoodOracle> oracle;
  if (ell_star_ < family.depth()) oracle.emplace(family, ell_star_);
  Eigen::VectorXd s(ds);
  for (long j = 0; j < static_cast<long>(total); ++j) {
    long rest = j;
    for (int a = 0; a < ds; ++a) {
      s(a) = static_cast<double>(rest % per_axis - K) * h;
      rest /= per_axis;
    }
    if (!family.in_domain(ell_star_, s)) continue;
    if (oracle && !oracle->contains(s, mu, 2.0 * family.c_cover())) continue;
    PacketCell c;
    c.anchor = s;
    c.center = family.sigma<double>(ell_star_, s);
    if (ell_star_ == 0) {
      c.shape = root_c * h * Eigen::MatrixXd::Identity(d, d);
    } else {
      c.shape = root_c * derivative_matrices(family, ell_star_, s).Lambda * D.asDiagonal();
    }
    c.shape_inv = c.shape.inverse();
    c.det = std::abs(c.shape.determinant());
    c.dsigma = sigma_jacobian(family, ell_star_, s);
    c.dembed = embed_jacobian(family, ell_star_, s);
    cells_.push_back(std::move(c));
  }
  if (!cells_.empty()) {
    bucket_ = 0.0;
    for (const auto &c : cells_) bucket_ = std::max(bucket_, 4.0 * c.shape.cwiseAbs().rowwise().sum().maxCoeff());
  }
  for (std::size_t i = 0; i < cells_.size(); ++i) index_[bucket_of(cells_[i].center)].push_back(static_cast<int>(i));
}

std::vector<long> WavePacketCover::bucket_of(const Eigen::VectorXd &u) const
{
  std::vector<long> b(static_cast<std::size_t>(u.size()));
  for (Eigen::Index i = 0; i < u.size(); ++i) b[static_cast<std::size_t>(i)] = static_cast<long>(std::floor(u(i) / bucket_));
  return b;
}

std::vector<int> WavePacketCover::cells_containing(const Eigen::VectorXd &u, double scale) const
{
  require(scale <= 4.0, "cells_containing: scale above 4 exceeds the index radius");
  std::vector<int> out;
  const std::vector<long> base = bucket_of(u);
  const int d = static_cast<int>(u.size());
  long combos = 1;
  for (int a = 0; a < d; ++a) combos *= 3;
  std::vector<long> key(base.size());
  for (long c = 0; c < combos; ++c) {
    long rest = c;
    for (int a = 0; a < d; ++a) {
      key[static_cast<std::size_t>(a)] = base[static_cast<std::size_t>(a)] + rest % 3 - 1;
      rest /= 3;
    }
    const auto it = index_.find(key);
    if (it == index_.end()) continue;
    for (int i : it->second) {
      const PacketCell &cell = cells_[static_cast<std::size_t>(i)];
      if ((cell.shape_inv * (u - cell.center)).cwiseAbs().maxCoeff() <= scale) out.push_back(i);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

double WavePacketCover::partition_sum(const Eigen::VectorXd &u) const
{
  double s = 0.0;
  for (int i : cells_containing(u, 2.0)) {
    const PacketCell &c = cells_[static_cast<std::size_t>(i)];
    s += psi(c.shape_inv * (u - c.center));
  }
  return s;
}

int overlap_count(const WavePacketCover &cover, const Eigen::VectorXd &u)
{
  return static_cast<int>(cover.cells_containing(u, 4.0).size());
}

std::vector<Eigen::VectorXd> sample_neighbourhood(const NestedFamily &family, const Eigen::VectorXd &mu, int count,
                                                  std::uint64_t seed)
{
  check_compatible_scales(mu, family.depth());
  const int r = family.depth();
  NeighbourhoodOracle oracle(family);
  Eigen::VectorXd eta_half(family.codim_total(r));
  const double f = std::pow(family.c_cover(), 1.0 / 8.0);
  for (int t = 1; t <= r; ++t) eta_half.segment(family.codim_total(t - 1), family.codim(t)).setConstant(f * mu(t - 1));
  const Eigen::VectorXd s_half = Eigen::VectorXd::Constant(family.dim(r), family.radius(r) * (1.0 - 1e-9));
  Rng rng(derive_seed(seed, {0x6e62}));
  std::vector<Eigen::VectorXd> out;
  const long max_attempts = 200L * count + 1000;
  for (long attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < count; ++attempt) {
    const Eigen::VectorXd s = uniform_in(rng, s_half);
    const Eigen::VectorXd eta = uniform_in(rng, eta_half);
    Eigen::VectorXd u;
    try {
      u = family.phi<double>(0, r, s, eta);
    } catch (const DomainError &) {
      continue;
    }
    if (oracle.contains(u, mu, 1.0)) out.push_back(std::move(u));
  }
  if (static_cast<int>(out.size()) < count)
    throw BudgetError("sample_neighbourhood: acceptance too low to draw " + std::to_string(count) + " points");
  return out;
}

bool in_tube(const NestedFamily &family, const Eigen::VectorXd &u)
{
  if (!family.in_domain(0, u)) return false;
  try {
    const PhiInverse inv = phi_inverse(family, 0, family.depth(), u);
    return family.in_domain(family.depth(), inv.s) &&
           (inv.eta.size() == 0 || inv.eta.cwiseAbs().maxCoeff() < family.offset_bound());
  } catch (const ConvergenceError &) {
    return false;
  } catch (const DomainError &) {
    return false;
  }
}

namespace {

struct InflationCount
{
  long tested = 0;
  long violations = 0;
};

InflationCount inflation(const WavePacketCover &cover, int samples, std::uint64_t seed)
{
  InflationCount out;
  const auto &cells = cover.cells();
  if (cells.empty()) return out;
  const NestedFamily &F = cover.family();
  const Eigen::VectorXd big = F.c_cover() * F.c_cover() * cover.mu();
  NeighbourhoodOracle oracle(F);
  Rng rng(derive_seed(seed, {0x1f}));
  const Eigen::VectorXd four = Eigen::VectorXd::Constant(F.dim(0), 4.0);
  for (int i = 0; i < samples; ++i) {
    const std::size_t c = static_cast<std::size_t>(rng() % cells.size());
    const Eigen::VectorXd u = cells[c].center + cells[c].shape * uniform_in(rng, four);
    if (!in_tube(F, u)) continue;
    ++out.tested;
    if (!oracle.contains(u, big, 1.0)) ++out.violations;
  }
  return out;
}

} // namespace

long support_inflation_check(const WavePacketCover &cover, int samples, std::uint64_t seed)
{
  return inflation(cover, samples, seed).violations;
}

CoverAudit audit_cover(const WavePacketCover &cover, int samples, std::uint64_t seed)
{
  CoverAudit a;
  a.cells = static_cast<long>(cover.cells().size());
  a.ell_star = cover.ell_star();
  a.overlap_bound = 2 * static_cast<int>(std::lround(std::pow(3.0, cover.family().dim(0))));
  const auto pts = sample_neighbourhood(cover.family(), cover.mu(), samples, derive_seed(seed, {1}));
  a.samples = static_cast<long>(pts.size());
  for (const auto &u : pts) {
    if (cover.cells_containing(u, 1.0).empty()) ++a.uncovered;
    a.max_overlap = std::max(a.max_overlap, overlap_count(cover, u));
  }
  const InflationCount inf = inflation(cover, samples, derive_seed(seed, {2}));
  a.inflation_samples = inf.tested;
  a.inflation_violations = inf.violations;
  return a;
}

namespace {

// In-place forward DFT along every axis of a d-dimensional array (axis 0 fastest).
void fft_nd(std::vector<cplx> &data, const std::vector<int> &K)
{
  Eigen::FFT<double> fft;
  std::size_t stride = 1;
  for (std::size_t a = 0; a < K.size(); ++a) {
    const std::size_t len = static_cast<std::size_t>(K[a]);
    const std::size_t block = stride * len;
    std::vector<cplx> line(len), out(len);
    for (std::size_t outer = 0; outer < data.size(); outer += block)
      for (std::size_t inner = 0; inner < stride; ++inner) {
        for (std::size_t k = 0; k < len; ++k) line[k] = data[outer + inner + k * stride];
        fft.fwd(out, line);
        for (std::size_t k = 0; k < len; ++k) data[outer + inner + k * stride] = out[k];
      }
    stride = block;
  }
}

int signed_bin(int j, int K) { return j < K / 2 ? j : j - K; }

} // namespace

PacketDecomposition decompose(const WavePacketCover &cover, const Density &f, const DecomposeOptions &opts)
{
  require(opts.min_points >= 4 && opts.max_points >= opts.min_points, "decompose: invalid grid sizes");
  const int d = cover.family().dim(0);
  PacketDecomposition out;
  out.cell_offsets.push_back(0);
  for (std::size_t ci = 0; ci < cover.cells().size(); ++ci) {
    const PacketCell &cell = cover.cells()[ci];
    std::vector<int> K(static_cast<std::size_t>(d), opts.min_points);
    std::vector<cplx> coef;
    double energy = 0.0;
    for (;;) {
      std::size_t total = 1;
      for (int k : K) total *= static_cast<std::size_t>(k);
      coef.assign(total, 0.0);
      Eigen::VectorXd y(d);
      for (std::size_t j = 0; j < total; ++j) {
        std::size_t rest = j;
        for (int a = 0; a < d; ++a) {
          const int Ka = K[static_cast<std::size_t>(a)];
          y(a) = -M_PI + 2.0 * M_PI * static_cast<double>(rest % static_cast<std::size_t>(Ka)) / Ka;
          rest /= static_cast<std::size_t>(Ka);
        }
        const double p = psi(y);
        if (p == 0.0) continue;
        const Eigen::VectorXd u = cell.center + cell.shape * y;
        const cplx fv = f(u);
        if (fv == 0.0) continue;
        const double S = cover.partition_sum(u);
        if (S < 1.0 - 1e-12)
          throw PreconditionError("decompose: f is not supported in the covered neighbourhood (support violation)");
        coef[j] = fv * p / S;
      }
      fft_nd(coef, K);
      // c_m = (−1)^{Σm} K^{−d} · DFT, from y_k = −π + 2πk/K.
      energy = 0.0;
      std::vector<double> outer(static_cast<std::size_t>(d), 0.0);
      double scale = 1.0;
      for (int k : K) scale /= k;
      for (std::size_t j = 0; j < total; ++j) {
        std::size_t rest = j;
        int parity = 0;
        for (int a = 0; a < d; ++a) {
          const int Ka = K[static_cast<std::size_t>(a)];
          const int m = signed_bin(static_cast<int>(rest % static_cast<std::size_t>(Ka)), Ka);
          parity += m;
          rest /= static_cast<std::size_t>(Ka);
        }
        coef[j] *= (parity % 2 == 0 ? scale : -scale);
        const double e = std::norm(coef[j]);
        energy += e;
        rest = j;
        for (int a = 0; a < d; ++a) {
          const int Ka = K[static_cast<std::size_t>(a)];
          const int m = signed_bin(static_cast<int>(rest % static_cast<std::size_t>(Ka)), Ka);
          if (std::abs(m) >= Ka / 4) outer[static_cast<std::size_t>(a)] += e;
          rest /= static_cast<std::size_t>(Ka);
        }
      }
      if (energy == 0.0) break;
      bool refined = false;
      double worst = 0.0;
      for (int a = 0; a < d; ++a) {
        const double frac = outer[static_cast<std::size_t>(a)] / energy;
        if (frac > opts.spectral_tol && K[static_cast<std::size_t>(a)] < opts.max_points) {
          K[static_cast<std::size_t>(a)] *= 2;
          refined = true;
        } else {
          worst = std::max(worst, frac);
        }
      }
      if (!refined) {
        out.worst_spectral_tail = std::max(out.worst_spectral_tail, worst);
        break;
      }
    }
    out.grid_points.push_back(K);
    if (energy > 0.0) {
      std::vector<std::size_t> order(coef.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return std::norm(coef[a]) > std::norm(coef[b]); });
      double kept = 0.0;
      for (std::size_t idx : order) {
        if (energy - kept <= opts.tail_tol * energy) break;
        kept += std::norm(coef[idx]);
        WavePacket p;
        p.cell = static_cast<int>(ci);
        p.index.resize(d);
        std::size_t rest = idx;
        for (int a = 0; a < d; ++a) {
          const int Ka = K[static_cast<std::size_t>(a)];
          p.index(a) = signed_bin(static_cast<int>(rest % static_cast<std::size_t>(Ka)), Ka);
          rest /= static_cast<std::size_t>(Ka);
        }
        p.frequency = cell.shape_inv.transpose() * p.index.cast<double>();
        p.coefficient = coef[idx];
        out.packets.push_back(std::move(p));
      }
    }
    out.cell_offsets.push_back(out.packets.size());
  }
  return out;
}

cplx packet_value(const WavePacketCover &cover, const WavePacket &p, const Eigen::VectorXd &u)
{
  const PacketCell &c = cover.cells()[static_cast<std::size_t>(p.cell)];
  const Eigen::VectorXd y = c.shape_inv * (u - c.center);
  const double w = psi_tilde(y);
  if (w == 0.0) return 0.0;
  return p.coefficient * std::polar(w, p.index.cast<double>().dot(y));
}

cplx reconstruct(const WavePacketCover &cover, const PacketDecomposition &dec, const Eigen::VectorXd &u)
{
  cplx sum = 0.0;
  std::vector<std::vector<cplx>> table;
  for (int ci : cover.cells_containing(u, 4.0)) {
    const std::size_t c = static_cast<std::size_t>(ci);
    const PacketCell &cell = cover.cells()[c];
    const Eigen::VectorXd y = cell.shape_inv * (u - cell.center);
    const double w = psi_tilde(y);
    if (w == 0.0 || dec.cell_offsets[c] == dec.cell_offsets[c + 1]) continue;
    // e^{i m_a y_a} for m_a ∈ [−K_a/2, K_a/2), one table per axis.
    const std::vector<int> &K = dec.grid_points[c];
    table.resize(K.size());
    for (std::size_t a = 0; a < K.size(); ++a) {
      table[a].resize(static_cast<std::size_t>(K[a]));
      for (int m = -K[a] / 2; m < K[a] / 2; ++m)
        table[a][static_cast<std::size_t>(m + K[a] / 2)] = std::polar(1.0, m * y(static_cast<Eigen::Index>(a)));
    }
    cplx cell_sum = 0.0;
    for (std::size_t k = dec.cell_offsets[c]; k < dec.cell_offsets[c + 1]; ++k) {
      const WavePacket &p = dec.packets[k];
      cplx e = p.coefficient;
      for (std::size_t a = 0; a < K.size(); ++a) e *= table[a][static_cast<std::size_t>(p.index(static_cast<Eigen::Index>(a)) + K[a] / 2)];
      cell_sum += e;
    }
    sum += w * cell_sum;
  }
  return sum;
}

double packet_energy(const WavePacketCover &cover, const WavePacket &p)
{
  const PacketCell &c = cover.cells()[static_cast<std::size_t>(p.cell)];
  return std::norm(p.coefficient) * c.det * std::pow(psi_tilde_sq_1d(), static_cast<double>(c.shape.rows()));
}

ReconstructionReport reconstruction_report(const WavePacketCover &cover, const PacketDecomposition &dec, const Density &f,
                                           const Box &box, int points_per_axis)
{
  const int d = static_cast<int>(box.dim());
  const TensorGrid g =
      tensor_grid(box, std::vector<int>(static_cast<std::size_t>(d), points_per_axis), QuadratureRule::Midpoint, 4'000'000);
  ReconstructionReport rep;
  double err = 0.0, norm = 0.0;
  for (Eigen::Index j = 0; j < g.weights.size(); ++j) {
    const Eigen::VectorXd u = g.nodes.col(j);
    const cplx fv = f(u);
    const cplx rv = reconstruct(cover, dec, u);
    err += std::norm(fv - rv) * g.weights(j);
    norm += std::norm(fv) * g.weights(j);
    if (fv != 0.0) rep.overlap = std::max(rep.overlap, overlap_count(cover, u));
  }
  require(norm > 0.0, "reconstruction_report: f vanishes on the box");
  rep.relative_l2 = std::sqrt(err / norm);
  double packets = 0.0;
  for (const auto &p : dec.packets) packets += packet_energy(cover, p);
  rep.parseval_ratio = packets / norm;
  rep.parseval_upper = std::pow(psi_tilde_sq_1d() / (2.0 * M_PI), static_cast<double>(d));
  rep.parseval_lower = rep.overlap > 0 ? rep.parseval_upper / rep.overlap : 0.0;
  return rep;
}

double default_eps_circ(double eps, int n) { return eps / (100.0 * n); }

double PacketSlab::distance_to_core(const Eigen::VectorXd &x) const
{
  const Eigen::VectorXd r = normal_map * x + offset;
  const Eigen::MatrixXd G = normal_map * normal_map.transpose();
  return (normal_map.transpose() * G.ldlt().solve(r)).norm();
}

PacketSlab packet_slab(const WavePacketCover &cover, const WavePacket &p, double eps)
{
  require(eps > 0, "packet_slab: eps must be positive");
  const PacketCell &c = cover.cells()[static_cast<std::size_t>(p.cell)];
  PacketSlab s;
  s.normal_map = c.dembed.transpose();
  s.offset = c.dsigma.transpose() * p.frequency;
  s.width = std::pow(cover.R(), 0.5 + default_eps_circ(eps, cover.family().ambient_dim()));
  return s;
}

PreparedExtension packet_extension(const WavePacketCover &cover, const WavePacket &p, const AmplitudeSpec &amp,
                                   double x_bound, const QuadratureSpec &quad)
{
  const PacketCell &c = cover.cells()[static_cast<std::size_t>(p.cell)];
  const PolyGraphParam &S = cover.family().sigma0();
  require(amp.center.size() == S.in_dim(), "packet_extension: amplitude lives in the wrong dimension");
  const Box asup = amp.support();
  require(asup.lo.cwiseAbs().maxCoeff() < S.domain_radius() && asup.hi.cwiseAbs().maxCoeff() < S.domain_radius(),
          "packet_extension: amplitude support is not inside the parametrisation domain");
  const int d = S.in_dim();
  const SurfaceMap surface = [&](const Eigen::VectorXd &y) { return S(Eigen::VectorXd(c.center + c.shape * y)); };
  const std::function<double(const Eigen::VectorXd &)> a = [&](const Eigen::VectorXd &y) {
    const double t = psi_tilde(y);
    return t == 0.0 ? 0.0 : t * amp(c.center + c.shape * y);
  };
  const cplx coef = p.coefficient * c.det;
  const Eigen::VectorXd m = p.index.cast<double>();
  const Density f{[coef, m](const Eigen::VectorXd &y) { return coef * std::polar(1.0, m.dot(y)); }, std::nullopt};
  const Box box{Eigen::VectorXd::Constant(d, -4.0), Eigen::VectorXd::Constant(d, 4.0)};
  return prepare_extension(surface, a, f, box, x_bound, quad);
}

LocalisationReport localisation_decay(const WavePacketCover &cover, const AmplitudeSpec &amp, const WavePacket &p,
                                      int samples, std::uint64_t seed, double eps)
{
  const int n = cover.family().ambient_dim();
  const double R = cover.R();
  const PacketSlab slab = packet_slab(cover, p, eps);
  const PreparedExtension E = packet_extension(cover, p, amp, R * std::sqrt(static_cast<double>(n)));
  LocalisationReport rep;
  Rng rng(derive_seed(seed, {0x10ca1}));
  const long cap = 2000L * samples;
  for (long t = 0; t < cap && (rep.inside_samples < samples || rep.outside_samples < samples); ++t) {
    const Eigen::VectorXd x = uniform_box(rng, n, R);
    if (slab.contains(x)) {
      if (rep.inside_samples >= samples) continue;
      ++rep.inside_samples;
      rep.inside_max = std::max(rep.inside_max, std::abs(E(x)));
    } else if (slab.distance_to_core(x) >= 4.0 * slab.width) {
      if (rep.outside_samples >= samples) continue;
      ++rep.outside_samples;
      rep.outside_max = std::max(rep.outside_max, std::abs(E(x)));
    }
  }
  return rep;
}

} // namespace rlab
