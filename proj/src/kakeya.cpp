#include "rlab/kakeya.hpp"

#include "rlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rlab {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Slab::Slab(MatrixXd L, VectorXd v, double r) : map(std::move(L)), offset(std::move(v)), width(r)
{
  require(map.rows() >= 1 && map.rows() <= map.cols(), "Slab: map must be m × n with 1 ≤ m ≤ n");
  require(offset.size() == map.rows(), "Slab: offset length differs from the map rank");
  require(r > 0, "Slab: width must be positive");
  require(matrix_rank(map) == map.rows(), "Slab: map must be surjective");
}

void SlabFamily::add(Slab s, double c)
{
  require(c >= 0 && std::isfinite(c), "SlabFamily: coefficients must be finite and non-negative");
  slabs.push_back(std::move(s));
  coefficients.push_back(c);
}

double SlabFamily::total() const
{
  double t = 0.0;
  for (double c : coefficients) t += c;
  return t;
}

double SlabFamily::value(const VectorXd &x) const
{
  double v = 0.0;
  for (std::size_t i = 0; i < slabs.size(); ++i)
    if (slabs[i].contains(x)) v += coefficients[i];
  return v;
}

namespace {

void check_families(const std::vector<SlabFamily> &families, const std::vector<double> &p, double R)
{
  require(!families.empty(), "multilinear_slab_integral: no families");
  require(families.size() == p.size(), "multilinear_slab_integral: one exponent per family");
  require(R > 0, "multilinear_slab_integral: R must be positive");
  const Eigen::Index n = families.front().slabs.empty() ? -1 : families.front().slabs.front().map.cols();
  double width = -1.0;
  for (std::size_t j = 0; j < families.size(); ++j) {
    require(p[j] > 0 && p[j] <= 1, "multilinear_slab_integral: exponents must lie in (0, 1]");
    require(families[j].slabs.size() == families[j].coefficients.size(), "multilinear_slab_integral: coefficient count");
    for (const Slab &s : families[j].slabs) {
      require(n < 0 || s.map.cols() == n, "multilinear_slab_integral: slabs live in different dimensions");
      require(width < 0 || s.width == width, "multilinear_slab_integral: slab widths must agree");
      width = s.width;
    }
  }
}

double integrand(const std::vector<SlabFamily> &families, const std::vector<double> &p, const VectorXd &x)
{
  double v = 1.0;
  for (std::size_t j = 0; j < families.size() && v > 0; ++j) v *= std::pow(families[j].value(x), p[j]);
  return v;
}

IntegralEstimate grid_integral(const std::vector<SlabFamily> &families, const std::vector<double> &p, double R, Eigen::Index n,
                               const Sampler &s)
{
  require(s.points >= 1, "multilinear_slab_integral: grid needs at least one point per axis");
  const double total = std::pow(static_cast<double>(s.points), static_cast<double>(n));
  if (total > static_cast<double>(s.max_nodes))
    throw BudgetError("multilinear_slab_integral: grid of " + std::to_string(total) + " nodes exceeds the budget");
  const double h = 2 * R / static_cast<double>(s.points);
  std::vector<long> idx(static_cast<std::size_t>(n), 0);
  VectorXd x(n);
  double sum = 0.0;
  for (long cell = 0; cell < static_cast<long>(total); ++cell) {
    for (Eigen::Index i = 0; i < n; ++i) x(i) = -R + (static_cast<double>(idx[static_cast<std::size_t>(i)]) + 0.5) * h;
    sum += integrand(families, p, x);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (++idx[i] < s.points) break;
      idx[i] = 0;
    }
  }
  return {sum * std::pow(h, static_cast<double>(n)), 0.0};
}

// Parameter interval {t : |L(x0 + t d) − v|_∞ < r}; empty when lo ≥ hi.
std::pair<double, double> line_interval(const Slab &s, const VectorXd &x0, const VectorXd &d)
{
  const VectorXd a = s.map * x0 - s.offset;
  const VectorXd b = s.map * d;
  double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
  const double scale = s.map.cwiseAbs().maxCoeff();
  for (Eigen::Index r = 0; r < a.size(); ++r) {
    if (std::abs(b(r)) <= 1e-14 * scale) {
      if (!(std::abs(a(r)) < s.width)) return {0.0, 0.0};
      continue;
    }
    double t0 = (-s.width - a(r)) / b(r), t1 = (s.width - a(r)) / b(r);
    if (t0 > t1) std::swap(t0, t1);
    lo = std::max(lo, t0);
    hi = std::min(hi, t1);
  }
  return {lo, hi};
}

struct LineIntegrator
{
  const std::vector<SlabFamily> &families;
  const std::vector<double> &p;
  double R;
  std::vector<double> cuts;
  std::vector<std::vector<std::pair<double, double>>> spans;

  // ∫ F(x0 + t d)/N₁(x0 + t d) dt over the line inside Q_R.
  double operator()(const VectorXd &x0, const VectorXd &d)
  {
    double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < x0.size(); ++i) {
      if (d(i) == 0.0) {
        if (std::abs(x0(i)) > R) return 0.0;
        continue;
      }
      double t0 = (-R - x0(i)) / d(i), t1 = (R - x0(i)) / d(i);
      if (t0 > t1) std::swap(t0, t1);
      lo = std::max(lo, t0);
      hi = std::min(hi, t1);
    }
    if (!(lo < hi)) return 0.0;
    cuts.assign({lo, hi});
    spans.resize(families.size());
    for (std::size_t j = 0; j < families.size(); ++j) {
      spans[j].clear();
      for (const Slab &s : families[j].slabs) {
        auto iv = line_interval(s, x0, d);
        spans[j].push_back(iv);
        if (iv.first < iv.second) {
          if (iv.first > lo && iv.first < hi) cuts.push_back(iv.first);
          if (iv.second > lo && iv.second < hi) cuts.push_back(iv.second);
        }
      }
    }
    std::sort(cuts.begin(), cuts.end());
    double sum = 0.0;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const double len = cuts[c + 1] - cuts[c];
      if (len <= 0) continue;
      const double t = 0.5 * (cuts[c] + cuts[c + 1]);
      double F = 1.0;
      int first_count = 0;
      for (std::size_t j = 0; j < families.size() && F > 0; ++j) {
        double v = 0.0;
        for (std::size_t i = 0; i < spans[j].size(); ++i)
          if (spans[j][i].first < t && t < spans[j][i].second) {
            v += families[j].coefficients[i];
            if (j == 0 && families[j].coefficients[i] > 0) ++first_count;
          }
        F *= std::pow(v, p[j]);
      }
      if (F > 0) sum += len * F / first_count;
    }
    return sum;
  }
};

IntegralEstimate mc_integral(const std::vector<SlabFamily> &families, const std::vector<double> &p, double R, Eigen::Index n,
                             const Sampler &s)
{
  require(s.points >= 1, "multilinear_slab_integral: Monte-Carlo needs at least one sample");
  if (s.points > s.max_nodes)
    throw BudgetError("multilinear_slab_integral: " + std::to_string(s.points) + " samples exceed the budget");
  const SlabFamily &first = families.front();
  const std::size_t K = first.slabs.size();
  const long per_slab = std::max<long>(1, s.points / static_cast<long>(K));
  LineIntegrator line{families, p, R, {}, {}};
  IntegralEstimate out;
  double variance = 0.0;
  // Strata are the first-family slabs with c_T > 0. Each integrates F/N₁, N₁ counting those slabs
  // containing x, so the strata sum to ∫F.
  for (std::size_t k = 0; k < K; ++k) {
    if (first.coefficients[k] == 0.0) continue;
    const Slab &T = first.slabs[k];
    const Eigen::Index m = T.map.rows();
    const MatrixXd gram = T.map * T.map.transpose();
    const MatrixXd pinv = T.map.transpose() * gram.inverse();
    const double jac = 1.0 / std::sqrt(gram.determinant());
    Rng rng(derive_seed(s.seed, {static_cast<std::uint64_t>(k)}));
    double mean = 0.0, m2 = 0.0, vol = 0.0;
    long count = 0;
    if (m == n) {
      vol = std::pow(2 * T.width, static_cast<double>(n)) * jac;
      for (long i = 0; i < per_slab; ++i) {
        const VectorXd x = pinv * (T.offset + uniform_box(rng, m, T.width));
        double v = 0.0;
        if (x.cwiseAbs().maxCoeff() <= R) {
          int n1 = 0;
          for (std::size_t q = 0; q < K; ++q) n1 += first.coefficients[q] > 0 && first.slabs[q].contains(x) ? 1 : 0;
          v = integrand(families, p, x) / std::max(n1, 1);
        }
        ++count;
        const double delta = v - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (v - mean);
      }
    } else {
      const MatrixXd K0 = kernel(T.map).basis();
      const VectorXd d = K0.col(0);
      const MatrixXd rest = K0.rightCols(K0.cols() - 1);
      const double span = R * std::sqrt(static_cast<double>(n));
      vol = std::pow(2 * T.width, static_cast<double>(m)) * std::pow(2 * span, static_cast<double>(rest.cols())) * jac;
      for (long i = 0; i < per_slab; ++i) {
        VectorXd x0 = pinv * (T.offset + uniform_box(rng, m, T.width));
        if (rest.cols() > 0) x0 += rest * uniform_box(rng, rest.cols(), span);
        const double v = line(x0, d);
        ++count;
        const double delta = v - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (v - mean);
      }
    }
    out.value += vol * mean;
    if (count > 1) variance += vol * vol * (m2 / static_cast<double>(count - 1)) / static_cast<double>(count);
  }
  out.std_error = std::sqrt(variance);
  return out;
}

} // namespace

IntegralEstimate multilinear_slab_integral(const std::vector<SlabFamily> &families, const std::vector<double> &p, double R,
                                           const Sampler &sampler)
{
  check_families(families, p, R);
  for (const SlabFamily &f : families)
    if (f.slabs.empty() || f.total() == 0.0) return {};
  const Eigen::Index n = families.front().slabs.front().map.cols();
  return sampler.kind == Sampler::Kind::Grid ? grid_integral(families, p, R, n, sampler)
                                             : mc_integral(families, p, R, n, sampler);
}

MatrixXd perturb_map(const MatrixXd &L, double nu, Rng &rng)
{
  require(nu >= 0, "perturb_map: nu must be non-negative");
  if (nu == 0.0) return L;
  const Eigen::Index n = L.cols();
  const MatrixXd G = gaussian_matrix(rng, n, n);
  MatrixXd A = G - G.transpose();
  A *= uniform(rng, 0.0, nu) / std::max(A.norm(), 1e-300);
  const Subspace K = kernel(L);
  const MatrixXd I = MatrixXd::Identity(n, n);
  for (int attempt = 0; attempt < 64; ++attempt) {
    // Cayley transform: orthogonal for skew A.
    const MatrixXd Q = (I - 0.5 * A).lu().solve(I + 0.5 * A);
    const MatrixXd Lq = L * Q;
    if (subspace_distance(kernel(Lq), K) <= nu) return Lq;
    A *= 0.5;
  }
  return L;
}

KakeyaSweep kakeya_ratio_sweep(const BLDatum &datum, double nu, const std::vector<double> &R_list,
                               const std::vector<double> &lambda_list, const KakeyaSweepOptions &opts, std::uint64_t seed)
{
  require(nu >= 0, "kakeya_ratio_sweep: nu must be non-negative");
  require(opts.families_per_point >= 1 && opts.slabs_per_family >= 1, "kakeya_ratio_sweep: empty sweep");
  require(opts.cluster >= 0, "kakeya_ratio_sweep: cluster must be non-negative");
  for (double R : R_list)
    for (double lam : lambda_list) require(lam > 0 && lam < R, "kakeya_ratio_sweep: requires 0 < λ < R");
  if (opts.require_finite)
    require(is_finite_blreg(datum, 1e-8, opts.alpha).finite, "kakeya_ratio_sweep: datum is not finite (α > 0)");

  const Eigen::Index n = datum.ambient_dim();
  const std::size_t k = datum.size();
  KakeyaSweep out;
  for (std::size_t ri = 0; ri < R_list.size(); ++ri)
    for (std::size_t li = 0; li < lambda_list.size(); ++li) {
      const double R = R_list[ri], lam = lambda_list[li];
      KakeyaPoint point{R, lam, 0.0};
      for (int f = 0; f < opts.families_per_point; ++f) {
        Rng rng(derive_seed(seed, {ri, li, static_cast<std::uint64_t>(f)}));
        const VectorXd anchor = uniform_box(rng, n, std::max(R - (1 + opts.cluster) * lam, 0.0));
        std::vector<SlabFamily> families(k);
        for (std::size_t j = 0; j < k; ++j) {
          families[j].nu = nu;
          for (int t = 0; t < opts.slabs_per_family; ++t) {
            const MatrixXd L = perturb_map(datum.maps()[j], nu, rng);
            const VectorXd z = anchor + uniform_box(rng, n, opts.cluster * lam);
            const double c = opts.random_coefficients ? uniform(rng, 0.0, 1.0) : 1.0;
            families[j].add(Slab(L, L * z, lam), c);
          }
        }
        Sampler s = opts.sampler;
        s.seed = derive_seed(opts.sampler.seed ^ seed, {ri, li, static_cast<std::uint64_t>(f), 0x5eedULL});
        const IntegralEstimate I = multilinear_slab_integral(families, datum.exponents(), R, s);
        double denom = std::pow(lam, static_cast<double>(n));
        for (std::size_t j = 0; j < k; ++j) denom *= std::pow(families[j].total(), datum.exponents()[j]);
        const double ratio = denom > 0 ? I.value / denom : 0.0;
        out.rows.push_back({R, lam, f, ratio, denom > 0 ? I.std_error / denom : 0.0});
        point.max_ratio = std::max(point.max_ratio, ratio);
      }
      out.maxima.push_back(point);
    }
  return out;
}

} // namespace rlab
