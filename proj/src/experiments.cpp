#include "rlab/experiments.hpp"

#include "rlab/brascamp_lieb.hpp"
#include "rlab/bump.hpp"
#include "rlab/errors.hpp"
#include "rlab/random.hpp"

#include <algorithm>
#include <cmath>

namespace rlab {

using Eigen::VectorXd;

Density trig_density(const Box &box, int degree, std::uint64_t seed)
{
  require(degree >= 0, "trig_density: degree must be non-negative");
  const Eigen::Index d = box.dim();
  const VectorXd c = box.center(), h = box.half_width();
  require((h.array() > 0).all(), "trig_density: box must have positive width");
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  long terms = 1;
  for (Eigen::Index a = 0; a < d; ++a) terms *= 2 * degree + 1;
  Eigen::MatrixXd freq(d, terms);
  Eigen::VectorXcd coef(terms);
  double total = 0.0;
  for (long t = 0; t < terms; ++t) {
    long rest = t;
    for (Eigen::Index a = 0; a < d; ++a) {
      freq(a, t) = M_PI * static_cast<double>(rest % (2 * degree + 1) - degree);
      rest /= 2 * degree + 1;
    }
    coef(t) = cplx(g(rng), g(rng));
    total += std::abs(coef(t));
  }
  coef /= total;
  return {[=](const VectorXd &u) -> cplx {
            const VectorXd t = (u - c).cwiseQuotient(h);
            double cut = 1.0;
            for (Eigen::Index a = 0; a < d && cut > 0; ++a) cut *= exp_bump(t(a));
            if (cut == 0.0) return 0.0;
            cplx p = 0.0;
            for (long k = 0; k < terms; ++k) p += coef(k) * std::polar(1.0, freq.col(k).dot(t));
            return p * cut;
          },
          box};
}

double l2_norm(const Density &f, const Box &box, int points_per_axis)
{
  const TensorGrid g = tensor_grid(box, std::vector<int>(static_cast<std::size_t>(box.dim()), points_per_axis),
                                   QuadratureRule::Midpoint, 50'000'000);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < g.weights.size(); ++j) sum += std::norm(f(g.nodes.col(j))) * g.weights(j);
  return std::sqrt(sum);
}

StratifiedEstimate stratified_cube_integral(const std::function<VectorXd(const VectorXd &)> &fn, int dim, double R,
                                            const StratifiedOptions &opts, std::uint64_t seed)
{
  require(dim >= 1 && R > 0, "stratified_cube_integral: need dim ≥ 1 and R > 0");
  require(opts.cells_per_axis >= 1 && opts.pilot_per_cell >= 2, "stratified_cube_integral: need ≥ 1 cell and ≥ 2 pilot draws");
  require(opts.shells >= 0, "stratified_cube_integral: shells must be non-negative");

  struct Cell
  {
    VectorXd lo, w;
    long count = 0;
    VectorXd mean, m2;
  };
  // Per axis: the core [−c, c] in equal pieces, then ±[R/2^{s+1}, R/2^s] for s = shells−1..0.
  const double core = std::ldexp(R, -opts.shells);
  std::vector<double> cuts;
  for (int s = 0; s < opts.shells; ++s) cuts.push_back(-std::ldexp(R, -s));
  for (int i = 0; i <= opts.cells_per_axis; ++i) cuts.push_back(-core + 2 * core * i / opts.cells_per_axis);
  for (int s = opts.shells - 1; s >= 0; --s) cuts.push_back(std::ldexp(R, -s));
  const long per_axis = static_cast<long>(cuts.size()) - 1;
  long total = 1;
  for (int a = 0; a < dim; ++a) total *= per_axis;
  std::vector<Cell> cs(static_cast<std::size_t>(total));
  for (long c = 0; c < total; ++c) {
    Cell &cell = cs[static_cast<std::size_t>(c)];
    cell.lo.resize(dim);
    cell.w.resize(dim);
    long rest = c;
    for (int a = 0; a < dim; ++a) {
      const auto i = static_cast<std::size_t>(rest % per_axis);
      cell.lo(a) = cuts[i];
      cell.w(a) = cuts[i + 1] - cuts[i];
      rest /= per_axis;
    }
  }

  const long cells = static_cast<long>(cs.size());
  if (cells * opts.pilot_per_cell > opts.samples)
    throw BudgetError("stratified_cube_integral: sample budget below the pilot size " +
                      std::to_string(cells * opts.pilot_per_cell));
  Eigen::Index comps = -1;
  long evals = 0;
  auto draw = [&](Cell &cell, Rng &rng) {
    VectorXd x(dim);
    for (int a = 0; a < dim; ++a) x(a) = cell.lo(a) + uniform(rng, 0.0, cell.w(a));
    const VectorXd v = fn(x);
    ++evals;
    if (comps < 0) comps = v.size();
    require(v.size() == comps, "stratified_cube_integral: integrand changed length");
    if (cell.count == 0) {
      cell.mean = VectorXd::Zero(comps);
      cell.m2 = VectorXd::Zero(comps);
    }
    ++cell.count;
    const VectorXd delta = v - cell.mean;
    cell.mean += delta / static_cast<double>(cell.count);
    cell.m2 += delta.cwiseProduct(v - cell.mean);
  };

  for (long c = 0; c < cells; ++c) {
    Cell &cell = cs[static_cast<std::size_t>(c)];
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(c), 0}));
    for (int i = 0; i < opts.pilot_per_cell; ++i) draw(cell, rng);
  }

  // Allocation score: max over components of the cell's share of Σ σ.
  VectorXd sigma_total = VectorXd::Zero(comps);
  for (const Cell &cell : cs) sigma_total += (cell.m2 / static_cast<double>(cell.count - 1)).cwiseSqrt();
  std::vector<double> score(static_cast<std::size_t>(cells), 0.0);
  double score_total = 0.0;
  for (long c = 0; c < cells; ++c) {
    const Cell &cell = cs[static_cast<std::size_t>(c)];
    const VectorXd sd = (cell.m2 / static_cast<double>(cell.count - 1)).cwiseSqrt();
    double s = 0.0;
    for (Eigen::Index i = 0; i < comps; ++i)
      if (sigma_total(i) > 0) s = std::max(s, sd(i) / sigma_total(i));
    score[static_cast<std::size_t>(c)] = s;
    score_total += s;
  }
  const long extra = opts.samples - cells * opts.pilot_per_cell;
  if (score_total > 0)
    for (long c = 0; c < cells; ++c) {
      const long n = static_cast<long>(std::floor(static_cast<double>(extra) * score[static_cast<std::size_t>(c)] / score_total));
      Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(c), 1}));
      for (long i = 0; i < n; ++i) draw(cs[static_cast<std::size_t>(c)], rng);
    }

  StratifiedEstimate out;
  out.value = VectorXd::Zero(comps);
  VectorXd var = VectorXd::Zero(comps);
  for (const Cell &cell : cs) {
    const double vol = cell.w.prod();
    out.value += vol * cell.mean;
    var += (vol * vol / (static_cast<double>(cell.count) * static_cast<double>(cell.count - 1))) * cell.m2;
  }
  out.std_error = var.cwiseSqrt();
  out.evaluations = evals;
  return out;
}

double predicted_delta_exponent(int depth, int k)
{
  require(k >= 2 && depth >= 0, "predicted_delta_exponent: need k ≥ 2 and depth ≥ 0");
  return static_cast<double>(depth) * (depth + 1) / (2.0 * (k - 1));
}

namespace {

void check_ensemble(const Ensemble &ens, const ExperimentOptions &opts)
{
  require(ens.families.size() >= 2 && ens.families.size() == ens.exponents.size(), "experiment: malformed ensemble");
  require(opts.support_radius > 0, "experiment: support radius must be positive");
  if (opts.require_finite)
    require(is_finite_blreg(ensemble_datum(ens)).finite, "experiment: ensemble datum is not finite");
}

Box generic_box(const NestedFamily &F, const ExperimentOptions &opts)
{
  const int d = F.sigma0().in_dim();
  return Box::cube(VectorXd::Zero(d), std::min(opts.support_radius, 0.9 * F.sigma0().domain_radius()));
}

PreparedExtension prepare(const NestedFamily &F, const Density &f, double x_bound, const ExperimentOptions &opts)
{
  const PolyGraphParam &S = F.sigma0();
  const SurfaceMap surface = [&S](const VectorXd &u) { return S(u); };
  return prepare_extension(surface, [](const VectorXd &) { return 1.0; }, f, *f.support, x_bound, opts.quad);
}

} // namespace

ScalingResult restriction_scaling_experiment(const Ensemble &ens, double R, const std::vector<double> &deltas,
                                             const ExperimentOptions &opts, std::uint64_t seed)
{
  check_ensemble(ens, opts);
  require(R >= 1, "restriction_scaling_experiment: R must be at least 1");
  require(deltas.size() >= 3, "restriction_scaling_experiment: need at least three δ values");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    require(deltas[i] > 0 && deltas[i] < 1, "restriction_scaling_experiment: δ must lie in (0, 1)");
    require(i == 0 || deltas[i] < deltas[i - 1], "restriction_scaling_experiment: δ values must decrease");
  }
  const std::size_t k = ens.families.size();
  const int n = ens.families.front().ambient_dim();
  const NestedFamily &last = ens.families.back();
  const int d = last.sigma0().in_dim();
  const int depth = last.depth();
  const double x_bound = R * std::sqrt(static_cast<double>(n));

  std::vector<PreparedExtension> generic;
  double generic_norm = 1.0;
  for (std::size_t j = 0; j + 1 < k; ++j) {
    const Density f = trig_density(generic_box(ens.families[j], opts), opts.degree, derive_seed(seed, {j}));
    generic.push_back(prepare(ens.families[j], f, x_bound, opts));
    generic_norm *= std::pow(l2_norm(f, *f.support, opts.norm_points), ens.exponents[j]);
  }
  const double rho = std::min(opts.support_radius, 0.9 * last.sigma0().domain_radius());
  std::vector<PreparedExtension> local;
  std::vector<double> norms;
  for (double delta : deltas) {
    VectorXd h(d);
    for (int i = 0; i < d; ++i) h(i) = rho * std::pow(delta, std::max(0, i - (d - depth) + 1));
    const Density f = trig_density(Box{-h, h}, opts.degree, derive_seed(seed, {k - 1}));
    local.push_back(prepare(last, f, x_bound, opts));
    norms.push_back(generic_norm * std::pow(l2_norm(f, *f.support, opts.norm_points), ens.exponents.back()));
  }

  const double q_last = ens.exponents.back();
  auto integrand = [&](const VectorXd &x) {
    VectorXd v = VectorXd::Zero(static_cast<Eigen::Index>(deltas.size()));
    double base = 1.0;
    for (std::size_t j = 0; j + 1 < k && base > 0; ++j) base *= std::pow(std::abs(generic[j](x)), ens.exponents[j]);
    if (base == 0.0) return v;
    for (std::size_t i = 0; i < deltas.size(); ++i)
      v(static_cast<Eigen::Index>(i)) = base * std::pow(std::abs(local[i](x)), q_last);
    return v;
  };
  const StratifiedEstimate est = stratified_cube_integral(integrand, n, R, opts.mc, derive_seed(seed, {0x4d43ULL}));

  ScalingResult out;
  std::vector<double> ratios;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out.rows.push_back({deltas[i], est.value(ii), est.std_error(ii), norms[i], est.value(ii) / norms[i]});
    ratios.push_back(est.value(ii) / norms[i]);
  }
  out.fit = fit_loglog(deltas, ratios);
  out.predicted = predicted_delta_exponent(depth, static_cast<int>(k));
  out.evaluations = est.evaluations;
  return out;
}

ScalingResult r_growth_experiment(const Ensemble &ens, const std::vector<double> &R_list, const ExperimentOptions &opts,
                                  std::uint64_t seed)
{
  check_ensemble(ens, opts);
  require(R_list.size() >= 3, "r_growth_experiment: need at least three values of R");
  for (std::size_t i = 0; i < R_list.size(); ++i) {
    require(R_list[i] >= 1, "r_growth_experiment: R must be at least 1");
    require(i == 0 || R_list[i] > R_list[i - 1], "r_growth_experiment: R values must increase");
  }
  const std::size_t k = ens.families.size();
  const int n = ens.families.front().ambient_dim();
  std::vector<Density> fs;
  double norm = 1.0;
  for (std::size_t j = 0; j < k; ++j) {
    fs.push_back(trig_density(generic_box(ens.families[j], opts), opts.degree, derive_seed(seed, {j})));
    norm *= std::pow(l2_norm(fs.back(), *fs.back().support, opts.norm_points), ens.exponents[j]);
  }
  ScalingResult out;
  std::vector<double> ratios;
  for (std::size_t r = 0; r < R_list.size(); ++r) {
    const double R = R_list[r];
    std::vector<PreparedExtension> E;
    for (std::size_t j = 0; j < k; ++j) E.push_back(prepare(ens.families[j], fs[j], R * std::sqrt(static_cast<double>(n)), opts));
    auto integrand = [&](const VectorXd &x) {
      double v = 1.0;
      for (std::size_t j = 0; j < k && v > 0; ++j) v *= std::pow(std::abs(E[j](x)), ens.exponents[j]);
      return VectorXd::Constant(1, v);
    };
    // One more dyadic shell per doubling, so every R shares the core resolution of the first.
    StratifiedOptions mc = opts.mc;
    mc.shells += std::max(0, static_cast<int>(std::floor(std::log2(R / R_list.front()) + 1e-9)));
    const StratifiedEstimate est = stratified_cube_integral(integrand, n, R, mc, derive_seed(seed, {0x5247ULL, r}));
    out.rows.push_back({R, est.value(0), est.std_error(0), norm, est.value(0) / norm});
    ratios.push_back(est.value(0) / norm);
    out.evaluations += est.evaluations;
  }
  out.fit = fit_loglog(R_list, ratios);
  return out;
}

} // namespace rlab
