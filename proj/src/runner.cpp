#include "rlab/runner.hpp"

#include "rlab/catalog.hpp"
#include "rlab/errors.hpp"
#include "rlab/experiments.hpp"
#include "rlab/extension.hpp"
#include "rlab/fit.hpp"
#include "rlab/kakeya.hpp"
#include "rlab/random.hpp"
#include "rlab/wavepackets.hpp"

#include "rlab/bump.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <unistd.h>

namespace rlab {

void Table::add(std::vector<CsvCell> row)
{
  require(row.size() == header.size(), "Table::add: row width differs from the header");
  rows.push_back(std::move(row));
}

namespace {

std::string format_cell(const CsvCell &cell)
{
  if (const double *d = std::get_if<double>(&cell)) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", *d);
    return buf;
  }
  if (const long *l = std::get_if<long>(&cell)) return std::to_string(*l);
  const std::string &s = std::get<std::string>(cell);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

} // namespace

std::string Table::to_csv() const
{
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += "\n";
  for (const auto &row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_cell(row[i]);
    out += "\n";
  }
  return out;
}

std::uint64_t fnv1a64(const std::string &bytes)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

const char *kVersion = "1.0.0";

json module_versions()
{
  json v = json::object();
  for (const char *m : {"linear_geometry", "brascamp_lieb", "nested_manifolds", "extension_operator", "wavepackets",
                        "kakeya_bl", "cli_harness"})
    v[m] = kVersion;
  return v;
}

std::string hex64(std::uint64_t h)
{
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

json to_json(const Eigen::VectorXd &v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json columns_json(const Eigen::MatrixXd &m)
{
  json out = json::array();
  for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(to_json(m.col(j)));
  return out;
}

json fit_json(const ScalingFit &f)
{
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared}};
}

struct Run
{
  const ConfigReader &c;
  std::optional<std::uint64_t> seed_override;
  RunOutput &out;

  json &summary() { return out.summary; }

  std::uint64_t seed(const std::string &kind) const
  {
    c.skip("seed");
    if (seed_override) return *seed_override;
    if (!c.has("seed")) c.fail("seed", "required for " + kind + " (or pass --seed)");
    return c.unsigned_integer("seed");
  }
  std::uint64_t seed_or(std::uint64_t fallback) const
  {
    c.skip("seed");
    if (seed_override) return *seed_override;
    return c.has("seed") ? c.unsigned_integer("seed") : fallback;
  }
};

long positive_integer(const ConfigReader &c, const std::string &key, long fallback, long max = 1L << 40)
{
  const long v = c.integer(key, fallback);
  if (v < 1 || v > max) c.fail(key, "must lie in 1.." + std::to_string(max));
  return v;
}

double positive_number(const ConfigReader &c, const std::string &key, double fallback)
{
  const double v = c.number(key, fallback);
  if (!(v > 0)) c.fail(key, "must be positive");
  return v;
}

// ---- brascamp-lieb ----

void run_bl_check(Run &r)
{
  const ConfigReader &c = r.c;
  const BLDatum datum = datum_from_config(c.child("datum"));
  const double tol = positive_number(c, "tolerance", 1e-8);
  const std::uint64_t seed = r.seed_or(0);
  const AlphaSearchOptions opts = alpha_options_from_config(c.child_or_empty("alpha"), seed);
  c.finish();
  const FinitenessVerdict v = is_finite_blreg(datum, tol, opts);
  json &s = r.summary();
  s["seed"] = seed;
  s["alpha"] = v.evidence.alpha;
  s["finite"] = v.finite;
  s["exhaustive"] = v.evidence.exhaustive;
  s["candidates"] = v.evidence.candidates;
  s["witness_dim"] = v.evidence.witness.dim();
  s["witness_basis"] = columns_json(v.evidence.witness.basis());
  s["kernel_wedge"] = wedge_magnitude(datum.kernels());
  s["ambient_dim"] = datum.ambient_dim();
  s["maps"] = datum.size();

  r.out.table.header = {"map", "rows", "exponent", "kernel_dim"};
  for (std::size_t j = 0; j < datum.size(); ++j)
    r.out.table.add({static_cast<long>(j), static_cast<long>(datum.maps()[j].rows()), datum.exponents()[j],
                     static_cast<long>(datum.kernels()[j].dim())});
}

const char *kind_name(KernelConfigKind k)
{
  switch (k) {
  case KernelConfigKind::Generic: return "generic";
  case KernelConfigKind::Dependent: return "dependent";
  case KernelConfigKind::NearlyDependent: return "nearly_dependent";
  case KernelConfigKind::Oversubscribed: return "oversubscribed";
  }
  return "";
}

void run_bl_alpha(Run &r)
{
  const ConfigReader &c = r.c;
  const long count = positive_integer(c, "count", 200, 100000);
  const double tol = positive_number(c, "tolerance", 1e-8);
  const std::uint64_t seed = r.seed("bl-alpha");
  const AlphaSearchOptions opts = alpha_options_from_config(c.child_or_empty("alpha"), 0);
  c.finish();
  const WedgeAlphaSweep sw = wedge_alpha_sweep(static_cast<int>(count), seed, tol, opts);

  std::map<std::string, long> kinds;
  double min_pos = std::numeric_limits<double>::infinity(), max_zero = 0.0;
  r.out.table.header = {"index", "kind", "n", "k", "kernel_dims", "wedge", "alpha", "agree"};
  for (std::size_t i = 0; i < sw.configs.size(); ++i) {
    const auto &cfg = sw.configs[i];
    const auto &rep = sw.reports[i];
    ++kinds[kind_name(cfg.kind)];
    if (rep.wedge > tol) min_pos = std::min(min_pos, rep.wedge);
    else max_zero = std::max(max_zero, rep.wedge);
    std::string dims;
    for (const auto &K : cfg.kernels) dims += (dims.empty() ? "" : "+") + std::to_string(K.dim());
    r.out.table.add({static_cast<long>(i), std::string(kind_name(cfg.kind)), static_cast<long>(cfg.kernels.front().ambient_dim()),
                     static_cast<long>(cfg.kernels.size()), dims, rep.wedge, rep.alpha, static_cast<long>(rep.agree)});
  }
  json &s = r.summary();
  s["seed"] = seed;
  s["count"] = count;
  s["agreements"] = sw.agreements;
  s["all_agree"] = sw.agreements == count;
  s["kinds"] = kinds;
  s["min_positive_wedge"] = std::isfinite(min_pos) ? json(min_pos) : json(nullptr);
  s["max_zero_wedge"] = max_zero;
}

void run_blreg_estimate(Run &r)
{
  const ConfigReader &c = r.c;
  const BLDatum datum = datum_from_config(c.child("datum"));
  const std::vector<double> Rs = c.scales("R_list", Order::Increasing);
  for (double R : Rs)
    if (R < 1) c.fail("R_list", "scales must be at least 1");
  const long iters = positive_integer(c, "iters", 4, 10000);
  BLRegOptions o;
  o.samples_per_unit = static_cast<int>(positive_integer(c, "samples_per_unit", o.samples_per_unit, 64));
  o.grid_cap = static_cast<std::size_t>(positive_integer(c, "grid_cap", static_cast<long>(o.grid_cap)));
  o.max_sweeps = static_cast<int>(positive_integer(c, "max_sweeps", o.max_sweeps, 10000));
  const std::uint64_t seed = r.seed("blreg-estimate");
  c.finish();

  std::vector<double> lbs;
  r.out.table.header = {"R", "lower_bound"};
  for (std::size_t i = 0; i < Rs.size(); ++i) {
    lbs.push_back(blreg_lower_bound(datum, Rs[i], static_cast<int>(iters), derive_seed(seed, {i}), o));
    r.out.table.add({Rs[i], lbs.back()});
  }
  json &s = r.summary();
  s["seed"] = seed;
  s["lower_bounds"] = lbs;
  s["finite"] = is_finite_blreg(datum).finite;
  s["fit"] = Rs.size() >= 3 ? fit_json(fit_loglog(Rs, lbs)) : json(nullptr);
}

// ---- nested manifolds ----

void run_ensemble_verify(Run &r)
{
  const ConfigReader &c = r.c;
  const Ensemble ens = ensemble_from_config(c.child("ensemble"));
  const double mu_factor = positive_number(c, "mu_factor", 0.5);
  const long samples = positive_integer(c, "samples", 200, 1000000);
  const std::uint64_t seed = r.seed("ensemble-verify");
  c.finish();

  const BLDatum datum = ensemble_datum(ens);
  const FinitenessVerdict v = is_finite_blreg(datum);
  long violations = 0;
  json families = json::array();
  r.out.table.header = {"family", "depth", "mu", "tested_inner", "tested_outer", "violations_inner", "violations_outer"};
  for (std::size_t j = 0; j < ens.families.size(); ++j) {
    const NestedFamily &F = ens.families[j];
    const double mu = mu_factor * F.mu_threshold();
    OmegaInclusionReport rep;
    if (F.depth() > 0)
      rep = verify_omega_inclusions(F, Eigen::VectorXd::Constant(F.depth(), mu), static_cast<int>(samples), derive_seed(seed, {j}));
    violations += rep.violations();
    families.push_back({{"depth", F.depth()}, {"mu", mu}, {"tested_inner", rep.tested_inner}, {"tested_outer", rep.tested_outer},
                        {"violations", rep.violations()}});
    r.out.table.add({static_cast<long>(j), static_cast<long>(F.depth()), mu, rep.tested_inner, rep.tested_outer,
                     rep.violations_inner, rep.violations_outer});
  }
  json &s = r.summary();
  s["seed"] = seed;
  s["alpha"] = v.evidence.alpha;
  s["finite"] = v.finite;
  s["exponents"] = ens.exponents;
  s["families"] = families;
  s["violations"] = violations;
}

// ---- wave packets ----

void run_cover_audit(Run &r)
{
  const ConfigReader &c = r.c;
  const NestedFamily F = family_from_config(c.child("family"));
  const std::vector<double> Rs = c.scales("R_list", Order::Increasing);
  const double mu_factor = positive_number(c, "mu_factor", 2.0);
  const long samples = positive_integer(c, "samples", 10000, 10000000);
  CoverOptions co;
  co.max_cells = positive_integer(c, "max_cells", co.max_cells);
  const std::uint64_t seed = r.seed("cover-audit");
  c.finish();
  if (F.depth() == 0) c.fail("family", "needs a nested family of depth at least 1");

  long uncovered = 0, inflation = 0, overlap_excess = 0;
  json per_R = json::array();
  r.out.table.header = {"R", "mu", "cells", "ell_star", "samples", "uncovered", "max_overlap", "overlap_bound",
                        "inflation_samples", "inflation_violations"};
  for (std::size_t i = 0; i < Rs.size(); ++i) {
    const double mu = mu_factor / Rs[i];
    const WavePacketCover cover(F, Rs[i], Eigen::VectorXd::Constant(F.depth(), mu), co);
    const CoverAudit a = audit_cover(cover, static_cast<int>(samples), derive_seed(seed, {i}));
    uncovered += a.uncovered;
    inflation += a.inflation_violations;
    overlap_excess += a.max_overlap > a.overlap_bound ? 1 : 0;
    per_R.push_back({{"R", Rs[i]}, {"mu", mu}, {"cells", a.cells}, {"uncovered", a.uncovered}, {"max_overlap", a.max_overlap},
                     {"overlap_bound", a.overlap_bound}, {"inflation_violations", a.inflation_violations}});
    r.out.table.add({Rs[i], mu, a.cells, static_cast<long>(a.ell_star), a.samples, a.uncovered, static_cast<long>(a.max_overlap),
                     static_cast<long>(a.overlap_bound), a.inflation_samples, a.inflation_violations});
  }
  json &s = r.summary();
  s["seed"] = seed;
  s["per_r"] = per_R;
  s["uncovered"] = uncovered;
  s["inflation_violations"] = inflation;
  s["overlap_excess"] = overlap_excess;
  s["violations"] = uncovered + inflation + overlap_excess;
}

// ---- extension operator ----

// exp_bump of the normal offsets of u from the chain at level l, times e^{iωu₁}; zero where the chart inverse fails.
Density tube_density(const NestedFamily &F, int l, double mu, double width, double omega)
{
  auto fn = [&F, l, mu, width, omega](const Eigen::VectorXd &u) -> cplx {
    if (!F.in_domain(0, u)) return 0.0;
    try {
      const PhiInverse inv = phi_inverse(F, 0, l, u);
      if (!F.in_domain(l, inv.s)) return 0.0;
      double a = 1.0;
      for (Eigen::Index i = 0; i < inv.eta.size() && a > 0; ++i) a *= exp_bump(inv.eta(i) / (width * mu));
      return a * std::polar(1.0, omega * u(0));
    } catch (const ConvergenceError &) {
      return 0.0;
    } catch (const DomainError &) {
      return 0.0;
    }
  };
  // Bounding box of the tube from Φ on a grid; the second-order term covers extrema between nodes.
  const int d = F.dim(l), m = F.codim_total(l);
  const int per_axis = d == 1 ? 257 : (d == 2 ? 65 : 17);
  const double rad = F.radius(l) * (1 - 1e-9), h = 2 * rad / (per_axis - 1);
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(F.dim(0), std::numeric_limits<double>::infinity());
  Eigen::VectorXd hi = -lo;
  long total = 1;
  for (int i = 0; i < d; ++i) total *= per_axis;
  long corners = 1;
  for (int i = 0; i < m; ++i) corners *= 3;
  Eigen::VectorXd s(d), eta(m);
  for (long idx = 0; idx < total; ++idx) {
    long t = idx;
    for (int i = 0; i < d; ++i, t /= per_axis) s(i) = -rad + h * static_cast<double>(t % per_axis);
    for (long cidx = 0; cidx < corners; ++cidx) {
      long q = cidx;
      for (int i = 0; i < m; ++i, q /= 3) eta(i) = (static_cast<double>(q % 3) - 1.0) * width * mu;
      try {
        const Eigen::VectorXd u = F.phi<double>(0, l, s, eta);
        lo = lo.cwiseMin(u);
        hi = hi.cwiseMax(u);
      } catch (const DomainError &) {
      }
    }
  }
  require(lo.allFinite(), "tube_density: the chain has no points in its domain");
  return {fn, Box{lo.array() - h * h, hi.array() + h * h}};
}

AmplitudeSpec amplitude_from_config(const ConfigReader &c, int d)
{
  AmplitudeSpec a;
  const std::string kind = c.string("kind", "bump");
  if (kind == "indicator") a.kind = AmplitudeSpec::Kind::Indicator;
  else if (kind != "bump") c.fail("kind", "must be 'bump' or 'indicator'");
  a.center = Eigen::VectorXd::Zero(d);
  a.radius = positive_number(c, "radius", 0.5);
  a.smoothness_width = positive_number(c, "smoothness_width", 1.0);
  c.finish();
  return a;
}

QuadratureSpec quadrature_from_config(const ConfigReader &c, QuadratureSpec q)
{
  q.points_per_axis = static_cast<int>(positive_integer(c, "points", q.points_per_axis, 100000));
  const std::string rule = c.string("rule", q.rule == QuadratureRule::Midpoint ? "midpoint" : "gauss_legendre");
  if (rule == "midpoint") q.rule = QuadratureRule::Midpoint;
  else if (rule == "gauss_legendre") q.rule = QuadratureRule::GaussLegendre;
  else c.fail("rule", "must be 'midpoint' or 'gauss_legendre'");
  q.adapt = c.boolean("adapt", q.adapt);
  q.max_nodes = static_cast<std::size_t>(positive_integer(c, "max_nodes", static_cast<long>(q.max_nodes)));
  c.finish();
  return q;
}

void run_slice_audit(Run &r)
{
  const ConfigReader &c = r.c;
  const NestedFamily F = family_from_config(c.child("family"));
  if (F.depth() == 0) c.fail("family", "needs a nested family of depth at least 1");
  const long l = c.integer("level", F.depth());
  if (l < 1 || l > F.depth()) c.fail("level", "must lie in 1..depth");
  const double mu = positive_number(c, "mu", 1.0 / 16);
  const long points = positive_integer(c, "points", 20, 100000);
  const double x_radius = positive_number(c, "x_radius", 8.0);
  const double tol = positive_number(c, "tolerance", 1e-6);
  const std::uint64_t seed = r.seed("slice-audit");

  const ConfigReader dc = c.child_or_empty("density");
  const double width = dc.number("width", 0.9);
  const double omega = dc.number("frequency", 3.0);
  if (!(width > 0 && width < 1)) dc.fail("width", "must lie in (0, 1)");
  dc.finish();
  const AmplitudeSpec amp = amplitude_from_config(c.child_or_empty("amplitude"), F.dim(0));
  SliceOptions so;
  so.s_quad = quadrature_from_config(c.child_or_empty("s_quadrature"), so.s_quad);
  so.eta_quad = quadrature_from_config(c.child_or_empty("eta_quadrature"), so.eta_quad);
  so.x_bound = x_radius * std::sqrt(static_cast<double>(F.ambient_dim()));
  const QuadratureSpec ref_q =
      quadrature_from_config(c.child_or_empty("reference_quadrature"), {400, QuadratureRule::GaussLegendre, true});


  struct LocalConstancyRun
  {
    double R = 8.0, mu = 0.0, max_ratio = 0.5;
    int order = 3;
    LocalConstancyOptions opts;
  };
  std::optional<LocalConstancyRun> lc;
  if (c.has("local_constancy")) {
    const ConfigReader lr = c.child("local_constancy");
    LocalConstancyRun x;
    x.R = lr.number("R", 8.0);
    if (!(x.R >= 1)) lr.fail("R", "must be at least 1");
    x.mu = positive_number(lr, "mu_factor", 0.5) / x.R;
    const long order = lr.integer("order", 3);
    if (order < 0 || order > 12) lr.fail("order", "must lie in 0..12");
    x.order = static_cast<int>(order);
    x.opts.x_samples = static_cast<int>(positive_integer(lr, "x_samples", x.opts.x_samples, 10000));
    x.opts.eta_samples = static_cast<int>(positive_integer(lr, "eta_samples", x.opts.eta_samples, 10000));
    x.opts.s_quad = quadrature_from_config(lr.child_or_empty("s_quadrature"), x.opts.s_quad);
    x.opts.seed = derive_seed(seed, {0x1c});
    x.max_ratio = positive_number(lr, "max_ratio", 0.5);
    lr.finish();
    lc = x;
  } else {
    c.skip("local_constancy");
  }
  c.finish();

  const Eigen::VectorXd mus = Eigen::VectorXd::Constant(F.depth(), mu);
  const Density f = tube_density(F, static_cast<int>(l), mu, width, omega);
  const SliceDecomposition dec = slice_decompose(F, static_cast<int>(l), amp, f, mus, so);

  // The reference quadrature is tabulated once for every |x| up to the audit radius.
  const SurfaceMap surface = [&F](const Eigen::VectorXd &u) { return F.sigma0()(u); };
  const PreparedExtension reference = prepare_extension(surface, amp, f, extension_box(F.sigma0(), amp, f), so.x_bound,
                                                        ref_q);

  json &s = r.summary();
  double worst = 0.0;
  r.out.table.header = {"index"};
  for (int i = 0; i < F.ambient_dim(); ++i) r.out.table.header.push_back("x" + std::to_string(i));
  for (const char *h : {"slice_re", "slice_im", "reference_re", "reference_im", "relative_error"}) r.out.table.header.push_back(h);
  for (long i = 0; i < points; ++i) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
    const Eigen::VectorXd x = uniform_box(rng, F.ambient_dim(), x_radius);
    const cplx a = dec.evaluate(x);
    const cplx b = reference(x);
    const double err = std::abs(a - b) / std::max(std::abs(b), 1e-300);
    worst = std::max(worst, err);
    std::vector<CsvCell> row{i};
    for (Eigen::Index k = 0; k < x.size(); ++k) row.push_back(x(k));
    for (double v : {a.real(), a.imag(), b.real(), b.imag(), err}) row.push_back(v);
    r.out.table.add(std::move(row));
  }
  s["seed"] = seed;
  s["slices"] = dec.slices().size();
  s["normalisation"] = dec.normalisation();
  s["max_relative_error"] = worst;
  s["reconstruction_ok"] = worst <= tol;

  if (lc) {
    Density g{[](const Eigen::VectorXd &v) { return cplx(std::cos(2 * v(0)), 0.3 * v(0)); }, std::nullopt};
    const LocalConstancyReport rep = local_constancy_error(F, static_cast<int>(l), g, amp, lc->R,
                                                           Eigen::VectorXd::Constant(F.depth(), lc->mu), lc->order, lc->opts);
    bool decreasing = true;
    double worst_ratio = 0.0;
    for (std::size_t N = 1; N < rep.errors.size(); ++N) {
      decreasing = decreasing && rep.errors[N] < rep.errors[N - 1];
      worst_ratio = std::max(worst_ratio, rep.errors[N] / rep.errors[N - 1]);
    }
    s["local_constancy"] = {{"errors", rep.errors},
                            {"constant", rep.C},
                            {"strictly_decreasing", decreasing},
                            {"max_ratio", worst_ratio},
                            {"ok", decreasing && worst_ratio <= lc->max_ratio}};
  }
}

// ---- scaling experiments ----

void run_restriction_scaling(Run &r)
{
  const ConfigReader &c = r.c;
  const Ensemble ens = ensemble_from_config(c.child("ensemble"));
  ExperimentOptions o;
  o.quad = quadrature_from_config(c.child_or_empty("quadrature"), o.quad);
  {
    const ConfigReader mc = c.child_or_empty("monte_carlo");
    o.mc.samples = positive_integer(mc, "samples", o.mc.samples);
    o.mc.cells_per_axis = static_cast<int>(positive_integer(mc, "cells_per_axis", o.mc.cells_per_axis, 1024));
    o.mc.pilot_per_cell = static_cast<int>(positive_integer(mc, "pilot_per_cell", o.mc.pilot_per_cell, 1024));
    o.mc.shells = static_cast<int>(mc.integer("shells", o.mc.shells));
    if (o.mc.shells < 0 || o.mc.shells > 30) mc.fail("shells", "must lie in 0..30");
    mc.finish();
  }
  o.support_radius = positive_number(c, "support_radius", o.support_radius);
  o.degree = static_cast<int>(c.integer("degree", o.degree));
  if (o.degree < 0 || o.degree > 8) c.fail("degree", "must lie in 0..8");
  o.norm_points = static_cast<int>(positive_integer(c, "norm_points", o.norm_points, 4096));
  o.require_finite = c.boolean("require_finite", true);
  const std::uint64_t seed = r.seed("restriction-scaling");

  const bool delta_mode = c.has("delta_list");
  if (delta_mode == c.has("R_list")) c.fail("delta_list", "give exactly one of delta_list or R_list");
  ScalingResult res;
  json &s = r.summary();
  if (delta_mode) {
    const std::vector<double> deltas = c.scales("delta_list", Order::Decreasing);
    if (deltas.size() < 3) c.fail("delta_list", "need at least 3 values for a fit");
    if (deltas.front() >= 1) c.fail("delta_list", "values must lie in (0, 1)");
    const double R = c.number("R");
    if (!(R >= 1)) c.fail("R", "must be at least 1");
    const double tol = positive_number(c, "slope_tolerance", 0.15);
    c.finish();
    res = restriction_scaling_experiment(ens, R, deltas, o, seed);
    s["mode"] = "delta";
    s["success"] = std::abs(res.fit.slope - res.predicted) <= tol;
  } else {
    const std::vector<double> Rs = c.scales("R_list", Order::Increasing);
    if (Rs.size() < 3) c.fail("R_list", "need at least 3 values for a fit");
    for (double R : Rs)
      if (R < 1) c.fail("R_list", "scales must be at least 1");
    const double eps_fit = positive_number(c, "eps_fit", 0.25);
    c.finish();
    res = r_growth_experiment(ens, Rs, o, seed);
    s["mode"] = "R";
    s["success"] = res.fit.slope <= eps_fit;
  }
  s["seed"] = seed;
  s["slope"] = res.fit.slope;
  s["intercept"] = res.fit.intercept;
  s["r_squared"] = res.fit.r_squared;
  s["predicted"] = res.predicted;
  s["evaluations"] = res.evaluations;
  r.out.table.header = {"scale", "integral", "std_error", "normaliser", "ratio"};
  for (const auto &row : res.rows) r.out.table.add({row.scale, row.integral, row.std_error, row.normaliser, row.ratio});
}

void run_kakeya_sweep(Run &r)
{
  const ConfigReader &c = r.c;
  const BLDatum datum = datum_from_config(c.child("datum"));
  const double nu = c.number("nu", 0.05);
  if (!(nu >= 0)) c.fail("nu", "must be non-negative");
  const std::vector<double> Rs = c.scales("R_list", Order::Increasing);
  const std::vector<double> lambdas = c.scales("lambda_list", Order::Increasing, {1.0});
  KakeyaSweepOptions o;
  o.families_per_point = static_cast<int>(positive_integer(c, "families_per_point", o.families_per_point, 100000));
  o.slabs_per_family = static_cast<int>(positive_integer(c, "slabs_per_family", o.slabs_per_family, 100000));
  o.cluster = c.number("cluster", o.cluster);
  if (!(o.cluster >= 0)) c.fail("cluster", "must be non-negative");
  o.random_coefficients = c.boolean("random_coefficients", o.random_coefficients);
  o.require_finite = c.boolean("require_finite", o.require_finite);
  {
    const ConfigReader sc = c.child_or_empty("sampler");
    const std::string kind = sc.string("kind", "monte_carlo");
    if (kind == "monte_carlo") o.sampler = Sampler::monte_carlo(positive_integer(sc, "points", 20000), 0);
    else if (kind == "grid") o.sampler = Sampler::grid(positive_integer(sc, "points", 64, 100000));
    else sc.fail("kind", "must be 'monte_carlo' or 'grid'");
    o.sampler.max_nodes = positive_integer(sc, "max_nodes", o.sampler.max_nodes);
    sc.finish();
  }
  const double threshold = positive_number(c, "slope_threshold", 0.2);
  const std::uint64_t seed = r.seed("kakeya-sweep");
  c.finish();

  const KakeyaSweep sw = kakeya_ratio_sweep(datum, nu, Rs, lambdas, o, seed);
  r.out.table.header = {"R", "lambda", "family", "ratio", "std_error"};
  for (const auto &row : sw.rows) r.out.table.add({row.R, row.lambda, static_cast<long>(row.family_id), row.ratio, row.std_error});

  json fits = json::array();
  double worst = -std::numeric_limits<double>::infinity(), max_ratio = 0.0;
  for (double lam : lambdas) {
    std::vector<double> xs, ys;
    for (const auto &p : sw.maxima)
      if (p.lambda == lam) {
        xs.push_back(p.R);
        ys.push_back(p.max_ratio);
        max_ratio = std::max(max_ratio, p.max_ratio);
      }
    if (xs.size() < 3) continue;
    const ScalingFit f = fit_loglog(xs, ys);
    worst = std::max(worst, f.slope);
    json fj = fit_json(f);
    fj["lambda"] = lam;
    fj["max_ratios"] = ys;
    fits.push_back(fj);
  }
  json &s = r.summary();
  s["seed"] = seed;
  s["fits"] = fits;
  s["max_ratio"] = max_ratio;
  s["slope"] = fits.empty() ? json(nullptr) : json(worst);
  s["success"] = !fits.empty() && worst <= threshold;
}

using Runner = std::function<void(Run &)>;

const std::map<std::string, Runner> &runners()
{
  static const std::map<std::string, Runner> m{
      {"bl-check", run_bl_check},
      {"bl-alpha", run_bl_alpha},
      {"blreg-estimate", run_blreg_estimate},
      {"ensemble-verify", run_ensemble_verify},
      {"cover-audit", run_cover_audit},
      {"slice-audit", run_slice_audit},
      {"restriction-scaling", run_restriction_scaling},
      {"kakeya-sweep", run_kakeya_sweep},
  };
  return m;
}

// Dotted path into the summary; numeric segments index arrays.
const json *lookup(const json &root, const std::string &path)
{
  const json *node = &root;
  std::stringstream ss(path);
  std::string seg;
  while (std::getline(ss, seg, '.')) {
    if (node->is_object()) {
      if (!node->contains(seg)) return nullptr;
      node = &(*node)[seg];
    } else if (node->is_array()) {
      if (seg.empty() || seg.find_first_not_of("0123456789") != std::string::npos) return nullptr;
      const std::size_t i = std::stoul(seg);
      if (i >= node->size()) return nullptr;
      node = &(*node)[i];
    } else {
      return nullptr;
    }
  }
  return node;
}

struct Expectation
{
  std::string path;
  std::optional<double> min, max;
  std::optional<json> equals;
};

} // namespace

const std::vector<std::string> &experiment_kinds()
{
  static const std::vector<std::string> kinds = [] {
    std::vector<std::string> k;
    for (const auto &item : runners()) k.push_back(item.first);
    return k;
  }();
  return kinds;
}

RunOutput run_experiment(const std::string &kind, const json &config, std::optional<std::uint64_t> seed)
{
  const auto it = runners().find(kind);
  if (it == runners().end()) {
    std::string known;
    for (const auto &k : experiment_kinds()) known += (known.empty() ? "" : ", ") + k;
    throw ConfigError("unknown experiment kind '" + kind + "' (expected one of: " + known + ")");
  }
  ConfigReader c(config);
  if (c.has("kind") && c.string("kind") != kind)
    c.fail("kind", "config is for '" + config["kind"].get<std::string>() + "', not '" + kind + "'");
  c.skip("kind");
  c.skip("output_path");

  // Expectations are validated up front so a typo fails before any computation.
  std::vector<Expectation> expect;
  if (config.contains("expect")) {
    const json &e = config["expect"];
    if (!e.is_object()) c.fail("expect", "expected an object");
    for (const auto &item : e.items()) {
      Expectation x;
      x.path = item.key();
      const json &v = item.value();
      auto bad = [&](const std::string &what) { throw ConfigError("config field 'expect." + x.path + "': " + what); };
      if (v.is_object()) {
        for (const auto &f : v.items()) {
          if (f.key() == "min" || f.key() == "max") {
            if (!f.value().is_number()) bad("'" + f.key() + "' must be a number");
            (f.key() == "min" ? x.min : x.max) = f.value().get<double>();
          } else if (f.key() == "equals") {
            x.equals = f.value();
          } else {
            bad("unknown field '" + f.key() + "' (use min, max or equals)");
          }
        }
        if (!x.min && !x.max && !x.equals) bad("needs min, max or equals");
      } else {
        x.equals = v;
      }
      expect.push_back(std::move(x));
    }
  }
  c.skip("expect");

  RunOutput out;
  out.summary = json::object();
  Run run{c, seed, out};
  it->second(run);
  c.finish();

  json &s = out.summary;
  s["kind"] = kind;
  s["config_hash"] = hex64(fnv1a64(config.dump()));
  s["module_versions"] = module_versions();
  s["parameters"] = c.resolved();
  json checked = json::array();
  for (const auto &x : expect) {
    const json *v = lookup(s, x.path);
    if (!v) throw ConfigError("config field 'expect." + x.path + "': no such summary entry for " + kind);
    bool ok = true;
    if (x.min || x.max) {
      ok = v->is_number() && (!x.min || v->get<double>() >= *x.min) && (!x.max || v->get<double>() <= *x.max);
    }
    if (x.equals) {
      const bool same = (v->is_number() && x.equals->is_number()) ? v->get<double>() == x.equals->get<double>() : *v == *x.equals;
      ok = ok && same;
    }
    json rec = {{"path", x.path}, {"value", *v}, {"passed", ok}};
    if (x.min) rec["min"] = *x.min;
    if (x.max) rec["max"] = *x.max;
    if (x.equals) rec["equals"] = *x.equals;
    checked.push_back(rec);
    if (!ok) out.failed_expectations.push_back(x.path + " = " + v->dump());
  }
  s["expectations"] = {{"checked", checked}, {"passed", out.failed_expectations.empty()}};
  return out;
}

void write_file_atomic(const std::filesystem::path &path, const std::string &contents)
{
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << contents;
    f.flush();
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

void write_outputs(const RunOutput &out, const std::filesystem::path &dir)
{
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "summary.json", out.summary.dump(2) + "\n");
  write_file_atomic(dir / "sweep.csv", out.table.to_csv());
}

int exit_code_for(const std::exception &e)
{
  if (dynamic_cast<const ConfigError *>(&e) || dynamic_cast<const PreconditionError *>(&e) ||
      dynamic_cast<const json::exception *>(&e))
    return 2;
  if (dynamic_cast<const BudgetError *>(&e)) return 3;
  return 1;
}

} // namespace rlab
