// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include "phi_checks.hpp"
#include "rlab/brascamp_lieb.hpp"
#include "rlab/bump.hpp"
#include "rlab/catalog.hpp"
#include "rlab/experiments.hpp"
#include "rlab/extension.hpp"
#include "rlab/fit.hpp"
#include "rlab/kakeya.hpp"
#include "rlab/runner.hpp"
#include "rlab/wavepackets.hpp"

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

using namespace rlab;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome
{
  bool pass = false;
  std::string detail;
};

std::string fmt(const char *f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char *f, ...)
{
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

Outcome wedge_alpha_equivalence()
{
  const auto t0 = Clock::now();
  const WedgeAlphaSweep sw = wedge_alpha_sweep(200, 2024);
  const double t = seconds_since(t0);
  return {sw.agreements == 200 && t < 60, fmt("%ld/200 agree, %.2f s", sw.agreements, t)};
}

Outcome alpha_on_structured_data()
{
  const AlphaWitness lw = alpha_lower_bound(catalog::loomis_whitney());
  const AlphaWitness dup = alpha_lower_bound(catalog::duplicated_kernel());
  const AlphaWitness id = alpha_lower_bound(catalog::identity_datum(3));
  const bool witness = same_subspace(dup.witness, span_of<double>({VectorXd{{0.0, 1.0}}}));
  return {lw.alpha == 0.0 && dup.alpha == 1.0 && witness && id.alpha == 0.0,
          fmt("LW %g, duplicated %g (witness span{e2}: %s), identity %g", lw.alpha, dup.alpha, witness ? "yes" : "no", id.alpha)};
}

Outcome phi_machinery()
{
  const std::vector<NestedFamily> fams{catalog::linear_chain(3, 4), catalog::linear_chain(4, 16), catalog::paraboloid_chain(3, 4),
                                       catalog::paraboloid_chain(4, 16)};
  testdata::PhiCheckStats worst;
  for (std::size_t i = 0; i < fams.size(); ++i) {
    const testdata::PhiCheckStats st = testdata::run_phi_checks(fams[i], 100, 100 + i);
    worst.split = std::max(worst.split, st.split);
    worst.gamma = std::max(worst.gamma, st.gamma);
    worst.jacobian_rel = std::max(worst.jacobian_rel, st.jacobian_rel);
    worst.roundtrip = std::max(worst.roundtrip, st.roundtrip);
    worst.cases += st.cases;
  }
  const bool ok = worst.split <= 1e-12 && worst.gamma <= 1e-12 && worst.jacobian_rel <= 1e-6 && worst.roundtrip <= 1e-10;
  return {ok, fmt("%ld inputs; split %.1e, gamma %.1e, Jacobian rel %.1e, round trip %.1e", worst.cases, worst.split, worst.gamma,
                  worst.jacobian_rel, worst.roundtrip)};
}

AmplitudeSpec bump_amplitude(int d, double r)
{
  AmplitudeSpec a;
  a.center = VectorXd::Zero(d);
  a.radius = r;
  return a;
}

Outcome slice_reconstruction()
{
  const auto t0 = Clock::now();
  const double mu = 1.0 / 16;
  const NestedFamily F = catalog::paraboloid_chain(3, 4.0);
  const AmplitudeSpec a = bump_amplitude(2, 0.5);
  const Density f{[mu](const VectorXd &u) { return exp_bump(u(1) / (0.9 * mu)) * std::polar(1.0, 3 * u(0)); },
                  Box{VectorXd{{-1.0, -0.9 * mu}}, VectorXd{{1.0, 0.9 * mu}}}};
  const SliceDecomposition dec = slice_decompose(F, 1, a, f, VectorXd::Constant(1, mu));
  const QuadratureSpec ref_q{400, QuadratureRule::GaussLegendre, true};
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    Rng rng(derive_seed(41, {static_cast<std::uint64_t>(i)}));
    const VectorXd x = uniform_box(rng, 3, 8.0);
    const cplx ref = extend(F.sigma0(), a, f, x, ref_q).value;
    worst = std::max(worst, std::abs(dec.evaluate(x) - ref) / std::abs(ref));
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-6 && t < 120, fmt("max relative error %.2e over 20 points, %.1f s", worst, t)};
}

Outcome local_constancy()
{
  const double R = 8.0;
  const Density g{[](const VectorXd &s) { return cplx(std::cos(2 * s(0)), 0.3 * s(0)); }, std::nullopt};
  const LocalConstancyReport rep =
      local_constancy_error(catalog::curved_chain(4.0), 1, g, bump_amplitude(2, 0.5), R, VectorXd::Constant(1, 0.5 / R), 3);
  bool ok = rep.errors.size() == 4;
  double worst = 0.0;
  for (std::size_t N = 1; ok && N < rep.errors.size(); ++N) {
    worst = std::max(worst, rep.errors[N] / rep.errors[N - 1]);
    ok = rep.errors[N] < rep.errors[N - 1];
  }
  ok = ok && worst <= 0.5;
  return {ok, fmt("errors %.2e %.2e %.2e %.2e, worst ratio %.3f", rep.errors[0], rep.errors[1], rep.errors[2], rep.errors[3], worst)};
}

Outcome cover_audit()
{
  long uncovered = 0, inflation = 0, overlap_excess = 0, audits = 0;
  int max_overlap = 0;
  for (int n : {3, 4}) {
    const double C = n == 3 ? 4.0 : 16.0;
    for (const NestedFamily &F : {catalog::linear_chain(n, C), catalog::paraboloid_chain(n, C)})
      for (double R : {64.0, 256.0}) {
        const WavePacketCover cover(F, R, VectorXd::Constant(F.depth(), 2.0 / R));
        const CoverAudit a = audit_cover(cover, 10'000, derive_seed(6, {static_cast<std::uint64_t>(audits)}));
        uncovered += a.uncovered + (10'000 - a.samples);
        inflation += a.inflation_violations;
        overlap_excess += a.max_overlap > a.overlap_bound;
        max_overlap = std::max(max_overlap, a.max_overlap);
        ++audits;
      }
  }
  return {uncovered == 0 && inflation == 0 && overlap_excess == 0,
          fmt("%ld audits: %ld uncovered, %ld over the overlap bound (max overlap %d), %ld inflation violations", audits, uncovered,
              overlap_excess, max_overlap, inflation)};
}

Outcome packet_analysis()
{
  const double R = 64, mu = 2.0 / R;
  const NestedFamily P = catalog::paraboloid_chain(3, 4.0);
  const WavePacketCover cover(P, R, VectorXd::Constant(1, mu));
  const double L = 0.5;
  const Density f{[mu, L](const VectorXd &u) {
                    const double g = std::abs(u(1)) < 0.9 * mu ? std::exp(-0.5 * std::pow(u(1) / (mu / 8), 2)) : 0.0;
                    return g * exp_bump(u(0) / L) * std::polar(1.0, 3 * u(0));
                  },
                  Box{VectorXd{{-L, -0.9 * mu}}, VectorXd{{L, 0.9 * mu}}}};
  const PacketDecomposition dec = decompose(cover, f);
  const ReconstructionReport rep = reconstruction_report(cover, dec, f, *f.support, 24);
  const bool parseval = rep.parseval_ratio >= rep.parseval_lower && rep.parseval_ratio <= rep.parseval_upper;

  const NestedFamily W = catalog::flat_wide(16.0);
  const WavePacketCover wide(W, R, VectorXd::Constant(1, mu));
  AmplitudeSpec amp;
  amp.center = VectorXd::Zero(2);
  amp.radius = 3.8;
  amp.smoothness_width = 1.0;
  WavePacket p;
  p.cell = static_cast<int>(wide.cells().size() / 2);
  p.index = Eigen::Vector2i(1, 2);
  p.frequency = wide.cells()[static_cast<std::size_t>(p.cell)].shape_inv.transpose() * p.index.cast<double>();
  p.coefficient = 1.0;
  const LocalisationReport loc = localisation_decay(wide, amp, p, 100, 9);
  return {rep.relative_l2 <= 1e-6 && parseval && loc.ratio() <= 1e-4,
          fmt("L2 error %.2e; Parseval %.4f in [%.4f, %.4f]; localisation ratio %.2e", rep.relative_l2, rep.parseval_ratio,
              rep.parseval_lower, rep.parseval_upper, loc.ratio())};
}

Outcome kakeya()
{
  const BLDatum lw = catalog::loomis_whitney();
  const std::vector<double> p{0.5, 0.5, 0.5};
  const double lam = 1.0, R = 4.0, exact = 8 * lam * lam * lam;
  std::vector<SlabFamily> tubes(3);
  for (int j = 0; j < 3; ++j) tubes[j].add(Slab(lw.maps()[j], VectorXd::Zero(2), lam), 1.0);
  const IntegralEstimate mc = multilinear_slab_integral(tubes, p, R, Sampler::monte_carlo(2'000'000, 8));
  const IntegralEstimate grid = multilinear_slab_integral(tubes, p, R, Sampler::grid(32));
  const double mc_rel = std::abs(mc.value / exact - 1);

  const std::vector<double> Rs{8, 16, 32, 64};
  auto slope = [&](const BLDatum &d, double nu, bool finite, std::uint64_t seed) {
    KakeyaSweepOptions o;
    o.require_finite = finite;
    o.sampler = Sampler::monte_carlo(20'000, 0);
    const KakeyaSweep sw = kakeya_ratio_sweep(d, nu, Rs, {1.0}, o, seed);
    std::vector<double> m;
    for (const auto &pt : sw.maxima) m.push_back(pt.max_ratio);
    return fit_loglog(Rs, m).slope;
  };
  const double transverse = slope(lw, 0.05, true, 2);
  const double control = slope(catalog::duplicated_kernel(), 0.0, false, 3);
  return {mc_rel <= 1e-3 && grid.value == exact && transverse <= 0.2 && control >= 0.8,
          fmt("MC rel error %.1e, grid %.17g vs %g; sweep slope %.3f; control slope %.3f", mc_rel, grid.value, exact, transverse,
              control)};
}

Outcome restriction_scaling()
{
  const auto t0 = Clock::now();
  ExperimentOptions o3;
  o3.mc.samples = 20'000;
  const ScalingResult r3 = restriction_scaling_experiment(catalog::paraboloid_example(3, 2), 32,
                                                          {0.25, 0.125, 0.0625, 0.03125, 0.015625}, o3, 1);
  const double t3 = seconds_since(t0);
  ExperimentOptions o4;
  o4.mc.samples = 20'000;
  o4.mc.cells_per_axis = 4;
  const ScalingResult r4 = restriction_scaling_experiment(catalog::paraboloid_example(4, 2), 8, {0.25, 0.125, 0.0625}, o4, 1);
  const bool ok = std::abs(r3.fit.slope - r3.predicted) <= 0.15 && t3 < 600 && std::abs(r4.fit.slope - r4.predicted) <= 0.3;
  return {ok, fmt("n=3: slope %.3f vs %g (%.1f s); n=4 at R=8: slope %.3f vs %g", r3.fit.slope, r3.predicted, t3, r4.fit.slope,
                  r4.predicted)};
}

std::string slurp(const std::filesystem::path &p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism()
{
  const std::vector<std::pair<std::string, json>> runs{
      {"bl-alpha", json::parse(R"({"count": 40, "seed": 3})")},
      {"cover-audit", json::parse(R"({"family": {"preset": "paraboloid_chain"}, "R_list": [64], "samples": 2000, "seed": 4})")},
      {"kakeya-sweep", json::parse(R"({"datum": {"preset": "loomis_whitney"}, "R_list": [8, 16, 32], "families_per_point": 3,
                                       "sampler": {"points": 4000}, "seed": 5})")},
      {"restriction-scaling", json::parse(R"({"ensemble": {"preset": "paraboloid_example"}, "R": 8,
                                              "delta_list": [0.5, 0.25, 0.125], "monte_carlo": {"samples": 2000, "cells_per_axis": 4},
                                              "seed": 6})")},
  };
  const auto root = std::filesystem::temp_directory_path() / ("rlab_acceptance_" + std::to_string(::getpid()));
  int identical = 0, files = 0;
  for (const auto &[kind, cfg] : runs) {
    write_outputs(run_experiment(kind, cfg), root / kind / "a");
    write_outputs(run_experiment(kind, cfg), root / kind / "b");
    for (const char *f : {"summary.json", "sweep.csv"}) {
      ++files;
      identical += slurp(root / kind / "a" / f) == slurp(root / kind / "b" / f);
    }
  }
  std::filesystem::remove_all(root);
  return {identical == files, fmt("%d/%d output files byte-identical across two runs", identical, files)};
}

} // namespace

int main()
{
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  const std::vector<std::pair<const char *, std::function<Outcome()>>> criteria{
      {"wedge/alpha equivalence on 200 configurations", wedge_alpha_equivalence},
      {"alpha on structured data", alpha_on_structured_data},
      {"phi machinery", phi_machinery},
      {"slice formula reconstruction", slice_reconstruction},
      {"local constancy", local_constancy},
      {"wave-packet cover audit", cover_audit},
      {"packet analysis", packet_analysis},
      {"Kakeya closed form and sweeps", kakeya},
      {"restriction scaling in delta", restriction_scaling},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %zu: %s  %s: %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
