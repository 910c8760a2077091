#pragma once

#include "brascamp_lieb.hpp"
#include "random.hpp"

#include <cstdint>
#include <vector>

namespace rlab {

// T = {x : |Lx − v|_∞ < r}.
struct Slab
{
  Eigen::MatrixXd map;
  Eigen::VectorXd offset;
  double width = 1.0;

  Slab() = default;
  Slab(Eigen::MatrixXd L, Eigen::VectorXd v, double r);
  bool contains(const Eigen::VectorXd &x) const { return ((map * x - offset).cwiseAbs().array() < width).all(); }
};

inline bool slab_indicator(const Slab &s, const Eigen::VectorXd &x) { return s.contains(x); }

struct SlabFamily
{
  std::vector<Slab> slabs;
  std::vector<double> coefficients;
  double nu = 0.0; // direction perturbation radius used to generate the family

  void add(Slab s, double c);
  double total() const;
  double value(const Eigen::VectorXd &x) const; // Σ c_T χ_T(x)
};

struct Sampler
{
  enum class Kind { Grid, MonteCarlo };
  Kind kind = Kind::MonteCarlo;
  long points = 2'000'000; // per axis for Grid, total for MonteCarlo
  std::uint64_t seed = 0;
  long max_nodes = 100'000'000;

  static Sampler grid(long per_axis) { return {Kind::Grid, per_axis, 0, 100'000'000}; }
  static Sampler monte_carlo(long n, std::uint64_t seed) { return {Kind::MonteCarlo, n, seed, 100'000'000}; }
};

struct IntegralEstimate
{
  double value = 0.0;
  double std_error = 0.0;
};

// ∫_{Q_R} Π_j |Σ_T c_T χ_T|^{p_j}. Monte-Carlo stratifies over the slabs of the first family, samples
// the cross-section of each and integrates exactly along one null direction of its map.
IntegralEstimate multilinear_slab_integral(const std::vector<SlabFamily> &families, const std::vector<double> &p, double R,
                                           const Sampler &sampler);

// L·Q with Q a Cayley rotation chosen so the kernel moves by at most nu in projection distance.
Eigen::MatrixXd perturb_map(const Eigen::MatrixXd &L, double nu, Rng &rng);

struct KakeyaSweepOptions
{
  int families_per_point = 20;
  int slabs_per_family = 4;
  double cluster = 1.0;            // offsets pass within cluster·λ of a common random anchor
  bool random_coefficients = true; // uniform [0,1], otherwise 1
  Sampler sampler = Sampler::monte_carlo(20'000, 0);
  bool require_finite = true;      // false admits non-finite data (negative controls)
  AlphaSearchOptions alpha{};
};

struct KakeyaRow
{
  double R = 0.0;
  double lambda = 0.0;
  int family_id = 0;
  double ratio = 0.0;
  double std_error = 0.0;
};

struct KakeyaPoint
{
  double R = 0.0;
  double lambda = 0.0;
  double max_ratio = 0.0;
};

struct KakeyaSweep
{
  std::vector<KakeyaRow> rows;
  std::vector<KakeyaPoint> maxima;
};

// ratio = integral / (λⁿ Π (Σ c_T)^{p_j}) over random ν-perturbed slab families, per (R, λ).
KakeyaSweep kakeya_ratio_sweep(const BLDatum &datum, double nu, const std::vector<double> &R_list,
                               const std::vector<double> &lambda_list, const KakeyaSweepOptions &opts, std::uint64_t seed);

} // namespace rlab
