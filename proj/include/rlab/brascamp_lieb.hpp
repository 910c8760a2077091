#pragma once

#include "linear_geometry.hpp"
#include "random.hpp"

#include <cstdint>
#include <vector>

namespace rlab {

class BLDatum
{
public:
  // Each map is n_j × n and must be surjective; exponents lie in (0, 1].
  BLDatum(std::vector<Eigen::MatrixXd> maps, std::vector<double> exponents, double tol = kDefaultRankTol);

  Eigen::Index ambient_dim() const { return n_; }
  std::size_t size() const { return maps_.size(); }
  const std::vector<Eigen::MatrixXd> &maps() const { return maps_; }
  const std::vector<double> &exponents() const { return p_; }
  const std::vector<Subspace> &kernels() const { return kernels_; }
  double tol() const { return tol_; }

private:
  Eigen::Index n_;
  std::vector<Eigen::MatrixXd> maps_;
  std::vector<double> p_;
  std::vector<Subspace> kernels_;
  double tol_;
};

struct AlphaWitness
{
  double alpha = 0.0;
  Subspace witness;
  bool exhaustive = false;
  std::size_t candidates = 0;
};

struct AlphaSearchOptions
{
  int depth = 4;
  int random_budget = 8;
  std::uint64_t seed = 0;
  std::size_t lattice_cap = 256;
  int greedy_rounds = 32;
};

double bl_functional(const Subspace &V, const BLDatum &datum);

AlphaWitness alpha_lower_bound(const BLDatum &datum, const AlphaSearchOptions &opts = {});
AlphaWitness alpha_lower_bound(const BLDatum &datum, int depth, int random_budget, std::uint64_t seed);

struct FinitenessVerdict
{
  bool finite = false;
  AlphaWitness evidence;
  explicit operator bool() const { return finite; }
};

FinitenessVerdict is_finite_blreg(const BLDatum &datum, double tol = 1e-8, const AlphaSearchOptions &opts = {});

struct WedgeAlphaReport
{
  double wedge = 0.0;
  double alpha = 0.0;
  bool agree = false;
  AlphaWitness search;
};

WedgeAlphaReport wedge_alpha_report(const std::vector<Subspace> &kernels, const std::vector<Eigen::MatrixXd> &maps,
                                       double tol = 1e-8, const AlphaSearchOptions &opts = {});

enum class KernelConfigKind { Generic, Dependent, NearlyDependent, Oversubscribed };

struct KernelConfiguration
{
  KernelConfigKind kind = KernelConfigKind::Generic;
  std::vector<Subspace> kernels;
};

// Random kernels in ℝⁿ, 2 ≤ k ≤ n, each of dimension 1..n−1. Generic: independent Gaussian bases with Σ dim ≤ n.
// Dependent: one basis vector replaced by a combination of the others. NearlyDependent: that vector moved by 1e−5.
// Oversubscribed: Σ dim = n + 1.
KernelConfiguration random_kernel_configuration(int n, int k, KernelConfigKind kind, Rng &rng);

struct WedgeAlphaSweep
{
  std::vector<KernelConfiguration> configs;
  std::vector<WedgeAlphaReport> reports;
  long agreements = 0;
};

// count configurations cycling through the four kinds, n ∈ {2, 3, 4}; maps are projections with those kernels.
WedgeAlphaSweep wedge_alpha_sweep(int count, std::uint64_t seed, double tol = 1e-8, const AlphaSearchOptions &opts = {});

// Rows form an orthonormal basis of the orthogonal complement of `ker`, so the map is the
// orthogonal projection with that kernel (in coordinates).
Eigen::MatrixXd projection_with_kernel(const Subspace &ker);

struct BLRegOptions
{
  int samples_per_unit = 2;         // midpoint nodes per unit length along each axis
  std::size_t grid_cap = 4'000'000; // total quadrature nodes
  int max_sweeps = 24;
};

// Best ratio found over step functions on unit-lattice cubes; a lower bound for BL(L,p;1,R).
double blreg_lower_bound(const BLDatum &datum, double R, int iters, std::uint64_t seed, const BLRegOptions &opts = {});

struct WedgeCheckReport
{
  double ratio = 0.0;
  double predicted = 0.0;
  double wedge = 0.0;
  double lower_bound = 0.0;
};

WedgeCheckReport quantitative_wedge_check(const std::vector<Subspace> &kernels, double R, int iters, std::uint64_t seed,
                                          const BLRegOptions &opts = {});

bool subensemble_monotonicity_check(const std::vector<Eigen::MatrixXd> &parent_maps,
                                    const std::vector<Eigen::MatrixXd> &child_maps, int samples, std::uint64_t seed);

// Subspaces generated from the kernels by sums and intersections, deduplicated.
struct KernelLattice
{
  std::vector<Subspace> members;
  bool stabilized = false;
};

KernelLattice kernel_lattice(const std::vector<Subspace> &generators, int depth, std::size_t cap);

} // namespace rlab
