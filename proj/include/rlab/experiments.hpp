#pragma once

#include "extension.hpp"
#include "fit.hpp"
#include "nested_family.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace rlab {

// P((u − c)/h)·Π exp_bump((u_i − c_i)/h_i) with P a random trigonometric polynomial of the given degree
// per variable, normalised so |P| ≤ 1. The same seed gives the same P on every box.
Density trig_density(const Box &box, int degree, std::uint64_t seed);

// ‖f‖₂ on a box by the midpoint rule.
double l2_norm(const Density &f, const Box &box, int points_per_axis = 64);

struct StratifiedOptions
{
  int cells_per_axis = 8; // pieces of the core interval on each axis
  long samples = 20'000;  // total, including the pilot
  int pilot_per_cell = 4;
  int shells = 0;         // each axis is the core [−R/2^shells, R/2^shells] plus that many dyadic intervals per side
};

struct StratifiedEstimate
{
  Eigen::VectorXd value;
  Eigen::VectorXd std_error;
  long evaluations = 0;
};

// ∫_{Q_R} fn for a vector-valued fn over the product of the per-axis partitions. Uniform pilot draws in every stratum, then the rest of the budget
// allocated in proportion to the largest per-component share of the pilot standard deviation.
StratifiedEstimate stratified_cube_integral(const std::function<Eigen::VectorXd(const Eigen::VectorXd &)> &fn, int dim,
                                            double R, const StratifiedOptions &opts, std::uint64_t seed);

struct ExperimentOptions
{
  QuadratureSpec quad{16, QuadratureRule::Midpoint, true};
  StratifiedOptions mc{};
  double support_radius = 0.5; // test densities live in the cube of this radius, capped at 0.9 of each domain
  int degree = 2;
  int norm_points = 64;
  bool require_finite = true;
};

struct ScalingRow
{
  double scale = 0.0; // δ or R
  double integral = 0.0;
  double std_error = 0.0;
  double normaliser = 0.0;
  double ratio = 0.0;
};

struct ScalingResult
{
  ScalingFit fit;
  double predicted = 0.0;
  std::vector<ScalingRow> rows;
  long evaluations = 0;
};

// (n−k)(n−k+1)/(2(k−1)) written through the depth r = n−k of the last family.
double predicted_delta_exponent(int depth, int k);

// ∫_{Q_R} Π_j |E f_j|^{q_j} / Π_j ‖f_j‖₂^{q_j} against δ, with f_k localised to the box of radii ρ·δ^{e_i}
// (e_i = 0 on the coordinates kept by the chain of the last family, 1..r on the ones it removes) and generic
// f_j for j < k. Same sample points for every δ.
ScalingResult restriction_scaling_experiment(const Ensemble &ens, double R, const std::vector<double> &deltas,
                                             const ExperimentOptions &opts, std::uint64_t seed);

// The same normalised integral with generic f_j for every family, against R.
ScalingResult r_growth_experiment(const Ensemble &ens, const std::vector<double> &R_list, const ExperimentOptions &opts,
                                  std::uint64_t seed);

} // namespace rlab
