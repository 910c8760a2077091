#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace rlab {

enum class QuadratureRule { Midpoint, GaussLegendre };

struct QuadratureSpec
{
  int points_per_axis = 32;
  QuadratureRule rule = QuadratureRule::Midpoint;
  bool adapt = true;                  // raise per-axis counts to resolve the oscillation
  std::size_t max_nodes = 4'000'000;  // cap on the tensor grid size
};

// Axis-aligned box [lo, hi].
struct Box
{
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  Eigen::Index dim() const { return lo.size(); }
  Eigen::VectorXd center() const { return 0.5 * (lo + hi); }
  Eigen::VectorXd half_width() const { return 0.5 * (hi - lo); }
  bool contains(const Eigen::VectorXd &u) const
  {
    return ((u - lo).array() >= 0).all() && ((hi - u).array() >= 0).all();
  }
  static Box cube(const Eigen::VectorXd &center, double half_width);
  Box intersect(const Box &other) const;
  bool empty() const { return ((hi - lo).array() <= 0).any(); }
};

struct Rule1D
{
  Eigen::VectorXd nodes;   // on [−1, 1]
  Eigen::VectorXd weights;
};

Rule1D rule_1d(QuadratureRule rule, int M);

// Tensor-product rule on a box; node j has multi-index digits with axis 0 fastest.
struct TensorGrid
{
  Eigen::MatrixXd nodes; // d × N
  Eigen::VectorXd weights;
  std::vector<int> counts;
};

TensorGrid tensor_grid(const Box &box, const std::vector<int> &counts, QuadratureRule rule, std::size_t max_nodes);

} // namespace rlab
