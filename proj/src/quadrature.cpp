#include "rlab/quadrature.hpp"
#include "rlab/errors.hpp"

#include <cmath>
#include <string>

namespace rlab {

Box Box::cube(const Eigen::VectorXd &center, double half_width)
{
  return {center.array() - half_width, center.array() + half_width};
}

Box Box::intersect(const Box &other) const
{
  require(dim() == other.dim(), "Box::intersect: dimension mismatch");
  return {lo.cwiseMax(other.lo), hi.cwiseMin(other.hi)};
}

Rule1D rule_1d(QuadratureRule rule, int M)
{
  require(M >= 1, "rule_1d: need at least one node");
  Rule1D r;
  r.nodes.resize(M);
  r.weights.resize(M);
  if (rule == QuadratureRule::Midpoint) {
    for (int i = 0; i < M; ++i) {
      r.nodes(i) = -1.0 + (2.0 * i + 1.0) / M;
      r.weights(i) = 2.0 / M;
    }
    return r;
  }
  // Golub–Welsch: nodes are eigenvalues of the Jacobi matrix of the Legendre recurrence.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(M, M);
  for (int i = 1; i < M; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    J(i, i - 1) = J(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  r.nodes = es.eigenvalues();
  r.weights = 2.0 * es.eigenvectors().row(0).transpose().array().square();
  return r;
}

TensorGrid tensor_grid(const Box &box, const std::vector<int> &counts, QuadratureRule rule, std::size_t max_nodes)
{
  const Eigen::Index d = box.dim();
  require(static_cast<Eigen::Index>(counts.size()) == d, "tensor_grid: one count per axis");
  double total_d = 1.0;
  for (int c : counts) total_d *= c;
  if (total_d > static_cast<double>(max_nodes))
    throw BudgetError("tensor_grid: " + std::to_string(static_cast<long long>(total_d)) + " nodes exceed the cap " +
                      std::to_string(max_nodes));
  const std::size_t total = static_cast<std::size_t>(total_d);
  std::vector<Rule1D> rules;
  for (Eigen::Index a = 0; a < d; ++a) rules.push_back(rule_1d(rule, counts[static_cast<std::size_t>(a)]));
  const Eigen::VectorXd c = box.center(), h = box.half_width();
  TensorGrid g;
  g.counts = counts;
  g.nodes.resize(d, static_cast<Eigen::Index>(total));
  g.weights.resize(static_cast<Eigen::Index>(total));
  for (std::size_t j = 0; j < total; ++j) {
    std::size_t rest = j;
    double w = 1.0;
    for (Eigen::Index a = 0; a < d; ++a) {
      const std::size_t M = static_cast<std::size_t>(counts[static_cast<std::size_t>(a)]);
      const Eigen::Index i = static_cast<Eigen::Index>(rest % M);
      rest /= M;
      g.nodes(a, static_cast<Eigen::Index>(j)) = c(a) + h(a) * rules[static_cast<std::size_t>(a)].nodes(i);
      w *= h(a) * rules[static_cast<std::size_t>(a)].weights(i);
    }
    g.weights(static_cast<Eigen::Index>(j)) = w;
  }
  return g;
}

} // namespace rlab
