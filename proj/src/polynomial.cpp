#include "rlab/polynomial.hpp"

#include <sstream>

namespace rlab {

PolyGraphParam::PolyGraphParam(int in_dim, int out_dim, std::vector<Monomial> terms, double domain_radius)
    : d_(in_dim), m_(out_dim), terms_(std::move(terms)), radius_(domain_radius)
{
  require(d_ >= 1, "PolyGraphParam: in_dim must be positive");
  require(m_ >= 0, "PolyGraphParam: out_dim must be nonnegative");
  require(radius_ > 0, "PolyGraphParam: domain radius must be positive");
  for (const auto &t : terms_) {
    require(static_cast<int>(t.powers.size()) == d_, "PolyGraphParam: monomial arity differs from in_dim");
    require(t.coeffs.size() == m_, "PolyGraphParam: coefficient vector length differs from out_dim");
    int degree = 0;
    for (int p : t.powers) {
      require(p >= 0, "PolyGraphParam: negative exponent");
      degree += p;
    }
    require(degree > 0 || t.coeffs.isZero(), "PolyGraphParam: constant term must vanish (psi(0) = 0)");
  }
}

PolyGraphParam PolyGraphParam::from_coefficients(int in_dim, int out_dim,
                                                 const std::map<std::string, std::vector<double>> &c,
                                                 double domain_radius)
{
  std::vector<Monomial> terms;
  for (const auto &[key, coeffs] : c) {
    Monomial t;
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, ',')) {
      std::size_t used = 0;
      int v = 0;
      try {
        v = std::stoi(part, &used);
      } catch (const std::exception &) {
        throw PreconditionError("PolyGraphParam: bad monomial key '" + key + "'");
      }
      require(used == part.size(), "PolyGraphParam: bad monomial key '" + key + "'");
      t.powers.push_back(v);
    }
    require(static_cast<int>(coeffs.size()) == out_dim, "PolyGraphParam: monomial '" + key + "' needs " +
                                                            std::to_string(out_dim) + " coefficients");
    t.coeffs = Eigen::Map<const Eigen::VectorXd>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
    terms.push_back(std::move(t));
  }
  return PolyGraphParam(in_dim, out_dim, std::move(terms), domain_radius);
}

PolyGraphParam PolyGraphParam::flat(int in_dim, int out_dim, double domain_radius)
{
  return PolyGraphParam(in_dim, out_dim, {}, domain_radius);
}

bool PolyGraphParam::is_affine() const
{
  for (const auto &t : terms_) {
    int degree = 0;
    for (int p : t.powers) degree += p;
    if (degree > 1 && !t.coeffs.isZero()) return false;
  }
  return true;
}

} // namespace rlab
