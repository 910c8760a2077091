#include "rlab/catalog.hpp"

namespace rlab::catalog {

namespace {

Monomial mono(std::vector<int> powers, std::vector<double> coeffs)
{
  return {std::move(powers), Eigen::Map<const Eigen::VectorXd>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()))};
}

PolyGraphParam paraboloid(int d, double radius)
{
  std::vector<Monomial> terms;
  for (int i = 0; i < d; ++i) {
    std::vector<int> p(static_cast<std::size_t>(d), 0);
    p[static_cast<std::size_t>(i)] = 2;
    terms.push_back(mono(p, {1.0}));
  }
  return PolyGraphParam(d, 1, terms, radius);
}

FamilyConstants constants(double c_cover)
{
  FamilyConstants c;
  c.c_cover = c_cover;
  return c;
}

} // namespace

NestedFamily linear_chain(int n, double c_cover)
{
  require(n == 3 || n == 4, "linear_chain: n must be 3 or 4");
  if (n == 3) {
    PolyGraphParam s0(2, 1, {mono({1, 0}, {0.3}), mono({0, 1}, {-0.2})}, 1.0);
    PolyGraphParam g1(1, 1, {mono({1}, {0.4})}, 0.7);
    return NestedFamily(3, s0, {g1}, constants(c_cover));
  }
  PolyGraphParam s0(3, 1, {mono({1, 0, 0}, {0.3}), mono({0, 1, 0}, {-0.2}), mono({0, 0, 1}, {0.1})}, 1.0);
  PolyGraphParam g1(2, 1, {mono({1, 0}, {0.4}), mono({0, 1}, {-0.3})}, 0.7);
  PolyGraphParam g2(1, 1, {mono({1}, {0.5})}, 0.5);
  return NestedFamily(4, s0, {g1, g2}, constants(c_cover));
}

NestedFamily paraboloid_chain(int n, double c_cover)
{
  require(n >= 3, "paraboloid_chain: n must be at least 3");
  std::vector<PolyGraphParam> chain;
  double radius = 1.0;
  for (int d = n - 2; d >= 1; --d) {
    radius *= 0.8;
    chain.push_back(PolyGraphParam::flat(d, 1, radius));
  }
  return NestedFamily(n, paraboloid(n - 1, 1.0), chain, constants(c_cover));
}

NestedFamily curved_chain(double c_cover)
{
  PolyGraphParam g1(1, 1, {mono({2}, {0.5})}, 0.8);
  return NestedFamily(3, paraboloid(2, 1.0), {g1}, constants(c_cover));
}

NestedFamily flat_wide(double c_cover, double radius)
{
  return NestedFamily(3, PolyGraphParam::flat(2, 1, radius), {PolyGraphParam::flat(1, 1, 0.9 * radius)}, constants(c_cover));
}

NestedFamily paraboloid_wide(double c_cover, double radius)
{
  return NestedFamily(3, paraboloid(2, radius), {PolyGraphParam::flat(1, 1, 0.9 * radius)}, constants(c_cover));
}

NestedFamily shifted_paraboloid(const Eigen::VectorXd &u0, double radius, double c_cover)
{
  const int d = static_cast<int>(u0.size());
  std::vector<Monomial> terms = paraboloid(d, radius).terms();
  for (int i = 0; i < d; ++i) {
    if (u0(i) == 0.0) continue;
    std::vector<int> p(static_cast<std::size_t>(d), 0);
    p[static_cast<std::size_t>(i)] = 1;
    terms.push_back(mono(p, {2 * u0(i)}));
  }
  return NestedFamily(d + 1, PolyGraphParam(d, 1, terms, radius), {}, constants(c_cover));
}

NestedFamily tilted_plane(const Eigen::VectorXd &b, double radius, double c_cover)
{
  const int d = static_cast<int>(b.size());
  std::vector<Monomial> terms;
  for (int i = 0; i < d; ++i) {
    std::vector<int> p(static_cast<std::size_t>(d), 0);
    p[static_cast<std::size_t>(i)] = 1;
    terms.push_back(mono(p, {b(i)}));
  }
  return NestedFamily(d + 1, PolyGraphParam(d, 1, terms, radius), {}, constants(c_cover));
}

Ensemble paraboloid_example(int n, int k, double c_cover)
{
  require(n >= 3 && k >= 2 && k <= n, "paraboloid_example: need n ≥ 3 and 2 ≤ k ≤ n");
  require(k <= 4, "paraboloid_example: the recentred points are transverse only for k ≤ 4");
  Ensemble ens;
  for (int j = 0; j + 1 < k; ++j)
    ens.families.push_back(shifted_paraboloid(0.75 * Eigen::VectorXd::Unit(n - 1, j), 0.25, c_cover));
  std::vector<PolyGraphParam> chain;
  double radius = 1.0;
  for (int d = n - 2; d >= k - 1; --d) {
    radius *= 0.8;
    chain.push_back(PolyGraphParam::flat(d, 1, radius));
  }
  ens.families.push_back(NestedFamily(n, paraboloid(n - 1, 1.0), chain, constants(c_cover)));
  ens.exponents.assign(static_cast<std::size_t>(k), 2.0 / (k - 1));
  return ens;
}

Ensemble transverse_planes(double c_cover)
{
  Ensemble ens;
  ens.families.push_back(tilted_plane(Eigen::Vector2d(1.0, 0.0), 1.0, c_cover));
  ens.families.push_back(tilted_plane(Eigen::Vector2d(0.0, 1.0), 1.0, c_cover));
  ens.families.push_back(tilted_plane(Eigen::Vector2d(-1.0, -1.0), 1.0, c_cover));
  ens.exponents = {1.0, 1.0, 1.0};
  return ens;
}

Ensemble coincident_planes(double c_cover)
{
  Ensemble ens;
  for (int j = 0; j < 2; ++j) ens.families.push_back(tilted_plane(Eigen::Vector2d::Zero(), 1.0, c_cover));
  ens.exponents = {2.0, 2.0};
  return ens;
}

BLDatum loomis_whitney()
{
  std::vector<Eigen::MatrixXd> maps;
  for (int j = 0; j < 3; ++j) {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(2, 3);
    for (int c = 0, row = 0; c < 3; ++c)
      if (c != j) L(row++, c) = 1.0;
    maps.push_back(L);
  }
  return BLDatum(maps, {0.5, 0.5, 0.5});
}

BLDatum duplicated_kernel()
{
  const Eigen::MatrixXd L{{1.0, 0.0}};
  return BLDatum({L, L}, {0.5, 0.5});
}

BLDatum identity_datum(int n)
{
  require(n >= 1, "identity_datum: n must be positive");
  return BLDatum({Eigen::MatrixXd::Identity(n, n)}, {1.0});
}

} // namespace rlab::catalog
