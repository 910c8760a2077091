#include "rlab/brascamp_lieb.hpp"
#include "rlab/random.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace rlab {

BLDatum::BLDatum(std::vector<Eigen::MatrixXd> maps, std::vector<double> exponents, double tol)
    : maps_(std::move(maps)), p_(std::move(exponents)), tol_(tol)
{
  require(!maps_.empty(), "BLDatum: need at least one map");
  require(maps_.size() == p_.size(), "BLDatum: one exponent per map");
  n_ = maps_.front().cols();
  require(n_ >= 1, "BLDatum: ambient dimension must be positive");
  for (std::size_t j = 0; j < maps_.size(); ++j) {
    const auto &L = maps_[j];
    require(L.cols() == n_, "BLDatum: maps have different domain dimensions");
    require(L.rows() >= 1, "BLDatum: map with empty codomain");
    require(matrix_rank(L, tol_) == L.rows(), "BLDatum: map " + std::to_string(j) + " is not surjective");
    require(p_[j] > 0.0 && p_[j] <= 1.0, "BLDatum: exponent outside (0,1]");
    kernels_.push_back(kernel(L, tol_));
  }
}

double bl_functional(const Subspace &V, const BLDatum &datum)
{
  require(V.ambient_dim() == datum.ambient_dim(), "bl_functional: dimension mismatch");
  double f = static_cast<double>(V.dim());
  for (std::size_t j = 0; j < datum.size(); ++j)
    f -= datum.exponents()[j] * static_cast<double>(dim_image(datum.maps()[j], V, datum.tol()));
  return f;
}

namespace {

constexpr double kSameTol = 1e-8;
constexpr double kValueTol = 1e-9;

struct Member
{
  Subspace V;
  Eigen::MatrixXd P;
};

bool duplicate(const std::vector<Member> &set, const Subspace &V, const Eigen::MatrixXd &P)
{
  for (const auto &m : set)
    if (m.V.dim() == V.dim() && (m.P - P).norm() <= kSameTol) return true;
  return false;
}

bool try_add(std::vector<Member> &set, const Subspace &V)
{
  Eigen::MatrixXd P = V.projector();
  if (duplicate(set, V, P)) return false;
  set.push_back({V, std::move(P)});
  return true;
}

// Lexicographic comparison of projectors, entries closer than kSameTol count as equal.
bool lex_less(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b)
{
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    if (std::abs(d) > kSameTol) return d < 0;
  }
  return false;
}

// True when (fa, A) should replace (fb, B) as the argmax.
bool better(double fa, const Subspace &A, double fb, const Subspace &B)
{
  if (fa > fb + kValueTol) return true;
  if (fa < fb - kValueTol) return false;
  if (A.dim() != B.dim()) return A.dim() < B.dim();
  return lex_less(A.projector(), B.projector());
}

Subspace greedy_improve(const BLDatum &datum, Subspace V, const std::vector<Eigen::VectorXd> &pool, int rounds)
{
  double fV = bl_functional(V, datum);
  const Eigen::Index m = V.dim();
  for (int round = 0; round < rounds; ++round) {
    bool improved = false;
    for (Eigen::Index i = 0; i < m && !improved; ++i) {
      for (const auto &w : pool) {
        Eigen::MatrixXd cols = V.basis();
        cols.col(i) = w;
        Subspace cand = orthonormalize(cols, V.tol());
        if (cand.dim() != m) continue;
        const double f = bl_functional(cand, datum);
        if (f > fV + kValueTol) {
          V = std::move(cand);
          fV = f;
          improved = true;
          break;
        }
      }
    }
    if (!improved) break;
  }
  return V;
}

} // namespace

KernelLattice kernel_lattice(const std::vector<Subspace> &generators, int depth, std::size_t cap)
{
  require(!generators.empty(), "kernel_lattice: need generators");
  const Eigen::Index n = generators.front().ambient_dim();
  std::vector<Member> set;
  try_add(set, Subspace::zero(n));
  try_add(set, Subspace::whole(n));
  Subspace total = Subspace::zero(n);
  for (const auto &g : generators) {
    require(g.ambient_dim() == n, "kernel_lattice: dimension mismatch");
    try_add(set, g);
    total = subspace_sum(total, g);
  }
  try_add(set, total);

  KernelLattice out;
  std::size_t old_size = 0;
  for (int level = 0; level < depth; ++level) {
    const std::size_t size = set.size();
    bool grew = false;
    // Only pairs involving a member added in the previous level can produce something new.
    for (std::size_t i = 0; i < size && set.size() < cap; ++i)
      for (std::size_t j = std::max(i + 1, old_size); j < size && set.size() < cap; ++j) {
        grew |= try_add(set, subspace_sum(set[i].V, set[j].V));
        if (set.size() < cap) grew |= try_add(set, subspace_intersect(set[i].V, set[j].V));
      }
    old_size = size;
    if (!grew) {
      out.stabilized = true;
      break;
    }
    if (set.size() >= cap) break;
  }
  for (auto &m : set) out.members.push_back(std::move(m.V));
  return out;
}

AlphaWitness alpha_lower_bound(const BLDatum &datum, const AlphaSearchOptions &opts)
{
  require(opts.depth >= 1, "alpha_lower_bound: depth must be at least 1");
  require(opts.random_budget >= 0, "alpha_lower_bound: negative random budget");
  const Eigen::Index n = datum.ambient_dim();

  AlphaWitness best;
  best.witness = Subspace::zero(n);
  best.alpha = 0.0;

  auto consider = [&](const Subspace &V) {
    const double f = bl_functional(V, datum);
    ++best.candidates;
    if (better(f, V, best.alpha, best.witness)) {
      best.alpha = f;
      best.witness = V;
    }
  };

  KernelLattice lattice = kernel_lattice(datum.kernels(), opts.depth, opts.lattice_cap);
  best.exhaustive = lattice.stabilized;
  for (const auto &V : lattice.members) consider(V);

  std::vector<Eigen::VectorXd> pool;
  for (const auto &K : datum.kernels())
    for (Eigen::Index c = 0; c < K.dim(); ++c) pool.push_back(K.basis().col(c));

  for (Eigen::Index m = 1; m < n; ++m)
    for (int b = 0; b < opts.random_budget; ++b) {
      Rng rng(derive_seed(opts.seed, {static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(b)}));
      Subspace V = orthonormalize(gaussian_matrix(rng, n, m), datum.tol());
      if (V.dim() != m) continue;
      consider(greedy_improve(datum, std::move(V), pool, opts.greedy_rounds));
    }
  return best;
}

AlphaWitness alpha_lower_bound(const BLDatum &datum, int depth, int random_budget, std::uint64_t seed)
{
  AlphaSearchOptions o;
  o.depth = depth;
  o.random_budget = random_budget;
  o.seed = seed;
  return alpha_lower_bound(datum, o);
}

FinitenessVerdict is_finite_blreg(const BLDatum &datum, double tol, const AlphaSearchOptions &opts)
{
  FinitenessVerdict v;
  v.evidence = alpha_lower_bound(datum, opts);
  v.finite = v.evidence.alpha <= tol;
  return v;
}

Eigen::MatrixXd projection_with_kernel(const Subspace &ker)
{
  return complement(ker).basis().transpose();
}

WedgeAlphaReport wedge_alpha_report(const std::vector<Subspace> &kernels, const std::vector<Eigen::MatrixXd> &maps,
                                       double tol, const AlphaSearchOptions &opts)
{
  const std::size_t k = kernels.size();
  require(k >= 2, "wedge_alpha_report: need k >= 2");
  require(maps.size() == k, "wedge_alpha_report: one map per kernel");
  for (std::size_t j = 0; j < k; ++j) {
    const Subspace K = kernel(maps[j], kernels[j].tol());
    if (!same_subspace(K, kernels[j], 1e-8))
      throw PreconditionError("wedge_alpha_report: map " + std::to_string(j) + " does not have the given kernel");
  }
  WedgeAlphaReport r;
  r.wedge = wedge_magnitude(kernels);
  BLDatum datum(maps, std::vector<double>(k, 1.0 / static_cast<double>(k - 1)));
  r.search = alpha_lower_bound(datum, opts);
  r.alpha = r.search.alpha;
  r.agree = (r.wedge > tol) == (r.alpha <= tol);
  return r;
}

KernelConfiguration random_kernel_configuration(int n, int k, KernelConfigKind kind, Rng &rng)
{
  require(n >= 2 && k >= 2 && k <= n, "random_kernel_configuration: need 2 ≤ k ≤ n");
  std::vector<int> dims(static_cast<std::size_t>(k), 1);
  const int target = kind == KernelConfigKind::Oversubscribed ? n + 1 : n;
  require(k * (n - 1) >= target, "random_kernel_configuration: dimensions cannot reach the target");
  int total = k;
  std::uniform_int_distribution<int> pick(0, k - 1);
  while (total < target) {
    // Generic data stop early at random; the oversubscribed kind must reach n + 1.
    if (kind != KernelConfigKind::Oversubscribed && uniform(rng, 0.0, 1.0) < 0.3) break;
    const auto j = static_cast<std::size_t>(pick(rng));
    if (dims[j] >= n - 1) continue;
    ++dims[j];
    ++total;
  }
  std::vector<Eigen::MatrixXd> bases;
  for (int d : dims) bases.push_back(gaussian_matrix(rng, n, d));
  if (kind == KernelConfigKind::Dependent || kind == KernelConfigKind::NearlyDependent) {
    const auto j = static_cast<std::size_t>(pick(rng));
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < bases.size(); ++i)
      if (i != j) v += bases[i] * gaussian_matrix(rng, bases[i].cols(), 1);
    if (kind == KernelConfigKind::NearlyDependent) v += 1e-5 * v.norm() * gaussian_matrix(rng, n, 1);
    bases[j].col(0) = v;
  }
  KernelConfiguration c;
  c.kind = kind;
  for (const auto &B : bases) c.kernels.push_back(orthonormalize(B));
  return c;
}

WedgeAlphaSweep wedge_alpha_sweep(int count, std::uint64_t seed, double tol, const AlphaSearchOptions &opts)
{
  require(count >= 1, "wedge_alpha_sweep: count must be positive");
  static constexpr KernelConfigKind kinds[] = {KernelConfigKind::Generic, KernelConfigKind::Dependent,
                                               KernelConfigKind::NearlyDependent, KernelConfigKind::Oversubscribed};
  WedgeAlphaSweep sw;
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
    const int n = 2 + i % 3;
    const KernelConfigKind kind = kinds[(i / 3) % 4];
    // Σ dim = n + 1 needs k(n − 1) ≥ n + 1; in ℝ² that forces k = 3 > n, so use a dependent pair instead.
    const KernelConfigKind use = kind == KernelConfigKind::Oversubscribed && n == 2 ? KernelConfigKind::Dependent : kind;
    const int kmin = use == KernelConfigKind::Oversubscribed ? (n + 1 + n - 2) / (n - 1) : 2;
    const int k = std::uniform_int_distribution<int>(std::max(2, kmin), n)(rng);
    KernelConfiguration c = random_kernel_configuration(n, k, use, rng);
    std::vector<Eigen::MatrixXd> maps;
    for (const auto &K : c.kernels) maps.push_back(projection_with_kernel(K));
    AlphaSearchOptions o = opts;
    o.seed = derive_seed(opts.seed ^ seed, {static_cast<std::uint64_t>(i), 1});
    WedgeAlphaReport r = wedge_alpha_report(c.kernels, maps, tol, o);
    sw.agreements += r.agree ? 1 : 0;
    sw.configs.push_back(std::move(c));
    sw.reports.push_back(std::move(r));
  }
  return sw;
}

namespace {

// Unit-lattice cubes of [-R,R]^m along one axis: integer left endpoints lo, lo+1, ..., lo+K-1.
struct CubeAxis
{
  long lo = 0;
  long K = 0;
};

CubeAxis cube_axis(double R)
{
  CubeAxis a;
  a.lo = static_cast<long>(std::ceil(-R - 1e-12));
  const long hi = static_cast<long>(std::floor(R + 1e-12));
  a.K = hi - a.lo;
  return a;
}

} // namespace

double blreg_lower_bound(const BLDatum &datum, double R, int iters, std::uint64_t seed, const BLRegOptions &opts)
{
  require(R >= 1.0, "blreg_lower_bound: R must be at least 1");
  require(iters >= 1, "blreg_lower_bound: iters must be positive");
  const Eigen::Index n = datum.ambient_dim();
  const std::size_t k = datum.size();
  const double q = opts.samples_per_unit;
  const double Nd = 2.0 * R * q;
  const long N = std::lround(Nd);
  require(std::abs(Nd - static_cast<double>(N)) < 1e-9, "blreg_lower_bound: 2·R·samples_per_unit must be an integer");
  const double total_d = std::pow(static_cast<double>(N), static_cast<double>(n));
  if (total_d > static_cast<double>(opts.grid_cap)) {
    std::ostringstream os;
    os << "blreg_lower_bound: " << total_d << " quadrature nodes exceed the cap " << opts.grid_cap;
    throw BudgetError(os.str());
  }
  const std::size_t total = static_cast<std::size_t>(total_d);
  const double h = 1.0 / q;
  const double cell = std::pow(h, static_cast<double>(n));
  const CubeAxis ax = cube_axis(R);

  std::vector<std::size_t> cubes(k);
  for (std::size_t j = 0; j < k; ++j) {
    const double c = std::pow(static_cast<double>(ax.K), static_cast<double>(datum.maps()[j].rows()));
    if (c > static_cast<double>(opts.grid_cap)) throw BudgetError("blreg_lower_bound: too many lattice cubes");
    cubes[j] = static_cast<std::size_t>(c);
  }

  // Cube index of L_j x for every node; -1 when L_j x leaves [-R,R]^{n_j}.
  std::vector<std::vector<int>> idx(k, std::vector<int>(total));
  {
    Eigen::VectorXd x(n);
    std::vector<long> digit(static_cast<std::size_t>(n), 0);
    for (std::size_t node = 0; node < total; ++node) {
      std::size_t rest = node;
      for (Eigen::Index i = 0; i < n; ++i) {
        const long d = static_cast<long>(rest % static_cast<std::size_t>(N));
        rest /= static_cast<std::size_t>(N);
        x(i) = -R + (static_cast<double>(d) + 0.5) * h;
      }
      for (std::size_t j = 0; j < k; ++j) {
        const Eigen::VectorXd y = datum.maps()[j] * x;
        long flat = 0;
        long stride = 1;
        bool inside = true;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
          const long c = static_cast<long>(std::floor(y(i))) - ax.lo;
          if (c < 0 || c >= ax.K) {
            inside = false;
            break;
          }
          flat += c * stride;
          stride *= ax.K;
        }
        idx[j][node] = inside ? static_cast<int>(flat) : -1;
      }
    }
  }

  // Nodes hit by each cube, CSR layout.
  std::vector<std::vector<std::size_t>> start(k);
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<std::size_t> count(cubes[j] + 1, 0);
    for (std::size_t node = 0; node < total; ++node)
      if (idx[j][node] >= 0) ++count[static_cast<std::size_t>(idx[j][node]) + 1];
    std::partial_sum(count.begin(), count.end(), count.begin());
    start[j] = count;
    members[j].resize(count.back());
    std::vector<std::size_t> fill(count.begin(), count.end() - 1);
    for (std::size_t node = 0; node < total; ++node)
      if (idx[j][node] >= 0) members[j][fill[static_cast<std::size_t>(idx[j][node])]++] = node;
  }

  const auto &p = datum.exponents();
  std::vector<std::vector<char>> f(k);
  std::vector<long> mass(k, 0);
  std::vector<unsigned char> on(total, 0);
  long full = 0;

  auto ratio = [&]() {
    double den = 1.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (mass[j] == 0) return 0.0;
      den *= std::pow(static_cast<double>(mass[j]), p[j]);
    }
    return cell * static_cast<double>(full) / den;
  };

  auto toggle = [&](std::size_t j, std::size_t c) {
    const bool was = f[j][c] != 0;
    f[j][c] = was ? 0 : 1;
    mass[j] += was ? -1 : 1;
    for (std::size_t t = start[j][c]; t < start[j][c + 1]; ++t) {
      const std::size_t node = members[j][t];
      if (was) {
        if (on[node] == k) --full;
        --on[node];
      } else {
        ++on[node];
        if (on[node] == k) ++full;
      }
    }
  };

  auto load = [&](const std::vector<std::vector<char>> &cfg) {
    for (std::size_t j = 0; j < k; ++j) {
      f[j].assign(cubes[j], 0);
      mass[j] = 0;
    }
    std::fill(on.begin(), on.end(), 0);
    full = 0;
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t c = 0; c < cubes[j]; ++c)
        if (cfg[j][c]) toggle(j, c);
  };

  auto origin_cube = [&](std::size_t j) {
    long flat = 0;
    long stride = 1;
    for (Eigen::Index i = 0; i < datum.maps()[j].rows(); ++i) {
      flat += (0 - ax.lo) * stride;
      stride *= ax.K;
    }
    return static_cast<std::size_t>(flat);
  };

  double best = 0.0;
  for (int restart = 0; restart < iters; ++restart) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(restart)}));
    std::vector<std::vector<char>> cfg(k);
    for (std::size_t j = 0; j < k; ++j) {
      cfg[j].assign(cubes[j], 0);
      if (restart == 0) {
        cfg[j][origin_cube(j)] = 1;
        continue;
      }
      // Random cluster of cubes around the origin cube.
      const long m = datum.maps()[j].rows();
      const long radius = std::uniform_int_distribution<long>(0, std::max<long>(0, ax.K / 4))(rng);
      const double density = uniform(rng, 0.3, 1.0);
      for (std::size_t c = 0; c < cubes[j]; ++c) {
        long rest = static_cast<long>(c);
        bool near = true;
        for (long i = 0; i < m; ++i) {
          const long d = rest % ax.K + ax.lo;
          rest /= ax.K;
          if (d < -radius - 1 || d > radius) near = false;
        }
        if (near && uniform(rng, 0.0, 1.0) < density) cfg[j][c] = 1;
      }
      cfg[j][origin_cube(j)] = 1;
    }
    load(cfg);
    double current = ratio();
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
      bool improved = false;
      for (std::size_t j = 0; j < k; ++j)
        for (std::size_t c = 0; c < cubes[j]; ++c) {
          if (start[j][c] == start[j][c + 1] && !f[j][c]) continue; // cube never reached: only adds mass
          toggle(j, c);
          const double r = ratio();
          if (r > current * (1.0 + 1e-12)) {
            current = r;
            improved = true;
          } else {
            toggle(j, c);
          }
        }
      if (!improved) break;
    }
    best = std::max(best, current);
  }
  return best;
}

WedgeCheckReport quantitative_wedge_check(const std::vector<Subspace> &kernels, double R, int iters, std::uint64_t seed,
                                          const BLRegOptions &opts)
{
  const std::size_t k = kernels.size();
  require(k >= 2, "quantitative_wedge_check: need k >= 2");
  WedgeCheckReport r;
  r.wedge = wedge_magnitude(kernels);
  require(r.wedge > 1e-8, "quantitative_wedge_check: kernels are not transverse (wedge <= tol)");
  std::vector<Eigen::MatrixXd> maps;
  for (const auto &K : kernels) maps.push_back(projection_with_kernel(K));
  BLDatum datum(maps, std::vector<double>(k, 1.0 / static_cast<double>(k - 1)));
  r.predicted = std::pow(r.wedge, -1.0 / static_cast<double>(k - 1));
  r.lower_bound = blreg_lower_bound(datum, R, iters, seed, opts);
  r.ratio = r.lower_bound / r.predicted;
  return r;
}

bool subensemble_monotonicity_check(const std::vector<Eigen::MatrixXd> &parent_maps,
                                    const std::vector<Eigen::MatrixXd> &child_maps, int samples, std::uint64_t seed)
{
  require(parent_maps.size() == child_maps.size() && !parent_maps.empty(),
          "subensemble_monotonicity_check: ensembles differ in size");
  const Eigen::Index n = child_maps.front().cols();
  std::vector<Subspace> gens;
  for (std::size_t j = 0; j < parent_maps.size(); ++j) {
    const auto &P = parent_maps[j];
    const auto &C = child_maps[j];
    require(P.cols() == n && C.cols() == n, "subensemble_monotonicity_check: dimension mismatch");
    Eigen::MatrixXd stacked(C.rows() + P.rows(), n);
    stacked << C, P;
    if (matrix_rank(stacked) != matrix_rank(C))
      throw PreconditionError("subensemble_monotonicity_check: parent map " + std::to_string(j) +
                              " does not factor through the child map");
    gens.push_back(kernel(P));
    gens.push_back(kernel(C));
  }

  auto holds = [&](const Subspace &V) {
    for (std::size_t j = 0; j < parent_maps.size(); ++j)
      if (dim_image(parent_maps[j], V) > dim_image(child_maps[j], V)) return false;
    return true;
  };

  for (const auto &V : kernel_lattice(gens, 2, 128).members)
    if (!holds(V)) return false;
  for (int s = 0; s < samples; ++s) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(s)}));
    const Eigen::Index m = std::uniform_int_distribution<Eigen::Index>(1, n)(rng);
    if (!holds(orthonormalize(gaussian_matrix(rng, n, m)))) return false;
  }
  return true;
}

} // namespace rlab
