#pragma once

#include "nested_family.hpp"
#include "quadrature.hpp"

#include <complex>
#include <functional>
#include <optional>

namespace rlab {

using cplx = std::complex<double>;

struct AmplitudeSpec
{
  enum class Kind { SmoothBump, Indicator };
  Kind kind = Kind::SmoothBump;
  Eigen::VectorXd center;
  double radius = 0.5;
  // Width of the transition layer; a width ≥ radius gives the full bump exp(1 − 1/(1 − t²)) per axis.
  double smoothness_width = 1.0;

  double operator()(const Eigen::VectorXd &u) const;
  Box support() const { return Box::cube(center, radius); }
};

// Complex density, optionally with a box known to contain its support.
struct Density
{
  std::function<cplx(const Eigen::VectorXd &)> fn;
  std::optional<Box> support;

  cplx operator()(const Eigen::VectorXd &u) const { return fn(u); }
};

// Samples of a density on a tensor grid of a box, read back by multilinear interpolation.
class GridDensity
{
public:
  GridDensity(const Box &box, std::vector<int> counts, const Density &f);
  cplx operator()(const Eigen::VectorXd &u) const;
  Density as_density() const;

private:
  Box box_;
  std::vector<int> counts_;
  Eigen::VectorXcd values_;
};

using SurfaceMap = std::function<Eigen::VectorXd(const Eigen::VectorXd &)>;

// Σ_j w_j e^{i x·p_j}: the quadrature of an extension integral with everything except the
// phase folded into the complex weights.
class PreparedExtension
{
public:
  PreparedExtension() = default;
  PreparedExtension(Eigen::MatrixXd points, Eigen::VectorXcd weights);

  cplx operator()(const Eigen::VectorXd &x) const;
  const Eigen::MatrixXd &points() const { return points_; }
  const Eigen::VectorXcd &weights() const { return weights_; }
  std::size_t size() const { return static_cast<std::size_t>(weights_.size()); }

private:
  Eigen::MatrixXd points_;
  Eigen::VectorXcd weights_;
};

// Per-axis node counts meeting M ≥ 4·|x|·sup|∂_iΣ|·h_i/π on the box (h_i the half-width).
std::vector<int> resolve_counts(const SurfaceMap &surface, const Box &box, double x_bound, const QuadratureSpec &quad);

// Nodes and weights f·a·w for ∫_box e^{ix·Σ(u)} f(u) a(u) du, valid for |x| ≤ x_bound.
PreparedExtension prepare_extension(const SurfaceMap &surface, const std::function<double(const Eigen::VectorXd &)> &amp,
                                    const Density &f, const Box &box, double x_bound, const QuadratureSpec &quad);

struct ExtensionValue
{
  cplx value;
  double error_estimate = 0.0;
};

ExtensionValue extend(const PolyGraphParam &param, const AmplitudeSpec &amp, const Density &f, const Eigen::VectorXd &x,
                      const QuadratureSpec &quad = {});

// Integration box for f·a: the amplitude box, cut down to the density's support box when known.
Box extension_box(const PolyGraphParam &param, const AmplitudeSpec &amp, const Density &f);

struct SliceOptions
{
  QuadratureSpec s_quad{128, QuadratureRule::Midpoint, true};
  QuadratureSpec eta_quad{96, QuadratureRule::Midpoint, false};
  double x_bound = 0.0;   // largest |x| the evaluator must resolve; 0 selects 8·√n
  int support_probe = 32; // probe nodes per axis for the support precondition
};

// The slice formula E_S f(x) = C ∫_P e^{ix·ΣΦ(0;η)} E_{S_ℓ(η)} f_{ℓ,η}(x) dη on a tensor grid in η.
class SliceDecomposition
{
public:
  struct Slice
  {
    Eigen::VectorXd eta;
    double eta_weight = 0.0;
    Eigen::VectorXd offset; // Σ∘Φ_ℓ(0; η)
    PreparedExtension inner;
  };

  cplx evaluate(const Eigen::VectorXd &x) const;

  const std::vector<Slice> &slices() const { return slices_; }
  double normalisation() const { return C_; }
  Box s_box() const { return s_box_; }

  // f_{ℓ,η}(s) = f∘Φ_ℓ(s;η), a_{ℓ,η}(s) = a∘Φ_ℓ(s;η)·|det DΦ_ℓ(s;η)|/C, Σ_{ℓ,η}(s) = ΣΦ_ℓ(s;η) − ΣΦ_ℓ(0;η).
  cplx slice_density(const Eigen::VectorXd &eta, const Eigen::VectorXd &s) const;
  double slice_amplitude(const Eigen::VectorXd &eta, const Eigen::VectorXd &s) const;
  Eigen::VectorXd slice_surface(const Eigen::VectorXd &eta, const Eigen::VectorXd &s) const;

private:
  friend SliceDecomposition slice_decompose(const NestedFamily &, int, const AmplitudeSpec &, const Density &,
                                            const Eigen::VectorXd &, const SliceOptions &);
  const NestedFamily *family_ = nullptr;
  int l_ = 0;
  AmplitudeSpec amp_;
  Density f_;
  double C_ = 1.0;
  Box s_box_;
  std::vector<Slice> slices_;
};

// The family must outlive the returned decomposition.
SliceDecomposition slice_decompose(const NestedFamily &family, int l, const AmplitudeSpec &amp, const Density &f,
                                   const Eigen::VectorXd &mu, const SliceOptions &opts = {});

// |det DΦ_ℓ(s;η)| with respect to (s, η).
double phi_jacobian_det(const NestedFamily &family, int l, const Eigen::VectorXd &s, const Eigen::VectorXd &eta);

struct LocalConstancyOptions
{
  int x_samples = 8;
  int eta_samples = 4;
  std::uint64_t seed = 0;
  QuadratureSpec s_quad{48, QuadratureRule::Midpoint, true};
};

struct LocalConstancyReport
{
  std::vector<double> errors; // index N = truncation order
  double C = 0.0;             // 4·sup R|ℰ| over the sampled support
};

// max over sampled x ∈ Q_R, η ∈ P_ℓ(μ) of |E_{S_ℓ(η)}g(x) − Σ_{|α|≤N} B_α(x) E_{S_ℓ}[a_η^α g](x)| for N = 0..order.
LocalConstancyReport local_constancy_error(const NestedFamily &family, int l, const Density &g, const AmplitudeSpec &amp,
                                           double R, const Eigen::VectorXd &mu, int order,
                                           const LocalConstancyOptions &opts = {});

} // namespace rlab
