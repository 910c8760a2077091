#pragma once

#include "extension.hpp"
#include "nested_family.hpp"

#include <map>
#include <vector>

namespace rlab {

struct PacketCell
{
  Eigen::VectorXd anchor;     // s_θ ∈ U_{ℓ⋆}
  Eigen::VectorXd center;     // u_θ = σ_{ℓ⋆}(s_θ)
  Eigen::MatrixXd shape;      // Λ_θ
  Eigen::MatrixXd shape_inv;  // Λ_θ^{−1}
  double det = 0.0;           // |det Λ_θ|
  Eigen::MatrixXd dsigma;     // ∂σ_{ℓ⋆}(s_θ), d × d⋆
  Eigen::MatrixXd dembed;     // ∂Σ_{ℓ⋆}(s_θ), n × d⋆
};

struct CoverOptions
{
  long max_cells = 200'000;
};

// Θ_{R,μ}: parallelepipeds u_θ + Λ_θ[−1,1]^d anchored on R^{−1/2}ℤ^{d⋆} ∩ 𝔑_{ℓ⋆,r}(μ; 2C∘).
class WavePacketCover
{
public:
  WavePacketCover(const NestedFamily &family, double R, const Eigen::VectorXd &mu, const CoverOptions &opts = {});

  const NestedFamily &family() const { return *family_; }
  double R() const { return R_; }
  const Eigen::VectorXd &mu() const { return mu_; }
  int ell_star() const { return ell_star_; }
  int d_star() const { return family_->dim(ell_star_); }
  const std::vector<PacketCell> &cells() const { return cells_; }

  // Indices of cells θ with |Λ_θ^{−1}(u − u_θ)|_∞ ≤ scale.
  std::vector<int> cells_containing(const Eigen::VectorXd &u, double scale) const;
  // Σ_θ ψ_θ(u).
  double partition_sum(const Eigen::VectorXd &u) const;

private:
  std::vector<long> bucket_of(const Eigen::VectorXd &u) const;

  const NestedFamily *family_;
  double R_;
  Eigen::VectorXd mu_;
  int ell_star_;
  std::vector<PacketCell> cells_;
  double bucket_ = 1.0; // ≥ sup-radius of every 4·θ
  std::map<std::vector<long>, std::vector<int>> index_;
};

// ℓ⋆: the largest ℓ with μ_1, …, μ_ℓ ≤ R^{−1/2}.
int packet_level(double R, const Eigen::VectorXd &mu);

// D_{R^{1/2},μ}.
Eigen::VectorXd packet_scales(const NestedFamily &family, double R, const Eigen::VectorXd &mu, int ell_star);

// Number of θ with u ∈ 4·θ.
int overlap_count(const WavePacketCover &cover, const Eigen::VectorXd &u);

// Points of 𝔑_r(μ) drawn as Φ_r(s; η), s uniform in U_r and η uniform in P_r(μ), kept when the oracle
// confirms membership.
std::vector<Eigen::VectorXd> sample_neighbourhood(const NestedFamily &family, const Eigen::VectorXd &mu, int count,
                                                  std::uint64_t seed);

// u ∈ W: u = Φ_r(s; η) with s ∈ U_r and η inside the validity box.
bool in_tube(const NestedFamily &family, const Eigen::VectorXd &u);

// Samples of 4·θ ∩ W for random θ failing membership of 𝔑_r(C∘²μ).
long support_inflation_check(const WavePacketCover &cover, int samples, std::uint64_t seed);

struct CoverAudit
{
  long cells = 0;
  int ell_star = 0;
  long samples = 0;
  long uncovered = 0;
  int max_overlap = 0;
  int overlap_bound = 0; // 2·3^d
  long inflation_samples = 0;
  long inflation_violations = 0;
};

CoverAudit audit_cover(const WavePacketCover &cover, int samples, std::uint64_t seed);

struct WavePacket
{
  int cell = 0;
  Eigen::VectorXi index;      // m ∈ ℤ^d
  Eigen::VectorXd frequency;  // v = Λ_θ^{−⊤} m
  cplx coefficient;           // c_m in f_{θ,v}(u) = c_m e^{i m·y} ψ̃(y), y = Λ_θ^{−1}(u − u_θ)
};

struct DecomposeOptions
{
  int min_points = 16;       // per axis, powers of two
  int max_points = 256;
  double spectral_tol = 1e-15; // relative energy allowed in the outer half band before refining an axis
  double tail_tol = 1e-14;     // relative energy of the discarded coefficients in each cell
};

struct PacketDecomposition
{
  std::vector<WavePacket> packets;          // grouped by cell, cells in cover order
  std::vector<std::size_t> cell_offsets;     // packets of cell c are [cell_offsets[c], cell_offsets[c+1])
  std::vector<std::vector<int>> grid_points; // per cell, DFT points per axis
  double worst_spectral_tail = 0.0;
};

// f = Σ_{θ,v} f_{θ,v} with f_θ = f·ψ_θ/Σψ and a Fourier series of f_θψ_θ on [−π, π)^d in Λ_θ-coordinates.
PacketDecomposition decompose(const WavePacketCover &cover, const Density &f, const DecomposeOptions &opts = {});

cplx packet_value(const WavePacketCover &cover, const WavePacket &p, const Eigen::VectorXd &u);
// Σ_T f_T(u).
cplx reconstruct(const WavePacketCover &cover, const PacketDecomposition &dec, const Eigen::VectorXd &u);
// ‖f_{θ,v}‖₂².
double packet_energy(const WavePacketCover &cover, const WavePacket &p);

struct ReconstructionReport
{
  double relative_l2 = 0.0;  // ‖f − Σ f_T‖₂ / ‖f‖₂ over the sample points
  double parseval_ratio = 0.0; // Σ‖f_T‖₂² / ‖f‖₂²
  double parseval_lower = 0.0; // κ / overlap
  double parseval_upper = 0.0; // κ = ∫ψ̃²/(2π)^d
  int overlap = 0;
};

// Reconstruction error and the Parseval ratio with its admissible range, by midpoint quadrature on the box.
ReconstructionReport reconstruction_report(const WavePacketCover &cover, const PacketDecomposition &dec, const Density &f,
                                           const Box &box, int points_per_axis);

double default_eps_circ(double eps, int n);

struct PacketSlab
{
  Eigen::MatrixXd normal_map; // ∂Σ_{ℓ⋆}(s_θ)ᵀ, d⋆ × n
  Eigen::VectorXd offset;     // v⋆ = ∂σ_{ℓ⋆}(s_θ)ᵀ v
  double width = 0.0;         // R^{1/2+ε∘}

  bool contains(const Eigen::VectorXd &x) const
  {
    return (normal_map * x + offset).cwiseAbs().maxCoeff() < width;
  }
  // Euclidean distance from x to the core plane {normal_map·x + offset = 0}.
  double distance_to_core(const Eigen::VectorXd &x) const;
};

PacketSlab packet_slab(const WavePacketCover &cover, const WavePacket &p, double eps = 0.1);

struct LocalisationReport
{
  double inside_max = 0.0;
  double outside_max = 0.0;
  int inside_samples = 0;
  int outside_samples = 0;
  double ratio() const { return inside_max > 0 ? outside_max / inside_max : 0.0; }
};

// E_S f_T(x) = |det Λ_θ| ∫_{[−4,4]^d} e^{ix·Σ(u_θ+Λ_θy)} c e^{im·y} ψ̃(y) a(u_θ+Λ_θy) dy.
PreparedExtension packet_extension(const WavePacketCover &cover, const WavePacket &p, const AmplitudeSpec &amp,
                                   double x_bound, const QuadratureSpec &quad = {64, QuadratureRule::Midpoint, true});

// Max |E_S f_T| over sampled x ∈ Q_R inside T and at distance ≥ 4·width from the core plane.
LocalisationReport localisation_decay(const WavePacketCover &cover, const AmplitudeSpec &amp, const WavePacket &p,
                                      int samples, std::uint64_t seed, double eps = 0.1);

} // namespace rlab
