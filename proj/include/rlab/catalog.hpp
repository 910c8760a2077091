#pragma once

#include "brascamp_lieb.hpp"
#include "nested_family.hpp"

// Reference families used by tests, the acceptance suite and CLI presets.

namespace rlab::catalog {

// Tilted hyperplane Σ₀(u) = (u, b·u) with affine links γ_ℓ(s) = (s, A_ℓ s); n ∈ {3, 4}.
NestedFamily linear_chain(int n, double c_cover);

// Paraboloid Σ₀(u) = (u, |u|²) with coordinate links γ_ℓ(s) = (s, 0), ℓ = 1..n−2.
NestedFamily paraboloid_chain(int n, double c_cover);

// Paraboloid in ℝ³ with the curved link γ₁(s) = (s, s²/2).
NestedFamily curved_chain(double c_cover);

// Flat plane (u, 0) in ℝ³ on a wide domain with the line γ₁(s) = (s, 0).
NestedFamily flat_wide(double c_cover, double radius = 4.0);

// Paraboloid in ℝ³ on a wide domain with the coordinate link.
NestedFamily paraboloid_wide(double c_cover, double radius = 4.0);

// Σ(u) = (u, |u|² + 2u₀·u): the paraboloid recentred at u₀, without nesting.
NestedFamily shifted_paraboloid(const Eigen::VectorXd &u0, double radius, double c_cover);

// Σ(u) = (u, b·u), without nesting.
NestedFamily tilted_plane(const Eigen::VectorXd &b, double radius, double c_cover);

// Paraboloid example in ℝⁿ with 2 ≤ k ≤ n: families j < k are paraboloids recentred at 0.75·e_j, family k is
// the paraboloid with the coordinate chain γ_ℓ(s) = (s, 0), ℓ = 1..n−k. Exponents q = 2/(k−1).
Ensemble paraboloid_example(int n, int k, double c_cover = 1e4);

// Three planes in ℝ³ with independent normals (1,0,−1), (0,1,−1), (−1,−1,−1); q = 1.
Ensemble transverse_planes(double c_cover = 1e4);

// Two copies of the horizontal plane (u, 0) in ℝ³; q = 2. Not a finite datum.
Ensemble coincident_planes(double c_cover = 1e4);

// L_j drops coordinate j of ℝ³, p_j = 1/2.
BLDatum loomis_whitney();
// Two copies of the projection onto e₁ in ℝ², p = (1/2, 1/2); not finite.
BLDatum duplicated_kernel();
// The identity of ℝⁿ with p = 1.
BLDatum identity_datum(int n);

} // namespace rlab::catalog
