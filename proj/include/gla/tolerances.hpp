#pragma once

#include <algorithm>
#include <cstddef>

namespace gla::tol {

// Energies are in units of the hopping rate J.
constexpr double e_tol = 1e-8;             // eigenvalue match against omega0
constexpr double c_tol = 1e-8;             // coupling overlap <chi|H_B|psi>
constexpr double localization = 1e-6;      // boundary-shell weight
constexpr double psd = 1e-8;               // negative gamma eigenvalues tolerated
constexpr double residual = 1e-8;          // eigenstate residual
constexpr double gap_dfh = 1e-8;           // dfh tolerance for gap scenarios
constexpr double inband_dfh_rel = 1e-3;    // dfh tolerance relative to 2 gbar^2 / v
constexpr double hermitian = 1e-12;        // Bloch Hamiltonian hermiticity
constexpr double norm = 1e-12;             // site-state normalization
constexpr double inband_root_f = 1e-6;     // |F| acceptance for in-band roots
constexpr double richardson_rel = 1e-3;    // epsilon vs epsilon/2 agreement
constexpr double gap_margin_bands = 1e-6;  // Bloch-band exclusion margin
constexpr double gap_margin_levels = 5.0;  // finite-lattice exclusion in level spacings
constexpr double bisection = 1e-12;        // gap root bracket width
constexpr double weak_coupling_gbar = 0.1; // weak-coupling validity threshold
constexpr double degeneracy = 1e-8;        // on-shell cluster half-width
constexpr std::size_t dense_limit = 10000;
constexpr double epsilon_levels = 10.0;    // broadening in units of span / n

inline double im_tol(double epsilon) { return std::max(1e-8, 10.0 * epsilon); }

}  // namespace gla::tol
