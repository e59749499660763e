#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gla/bath.hpp"
#include "gla/emitters.hpp"
#include "gla/greens.hpp"
#include "gla/types.hpp"

namespace gla {

enum class BSClass { in_gap, in_band, vds, weak_coupling };
const char* to_string(BSClass c);

struct BoundState {
  double omega_bs = 0.0;
  VectorXc photon_amplitudes;  // psi_BS = gbar G_B(omega_BS) |chi>, unnormalized
  double normalization = 1.0;  // 1 / sqrt(1 + <psi|psi>)
  double atom_fraction = 1.0;  // normalization^2
  BSClass classification = BSClass::in_gap;
  double residual = 0.0;       // ||(H - omega_BS) Psi|| for the normalized state
  cplx pole_value;             // F(omega_BS)
  bool perturbative = true;    // gbar within the weak-coupling threshold (weak_coupling only)

  // Normalized state over {e} + bath sites.
  VectorXc assembled() const;
};

// ||(H - omega) Psi|| with the full single-excitation Hamiltonian.
double eigen_residual(const BathGraph& bath, const GiantAtom& atom, const VectorXc& state, double omega);

cplx pole_function(const GiantAtom& atom, const BathResolvent& res, const ResolventQuery& q);

// Every gap of the resolvent's spectrum, with the outer gaps reaching `reach` beyond the band edges.
// Each inner end sits just inside the certified gap region.
std::vector<std::pair<double, double>> gap_windows(const BathResolvent& res, double reach);

// At most one root per gap: F is strictly increasing there, so bisection on a sign change.
std::optional<BoundState> find_ingap_bs(const GiantAtom& atom, const BathResolvent& res,
                                        double lo, double hi);

struct QuasiBound {
  double omega = 0.0;
  double im_self_energy = 0.0;
  cplx pole_value;
  double residual = -1.0;  // < 0 when no wavefunction was assembled
  std::string reason;
};

struct InbandOptions {
  int grid = 400;
  double epsilon = 0.0;  // <= 0 selects the automatic broadening
  double im_tol = -1.0;  // < 0 selects tol::im_tol(epsilon)
  Backend backend = Backend::finite_spectral;
};

struct InbandResult {
  std::vector<BoundState> states;
  std::vector<QuasiBound> near_misses;
  double epsilon = 0.0;
  double im_tol = 0.0;
};

// Scans Im<chi|G_B|chi> for dips below im_tol, solves Re F = 0 next to each dip and accepts
// roots with |F| < 1e-6 J whose assembled state is an eigenstate of H.
InbandResult find_inband_bs(const GiantAtom& atom, const BathResolvent& res, double lo, double hi,
                            const InbandOptions& opts = {});

BoundState bs_wavefunction(const GiantAtom& atom, const BathResolvent& res, const ResolventQuery& q,
                           BSClass classification);

// omega_BS = omega0. Exists when omega0 is in a gap or when gbar^2 |Im Sigma(omega0)| stays
// below the in-band root tolerance (and below im_tol), im_threshold overriding both.
std::optional<BoundState> weak_coupling_bs(const GiantAtom& atom, const BathResolvent& res,
                                           double im_threshold = -1.0);

struct ProjectedBath {
  MatrixXc hamiltonian;  // (n-1) x (n-1)
  MatrixXc basis;        // n x (n-1): site-basis columns spanning the complement of chi
};

ProjectedBath projected_bath(const GiantAtom& atom, const BathGraph& bath);

struct LocalizationReport {
  bool localized = false;
  bool inconclusive = false;
  double boundary_weight = 0.0;
  std::vector<double> shell_weights;  // weight per boundary distance, outermost first
};

LocalizationReport localization_check(const VectorXc& state, const BathGraph& bath,
                                      double tolerance = tol::localization);

struct VDS {
  double energy = 0.0;
  VectorXc psi_vds;        // normalized, site basis
  cplx coupling_overlap;   // <chi|H_B|psi_VDS>
  cplx eta;                // -gbar / coupling_overlap
  double theta = 0.0;
  double phi = 0.0;
  bool degenerate = false;
  std::vector<VectorXc> family;  // orthonormal localized subspace, psi_vds first
  LocalizationReport localization;
  std::vector<double> check_strengths;  // g values re-verified
  std::vector<double> check_residuals;

  double excited_weight() const;   // |<e|Psi_VDS>|^2 = cos^2 theta
  VectorXc dressed_state() const;  // cos theta |e> + e^{i phi} sin theta |psi_VDS>
  // Weak-coupling bound state photon part eta psi_VDS.
  VectorXc weak_coupling_photon() const { return eta * psi_vds; }
};

struct VDSOptions {
  double e_tol = tol::e_tol;
  double c_tol = tol::c_tol;
  double localization_tol = tol::localization;
  std::vector<double> check_strengths{0.05, 0.5, 1.0};
};

std::vector<VDS> vds_search(const GiantAtom& atom, const BathGraph& bath, const VDSOptions& opts = {});

// Rescales the couplings so that the largest |g_l| equals `strength`.
GiantAtom with_strength(const GiantAtom& atom, double strength);

}  // namespace gla
