#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gla/bath.hpp"
#include "gla/boundstates.hpp"
#include "gla/emitters.hpp"
#include "gla/greens.hpp"

namespace gla {

struct RateMatrices {
  MatrixXc K;      // coherent couplings (omega0 not included)
  MatrixXc gamma;  // collective dissipation
  MatrixXc B;      // B_jj' = i gbar_j gbar_j' <chi_j|G_B(omega0^+)|chi_j'>
  double omega0 = 0.0;
  std::vector<double> gbars;
  bool nonuniform_gbar = false;   // rates use gbar_j gbar_j' (extension beyond equal strengths)
  double min_gamma_eigenvalue = 0.0;
  bool gamma_psd = true;          // min eigenvalue >= -psd tolerance
  bool converged = true;          // every resolvent element passed its epsilon check
  double change = 0.0;            // largest convergence diagnostic among the elements

  int size() const { return static_cast<int>(K.rows()); }
  // K = (B - B^dagger) / 2i, gamma = B + B^dagger.
  static RateMatrices from_b(const MatrixXc& b);
};

// Element regularization used for <chi_j|G_B|chi_j'>; omega is overwritten with omega0.
RateMatrices rates_green(const EmitterEnsemble& ensemble, const BathResolvent& res, ResolventQuery query);
// Richardson-extrapolated retarded limit on the resolvent's preferred backend.
RateMatrices rates_green(const EmitterEnsemble& ensemble, const BathResolvent& res);

// From the cross-LDOS of a Bloch grid: gamma = 2 pi gbar gbar rho(omega0), K from the PV integral.
// Throws convergence when doubling the kernel width moves the result by more than 5%.
RateMatrices rates_spectral(const EmitterEnsemble& ensemble, const BathGraph& bath,
                            const BandStructure& bands, double kernel_width = 0.0);

struct DFHReport {
  bool is_dfh = false;
  double dfh_tol = 0.0;
  double max_gamma_eigenvalue = 0.0;
  double gamma_uncertainty = 0.0;   // eigenvalue bound from the rate convergence diagnostic
  bool resolution_limited = false;  // the uncertainty exceeds dfh_tol and replaces it
  std::vector<bool> per_atom_bs_exists;
  std::vector<std::optional<BoundState>> bound_states;
  MatrixXc K_effective;
  std::vector<std::pair<int, int>> zero_interaction_pairs;  // 0-based
  bool consistent = true;  // the gamma and per-atom bound-state criteria agree
};

// Gap energies use 1e-8 J; in-band energies use 1e-3 gbar^2 / J.
double dfh_tolerance(const EmitterEnsemble& ensemble, const BathResolvent& res);
// Gamma eigenvalues are compared with max(dfh_tol, rate uncertainty); im_tol_scale rescales the
// per-atom bound-state threshold.
DFHReport dfh_check(const RateMatrices& rates, const EmitterEnsemble& ensemble, const BathResolvent& res,
                    double im_tol_scale = 1.0);

struct HeffResult {
  MatrixXc K;
  double reciprocity_error = 0.0;  // max |<chi_j|psi^j'> - conj(<chi_j'|psi^j>)|
};

HeffResult heff_from_bs(const EmitterEnsemble& ensemble,
                        const std::vector<std::optional<BoundState>>& bound_states);

struct DensityTrajectory {
  std::vector<double> times;
  std::vector<MatrixXc> states;  // 2^Na x 2^Na, bit j set = atom j excited
  std::vector<std::vector<double>> populations;
  std::vector<double> trace;
  std::vector<double> min_eigenvalue;
  double frame_omega0 = 0.0;  // rotating-frame frequency removed from the dynamics
  double step = 0.0;          // accepted integration step
  bool gamma_psd = true;
};

struct LindbladOptions {
  double accept_tol = 1e-8;
  double step_factor = 0.01;
  int max_halvings = 12;
};

DensityTrajectory lindblad_evolve(const MatrixXc& rho0, const RateMatrices& rates, double omega0,
                                  const std::vector<double>& t_grid, const LindbladOptions& opts = {});

// Density matrix with atom `j` excited and the rest in the ground state.
MatrixXc single_excitation_density(int n_atoms, int j);

struct AmplitudeTrajectory {
  std::vector<double> times;
  std::vector<VectorXc> states;  // emitters first, then bath sites
  std::vector<VectorXc> emitter_amplitudes;
  double horizon = 0.0;          // boundary distance over the largest hopping row sum
  bool horizon_violated = false;
  std::string warning;
};

AmplitudeTrajectory exact_1ex_evolve(const BathGraph& bath, const EmitterEnsemble& ensemble,
                                     const VectorXc& initial, const std::vector<double>& t_grid);

struct BraidedRates {
  double K12 = 0.0;
  double gamma12 = 0.0;
  double gamma11 = 0.0;
};

// Two chain atoms, couplings (gbar cos theta, gbar sin theta) at (0, d) and (x21, x21 + d).
BraidedRates braided_rates_closed_form(double theta, double k0, int d, int x21, double gbar, double J);
// Single chain atom with couplings (gbar cos theta, gbar sin theta) at separation d.
double chain_decay_closed_form(double theta, double k0, int d, double gbar, double J);

}  // namespace gla
