#pragma once

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "gla/bath.hpp"
#include "gla/emitters.hpp"
#include "gla/types.hpp"

namespace gla {

enum class Backend { finite_spectral, bloch_sum, analytic_chain };

// How omega^+ is realized.
//   broadened:   z = omega + i epsilon
//   richardson:  quadratic extrapolation to epsilon = 0 through epsilon, 3 epsilon/4, epsilon/2;
//                the broadening must stay above ~10 v / L so edge reflections are damped
//   gap:         epsilon = 0, only allowed on a certified gap
//   bound_limit: epsilon -> 0 at fixed lattice size; modes degenerate with omega are
//                dropped, which requires the probed states to have no weight on them
enum class Regularization { broadened, richardson, gap, bound_limit };

const char* to_string(Backend b);
const char* to_string(Regularization r);
Backend backend_from_string(const std::string& s);
Regularization regularization_from_string(const std::string& s);

struct ResolventQuery {
  double omega = 0.0;
  double epsilon = 0.0;  // <= 0 selects the automatic broadening for broadened/richardson
  Backend backend = Backend::finite_spectral;
  Regularization regularization = Regularization::richardson;

  static ResolventQuery gap(double omega, Backend b = Backend::finite_spectral) {
    return {omega, 0.0, b, Regularization::gap};
  }
  static ResolventQuery bound(double omega, Backend b = Backend::finite_spectral) {
    return {omega, 0.0, b, Regularization::bound_limit};
  }
  static ResolventQuery broadened(double omega, double eps = 0.0,
                                  Backend b = Backend::finite_spectral) {
    return {omega, eps, b, Regularization::broadened};
  }
  static ResolventQuery richardson(double omega, double eps = 0.0,
                                   Backend b = Backend::finite_spectral) {
    return {omega, eps, b, Regularization::richardson};
  }
};

struct ResolventValue {
  cplx value;
  double epsilon = 0.0;   // broadening actually used (0 for exact evaluations)
  double change = 0.0;    // distance to the linear extrapolation, for richardson
  bool converged = true;
};

struct SelfEnergySample {
  double omega = 0.0;
  cplx value;  // <chi|G_B(omega^+)|chi>, without the gbar^2 factor
};

struct LDOSCurve {
  std::vector<double> omega_grid;
  std::vector<double> density;
  double integral() const;  // trapezoidal
};

struct CrossLDOSCurve {
  std::vector<double> omega_grid;
  std::vector<cplx> density;
};

// Bath resolvent with its precomputed, read-only backend data.
class BathResolvent {
 public:
  struct Options {
    bool finite = true;     // full eigendecomposition
    bool bloch = false;     // k-sum on the bath's own periodic cell grid
    bool analytic = false;  // infinite-chain closed form (chain lattices only)
    std::size_t dense_limit = tol::dense_limit;
  };

  BathResolvent(BathGraph bath, Options opts);
  static BathResolvent finite(BathGraph bath) { return BathResolvent(std::move(bath), Options{}); }
  static BathResolvent analytic_chain(BathGraph chain) {
    return BathResolvent(std::move(chain), Options{false, false, true});
  }

  const BathGraph& bath() const { return *bath_; }
  const SpectralDecomposition& spectrum() const;
  const BandStructure& bands() const;
  bool has(Backend b) const;
  // finite spectrum, then Bloch sum, then the analytic chain
  Backend preferred_backend() const;

  double automatic_epsilon(Backend b) const;
  // omega farther than 5 level spacings from every finite eigenvalue and
  // outside every Bloch band by 1e-6 (for whichever data is available).
  bool in_gap(double omega) const;
  // Closed energy intervals covered by the bands.
  std::vector<std::pair<double, double>> band_intervals() const;

  ResolventValue evaluate(const SparseState& a, const SparseState& b, const ResolventQuery& q) const;
  cplx between(const SparseState& a, const SparseState& b, const ResolventQuery& q) const {
    return evaluate(a, b, q).value;
  }
  cplx element(int x, int x2, const ResolventQuery& q) const;
  // G_B(omega^+)|b> on every site (finite and Bloch backends).
  VectorXc apply(const SparseState& b, const ResolventQuery& q) const;
  // Raw evaluation at complex z (no regularization logic).
  cplx between_z(const SparseState& a, const SparseState& b, cplx z, Backend backend) const;
  MatrixXc matrix_z(cplx z) const;  // finite backend

  // Total weight of |b> on modes within the degeneracy window of omega.
  double on_shell_weight(const SparseState& b, double omega) const;

 private:
  VectorXc project(const SparseState& s) const;                  // V^dagger s
  std::vector<VectorXc> project_bloch(const SparseState& s) const;  // per k: band amplitudes
  std::shared_ptr<const BathGraph> bath_;
  std::shared_ptr<const SpectralDecomposition> spectrum_;
  std::shared_ptr<const BandStructure> bands_;
  std::vector<std::pair<double, double>> band_edges_;
  bool analytic_ = false;
};

// Infinite chain with -J bonds: in-band closed form, error outside the band.
cplx bath_green_chain_analytic(int n, int n2, double omega, double J, double omega_c = 0.0);
// Infinite chain at complex z (retarded branch on the real axis).
cplx chain_green(int n, int n2, cplx z, double J, double omega_c = 0.0);

cplx bath_green_element(const BathResolvent& res, int x, int x2, const ResolventQuery& q);
SelfEnergySample self_energy(const GiantAtom& atom, const BathResolvent& res, const ResolventQuery& q);
cplx cross_green(const SiteState& chi_j, const SiteState& chi_j2, const BathResolvent& res,
                 const ResolventQuery& q);

// <x = (R, beta)|phi_nk>, normalized over the k grid.
std::vector<VectorXc> bloch_overlaps(const SiteState& chi, const BathGraph& bath,
                                     const BandStructure& bands);
double default_kernel_width(const BandStructure& bands);
LDOSCurve ldos(const SiteState& chi, const BathGraph& bath, const BandStructure& bands,
               const std::vector<double>& omega_grid, double kernel_width);
CrossLDOSCurve cross_ldos(const SiteState& chi_j, const SiteState& chi_j2, const BathGraph& bath,
                          const BandStructure& bands, const std::vector<double>& omega_grid,
                          double kernel_width);

// Gaussian-broadened cross density sum_nk <a|phi_nk><phi_nk|b> delta(omega - omega_nk).
class SpectralDensity {
 public:
  SpectralDensity(const SiteState& a, const SiteState& b, const BathGraph& bath,
                  const BandStructure& bands, double width);
  cplx operator()(double omega) const;
  // PV of int rho(w') / (omega - w') dw' over the broadened band range.
  cplx principal_value(double omega) const;
  double width() const { return width_; }

 private:
  std::vector<double> energies_;
  std::vector<cplx> weights_;
  double width_ = 0.0;
  double lo_ = 0.0;
  double hi_ = 0.0;
};

// Principal value of int rho(w') / (omega - w') dw' by the midpoint rule on a grid
// centred on omega; the singular bin is treated with rho locally linear.
template <class Density>
cplx principal_value(const Density& rho, double omega, double lo, double hi, double step);

// (PV integral, -pi rho(omega)) from the Bloch LDOS.
std::pair<double, double> self_energy_re_im(const GiantAtom& atom, const BathGraph& bath,
                                            const BandStructure& bands, double omega,
                                            double kernel_width = 0.0);

struct TotalGreen {
  MatrixXc bath_green;  // G_B(z)
  VectorXc psi;         // |Psi(z)> over {e} + sites
  cplx F;
  double gbar = 0.0;
  SiteState chi;
  MatrixXc assembled() const;  // (z - H)^-1 over {e} + sites
};

TotalGreen total_green(const BathResolvent& res, const GiantAtom& atom, cplx z);

// Equally spaced grid [lo, hi] with `count` points.
std::vector<double> linspace(double lo, double hi, int count);

// Implementation of the template.
template <class Density>
cplx principal_value(const Density& rho, double omega, double lo, double hi, double step) {
  const int below = static_cast<int>(std::ceil((omega - lo) / step));
  const int above = static_cast<int>(std::ceil((hi - omega) / step));
  cplx sum = 0.0;
  for (int i = -below; i <= above; ++i) {
    if (i == 0) continue;
    const double w = omega + i * step;
    sum += rho(w) * step / (omega - w);
  }
  const cplx slope = (rho(omega + step) - rho(omega - step)) / (2.0 * step);
  return sum - slope * step;
}

}  // namespace gla
