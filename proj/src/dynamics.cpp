#include "gla/dynamics.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <sstream>

#include <Eigen/Sparse>

namespace gla {

RateMatrices RateMatrices::from_b(const MatrixXc& b) {
  RateMatrices r;
  r.B = b;
  r.K = (b - b.adjoint()) / (2.0 * kI);
  r.gamma = b + b.adjoint();
  if (b.rows() > 0) {
    Eigen::SelfAdjointEigenSolver<MatrixXc> es(r.gamma, Eigen::EigenvaluesOnly);
    r.min_gamma_eigenvalue = es.eigenvalues()(0);
  }
  r.gamma_psd = r.min_gamma_eigenvalue >= -tol::psd;
  return r;
}

namespace {

double uniform_omega0(const EmitterEnsemble& ensemble) {
  if (ensemble.atoms.empty()) throw Error(ErrorKind::invalid_argument, "empty emitter ensemble");
  if (!ensemble.uniform_omega0(1e-12))
    throw Error(ErrorKind::unsupported_configuration, "rate matrices need a common omega0");
  return ensemble.atoms.front().omega0;
}

}  // namespace

RateMatrices rates_green(const EmitterEnsemble& ensemble, const BathResolvent& res, ResolventQuery query) {
  ensemble.validate(res.bath());
  const double w0 = uniform_omega0(ensemble);
  const int na = ensemble.size();
  query.omega = w0;
  std::vector<SiteState> chis;
  std::vector<double> gbars;
  for (const auto& a : ensemble.atoms) {
    chis.push_back(site_state(a));
    gbars.push_back(effective_strength(a));
  }
  MatrixXc b(na, na);
  bool converged = true;
  double change = 0.0;
  for (int j = 0; j < na; ++j)
    for (int k = 0; k < na; ++k) {
      const ResolventValue v = res.evaluate(chis[j], chis[k], query);
      b(j, k) = kI * gbars[j] * gbars[k] * v.value;
      converged = converged && v.converged;
      change = std::max(change, gbars[j] * gbars[k] * v.change);
    }
  RateMatrices r = RateMatrices::from_b(b);
  r.omega0 = w0;
  r.gbars = gbars;
  r.nonuniform_gbar = !ensemble.uniform_gbar();
  r.converged = converged;
  r.change = change;
  return r;
}

RateMatrices rates_green(const EmitterEnsemble& ensemble, const BathResolvent& res) {
  return rates_green(ensemble, res, ResolventQuery::richardson(0.0, 0.0, res.preferred_backend()));
}

RateMatrices rates_spectral(const EmitterEnsemble& ensemble, const BathGraph& bath,
                            const BandStructure& bands, double kernel_width) {
  ensemble.validate(bath);
  const double w0 = uniform_omega0(ensemble);
  const int na = ensemble.size();
  const double width = kernel_width > 0.0 ? kernel_width : default_kernel_width(bands);
  std::vector<SiteState> chis;
  std::vector<double> gbars;
  for (const auto& a : ensemble.atoms) {
    chis.push_back(site_state(a));
    gbars.push_back(effective_strength(a));
  }
  auto evaluate = [&](double sigma) {
    MatrixXc b(na, na);
    for (int j = 0; j < na; ++j)
      for (int k = 0; k < na; ++k) {
        const SpectralDensity rho(chis[j], chis[k], bath, bands, sigma);
        // G = PV - i pi rho, B = i gbar gbar G
        b(j, k) = kI * gbars[j] * gbars[k] * (rho.principal_value(w0) - kI * kPi * rho(w0));
      }
    return b;
  };
  const MatrixXc b1 = evaluate(width);
  const MatrixXc b2 = evaluate(2.0 * width);
  RateMatrices r = RateMatrices::from_b(b1);
  r.omega0 = w0;
  r.gbars = gbars;
  r.nonuniform_gbar = !ensemble.uniform_gbar();
  r.change = (b1 - b2).cwiseAbs().maxCoeff();
  const double scale = std::max(b1.cwiseAbs().maxCoeff(), 1e-3 * gbars[0] * gbars[0] / bath.hopping_scale);
  r.converged = r.change <= 0.05 * scale;
  if (!r.converged) {
    std::ostringstream os;
    os << "cross-LDOS rates moved by " << r.change << " when the kernel width doubled";
    throw Error(ErrorKind::convergence, os.str());
  }
  return r;
}

double dfh_tolerance(const EmitterEnsemble& ensemble, const BathResolvent& res) {
  const double w0 = uniform_omega0(ensemble);
  const double J = res.bath().hopping_scale;
  if (res.in_gap(w0)) return tol::gap_dfh * J;
  double g2 = 0.0;
  for (const auto& a : ensemble.atoms) g2 = std::max(g2, std::pow(effective_strength(a), 2));
  return tol::inband_dfh_rel * g2 / J;
}

DFHReport dfh_check(const RateMatrices& rates, const EmitterEnsemble& ensemble, const BathResolvent& res,
                    double im_tol_scale) {
  DFHReport rep;
  const int na = ensemble.size();
  rep.dfh_tol = dfh_tolerance(ensemble, res);
  // |delta lambda| <= ||delta gamma||_2 <= na max |delta gamma_jk| <= 2 na max |delta B_jk|
  rep.gamma_uncertainty = 2.0 * na * rates.change;
  rep.resolution_limited = rep.gamma_uncertainty > rep.dfh_tol;
  const double threshold = std::max(rep.dfh_tol, rep.gamma_uncertainty);
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(rates.gamma, Eigen::EigenvaluesOnly);
  rep.max_gamma_eigenvalue = es.eigenvalues()(na - 1);
  rep.is_dfh = rep.max_gamma_eigenvalue <= threshold;
  rep.K_effective = rates.K;
  bool all = true;
  for (const auto& atom : ensemble.atoms) {
    const double gbar = effective_strength(atom);
    // gamma_jj = -2 gbar^2 Im Sigma_jj, so this threshold matches the gamma criterion
    auto bs = weak_coupling_bs(atom, res, im_tol_scale * threshold / (2.0 * gbar * gbar));
    rep.per_atom_bs_exists.push_back(bs.has_value());
    all = all && bs.has_value();
    rep.bound_states.push_back(std::move(bs));
  }
  rep.consistent = all == rep.is_dfh;
  // Sufficient condition for K_jj' = 0: one bound state vanishes on every coupling point of the other.
  for (int j = 0; j < na; ++j)
    for (int k = j + 1; k < na; ++k) {
      if (!rep.bound_states[j] || !rep.bound_states[k]) continue;
      auto vanishes_on = [&](const BoundState& bs, const GiantAtom& other) {
        const double scale = std::max(bs.photon_amplitudes.cwiseAbs().maxCoeff(), 1e-300);
        for (const auto& c : other.couplings)
          if (std::abs(bs.photon_amplitudes(c.site)) > 1e-8 * scale) return false;
        return true;
      };
      if (vanishes_on(*rep.bound_states[j], ensemble.atoms[k]) ||
          vanishes_on(*rep.bound_states[k], ensemble.atoms[j]))
        rep.zero_interaction_pairs.emplace_back(j, k);
    }
  return rep;
}

HeffResult heff_from_bs(const EmitterEnsemble& ensemble,
                        const std::vector<std::optional<BoundState>>& bound_states) {
  const int na = ensemble.size();
  if (static_cast<int>(bound_states.size()) != na)
    throw Error(ErrorKind::invalid_argument, "one bound state per atom is required");
  for (int j = 0; j < na; ++j)
    if (!bound_states[j]) {
      std::ostringstream os;
      os << "atom " << j + 1 << " seeds no weak-coupling bound state";
      throw Error(ErrorKind::not_decoherence_free, os.str());
    }
  MatrixXc overlap(na, na);  // <chi_j|psi^j'>
  for (int j = 0; j < na; ++j) {
    const SiteState chi = site_state(ensemble.atoms[j]);
    for (int k = 0; k < na; ++k) {
      cplx s = 0.0;
      for (std::size_t l = 0; l < chi.size(); ++l)
        s += std::conj(chi.amps[l]) * bound_states[k]->photon_amplitudes(chi.sites[l]);
      overlap(j, k) = s;
    }
  }
  HeffResult out;
  out.K.resize(na, na);
  for (int j = 0; j < na; ++j)
    for (int k = 0; k < na; ++k) out.K(j, k) = effective_strength(ensemble.atoms[j]) * overlap(j, k);
  out.reciprocity_error = (overlap - overlap.adjoint()).cwiseAbs().maxCoeff();
  return out;
}

MatrixXc single_excitation_density(int n_atoms, int j) {
  const int dim = 1 << n_atoms;
  MatrixXc rho = MatrixXc::Zero(dim, dim);
  rho(1 << j, 1 << j) = 1.0;
  return rho;
}

namespace {

struct Generator {
  int na = 0;
  int dim = 0;
  Eigen::SparseMatrix<cplx> h_nh;  // H_eff - (i/2) sum gamma_jj' s_j^+ s_j'^-
  MatrixXc gamma;

  // sum_jj' gamma_jj' s_j'^- rho s_j^+
  MatrixXc jump(const MatrixXc& rho) const {
    MatrixXc out = MatrixXc::Zero(dim, dim);
    for (int j = 0; j < na; ++j)
      for (int k = 0; k < na; ++k) {
        const cplx g = gamma(j, k);
        if (g == cplx(0.0)) continue;
        const int bk = 1 << k, bj = 1 << j;
        for (int a = 0; a < dim; ++a) {
          if (!(a & bk)) continue;
          for (int b = 0; b < dim; ++b)
            if (b & bj) out(a ^ bk, b ^ bj) += g * rho(a, b);
        }
      }
    return out;
  }

  MatrixXc operator()(const MatrixXc& rho) const {
    const MatrixXc hr = h_nh * rho;
    return -kI * (hr - hr.adjoint()) + jump(rho);
  }
};

MatrixXc rk4_steps(const Generator& gen, MatrixXc rho, double dt, int steps) {
  for (int s = 0; s < steps; ++s) {
    const MatrixXc k1 = gen(rho);
    const MatrixXc k2 = gen(rho + 0.5 * dt * k1);
    const MatrixXc k3 = gen(rho + 0.5 * dt * k2);
    const MatrixXc k4 = gen(rho + dt * k3);
    rho += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return rho;
}

void validate_density(const MatrixXc& rho, int dim) {
  if (rho.rows() != dim || rho.cols() != dim)
    throw Error(ErrorKind::invalid_state, "density matrix dimension must be 2^Na");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
    throw Error(ErrorKind::invalid_state, "density matrix is not Hermitian");
  if (std::abs(rho.trace() - 1.0) > 1e-8) throw Error(ErrorKind::invalid_state, "density matrix trace is not 1");
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(rho, Eigen::EigenvaluesOnly);
  if (es.eigenvalues()(0) < -1e-8) throw Error(ErrorKind::invalid_state, "density matrix is not positive");
}

}  // namespace

DensityTrajectory lindblad_evolve(const MatrixXc& rho0, const RateMatrices& rates, double omega0,
                                  const std::vector<double>& t_grid, const LindbladOptions& opts) {
  const int na = rates.size();
  if (na < 1 || na > 10) throw Error(ErrorKind::invalid_argument, "Lindblad integration supports 1 to 10 atoms");
  const int dim = 1 << na;
  validate_density(rho0, dim);
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) throw Error(ErrorKind::invalid_argument, "time grid must increase");

  Generator gen;
  gen.na = na;
  gen.dim = dim;
  gen.gamma = rates.gamma;
  std::vector<Eigen::Triplet<cplx>> trip;
  for (int s = 0; s < dim; ++s)
    for (int j = 0; j < na; ++j)
      for (int k = 0; k < na; ++k) {
        // s_j^+ s_k^- moves the excitation from k to j
        if (!(s & (1 << k))) continue;
        const int t = s ^ (1 << k);
        if (t & (1 << j)) continue;
        const cplx amp = rates.K(j, k) - 0.5 * kI * rates.gamma(j, k);
        if (amp != cplx(0.0)) trip.emplace_back(t | (1 << j), s, amp);
      }
  gen.h_nh.resize(dim, dim);
  gen.h_nh.setFromTriplets(trip.begin(), trip.end());

  DensityTrajectory out;
  out.frame_omega0 = omega0;
  out.gamma_psd = rates.gamma_psd;
  Eigen::SelfAdjointEigenSolver<MatrixXc> ek(rates.K, Eigen::EigenvaluesOnly), eg(rates.gamma, Eigen::EigenvaluesOnly);
  const double scale = na * std::max(ek.eigenvalues().cwiseAbs().maxCoeff(), eg.eigenvalues().cwiseAbs().maxCoeff());
  double dt = scale > 0.0 ? opts.step_factor / scale : INFINITY;

  auto record = [&](double t, const MatrixXc& rho) {
    out.times.push_back(t);
    out.states.push_back(rho);
    std::vector<double> pops(na, 0.0);
    for (int s = 0; s < dim; ++s)
      for (int j = 0; j < na; ++j)
        if (s & (1 << j)) pops[j] += rho(s, s).real();
    out.populations.push_back(pops);
    out.trace.push_back(rho.trace().real());
    Eigen::SelfAdjointEigenSolver<MatrixXc> es(rho, Eigen::EigenvaluesOnly);
    out.min_eigenvalue.push_back(es.eigenvalues()(0));
  };

  MatrixXc rho = rho0;
  double t = t_grid.empty() ? 0.0 : t_grid.front();
  for (double target : t_grid) {
    const double span = target - t;
    if (span > 0.0 && std::isfinite(dt)) {
      for (int halving = 0;; ++halving) {
        const int steps = std::max(1, static_cast<int>(std::ceil(span / dt)));
        const double h = span / steps;
        const MatrixXc coarse = rk4_steps(gen, rho, h, steps);
        const MatrixXc fine = rk4_steps(gen, rho, 0.5 * h, 2 * steps);
        if ((coarse - fine).cwiseAbs().maxCoeff() <= opts.accept_tol || halving >= opts.max_halvings) {
          rho = fine;
          break;
        }
        dt *= 0.5;
      }
    }
    t = target;
    record(t, rho);
  }
  out.step = dt;
  return out;
}

AmplitudeTrajectory exact_1ex_evolve(const BathGraph& bath, const EmitterEnsemble& ensemble,
                                     const VectorXc& initial, const std::vector<double>& t_grid) {
  ensemble.validate(bath);
  const int na = ensemble.size();
  const int n = bath.n_sites();
  if (initial.size() != na + n) throw Error(ErrorKind::invalid_argument, "initial state must cover emitters and sites");
  const SpectralDecomposition sd = diagonalize_hermitian(total_hamiltonian_1ex(bath, ensemble));
  const VectorXc coeff = sd.eigenvectors.adjoint() * initial;

  AmplitudeTrajectory out;
  const auto dist = boundary_distance(bath);
  int dmin = INT_MAX;
  for (const auto& a : ensemble.atoms)
    for (const auto& c : a.couplings) dmin = std::min(dmin, dist[c.site]);
  std::vector<double> row(n, 0.0);
  for (const auto& h : bath.hoppings) {
    row[h.from] += std::abs(h.amp);
    row[h.to] += std::abs(h.amp);
  }
  const double vmax = *std::max_element(row.begin(), row.end());
  out.horizon = (dmin == INT_MAX || vmax == 0.0) ? INFINITY : dmin / vmax;
  const double tmax = t_grid.empty() ? 0.0 : *std::max_element(t_grid.begin(), t_grid.end());
  if (tmax > out.horizon) {
    out.horizon_violated = true;
    std::ostringstream os;
    os << "t_max = " << tmax << " exceeds the reflection horizon " << out.horizon
       << "; boundary echoes may return to the emitters";
    out.warning = os.str();
  }
  for (double t : t_grid) {
    VectorXc phase(sd.size());
    for (int m = 0; m < sd.size(); ++m) phase(m) = std::exp(-kI * sd.eigenvalues(m) * t) * coeff(m);
    VectorXc psi = sd.eigenvectors * phase;
    out.times.push_back(t);
    out.emitter_amplitudes.push_back(psi.head(na));
    out.states.push_back(std::move(psi));
  }
  return out;
}

namespace {

void check_chain_domain(double theta, double k0) {
  if (!(theta >= 0.0 && theta <= kPi / 2)) throw Error(ErrorKind::invalid_argument, "theta must lie in [0, pi/2]");
  if (!(k0 > 0.0 && k0 < kPi)) throw Error(ErrorKind::invalid_argument, "k0 must lie in (0, pi)");
}

}  // namespace

double chain_decay_closed_form(double theta, double k0, int d, double gbar, double J) {
  check_chain_domain(theta, k0);
  if (d < 1) throw Error(ErrorKind::invalid_argument, "separation must be positive");
  const double v = 2.0 * J * std::sin(k0);
  return 2.0 * gbar * gbar / v * (1.0 + std::sin(2.0 * theta) * std::cos(k0 * d));
}

BraidedRates braided_rates_closed_form(double theta, double k0, int d, int x21, double gbar, double J) {
  check_chain_domain(theta, k0);
  if (!(x21 > 0 && x21 < d)) throw Error(ErrorKind::invalid_argument, "braided geometry needs 0 < x21 < d");
  const double v = 2.0 * J * std::sin(k0);
  const double s2 = std::sin(2.0 * theta);
  BraidedRates r;
  r.K12 = gbar * gbar / v * (std::sin(k0 * x21) + s2 * std::sin(k0 * d) * std::cos(k0 * x21));
  r.gamma12 = 2.0 * gbar * gbar / v * std::cos(k0 * x21) * (1.0 + s2 * std::cos(k0 * d));
  r.gamma11 = chain_decay_closed_form(theta, k0, d, gbar, J);
  return r;
}

}  // namespace gla
