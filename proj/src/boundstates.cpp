#include "gla/boundstates.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <sstream>

namespace gla {

const char* to_string(BSClass c) {
  switch (c) {
    case BSClass::in_gap: return "in_gap";
    case BSClass::in_band: return "in_band";
    case BSClass::vds: return "vds";
    case BSClass::weak_coupling: return "weak_coupling";
  }
  return "in_gap";
}

VectorXc BoundState::assembled() const {
  VectorXc s(photon_amplitudes.size() + 1);
  s(0) = normalization;
  s.tail(photon_amplitudes.size()) = normalization * photon_amplitudes;
  return s;
}

double eigen_residual(const BathGraph& bath, const GiantAtom& atom, const VectorXc& state, double omega) {
  const EmitterEnsemble ens{{atom}};
  return (apply_total_hamiltonian(bath, ens, state) - omega * state).norm();
}

cplx pole_function(const GiantAtom& atom, const BathResolvent& res, const ResolventQuery& q) {
  const double gbar = effective_strength(atom);
  const SiteState chi = site_state(atom);
  return q.omega - atom.omega0 - gbar * gbar * res.between(chi, chi, q);
}

namespace {

void require_gap_interval(const BathResolvent& res, double lo, double hi) {
  if (!(lo < hi)) throw Error(ErrorKind::invalid_argument, "gap interval must satisfy lo < hi");
  std::ostringstream os;
  os << "interval [" << lo << ", " << hi << "] touches a band";
  if (!res.in_gap(lo) || !res.in_gap(hi)) throw Error(ErrorKind::not_a_gap, os.str());
  for (const auto& [a, b] : res.band_intervals())
    if (a <= hi && b >= lo) throw Error(ErrorKind::not_a_gap, os.str());
  if (res.has(Backend::finite_spectral)) {
    const auto& ev = res.spectrum().eigenvalues;
    const auto it = std::lower_bound(ev.data(), ev.data() + ev.size(), lo);
    if (it != ev.data() + ev.size() && *it <= hi) throw Error(ErrorKind::not_a_gap, os.str());
  }
}

}  // namespace

BoundState bs_wavefunction(const GiantAtom& atom, const BathResolvent& res, const ResolventQuery& q,
                           BSClass classification) {
  atom.validate(res.bath().n_sites());
  const double J = res.bath().hopping_scale;
  const cplx f = pole_function(atom, res, q);
  if (std::abs(f) > tol::inband_root_f * J) {
    std::ostringstream os;
    os << "|F(" << q.omega << ")| = " << std::abs(f) << " exceeds the root tolerance";
    throw Error(ErrorKind::stale_root, os.str());
  }
  const double gbar = effective_strength(atom);
  BoundState bs;
  bs.omega_bs = q.omega;
  bs.classification = classification;
  bs.pole_value = f;
  bs.photon_amplitudes = gbar * res.apply(site_state(atom), q);
  bs.normalization = 1.0 / std::sqrt(1.0 + bs.photon_amplitudes.squaredNorm());
  bs.atom_fraction = bs.normalization * bs.normalization;
  bs.residual = eigen_residual(res.bath(), atom, bs.assembled(), q.omega);
  return bs;
}

// Gap windows around the band intervals, pulled in until the resolvent certifies both ends.
std::vector<std::pair<double, double>> gap_windows(const BathResolvent& res, double reach) {
  const auto bands = res.band_intervals();
  std::vector<std::pair<double, double>> out;
  if (bands.empty()) return out;
  const double J = res.bath().hopping_scale;
  auto inward = [&](double edge, double dir) {
    double m = 1e-6 * J;
    while (!res.in_gap(edge + dir * m) && m < reach) m *= 2.0;
    return edge + dir * m;
  };
  out.emplace_back(bands.front().first - reach, inward(bands.front().first, -1.0));
  for (std::size_t i = 0; i + 1 < bands.size(); ++i) {
    const double lo = inward(bands[i].second, 1.0), hi = inward(bands[i + 1].first, -1.0);
    if (lo < hi) out.emplace_back(lo, hi);
  }
  out.emplace_back(inward(bands.back().second, 1.0), bands.back().second + reach);
  return out;
}

std::optional<BoundState> find_ingap_bs(const GiantAtom& atom, const BathResolvent& res, double lo,
                                        double hi) {
  atom.validate(res.bath().n_sites());
  require_gap_interval(res, lo, hi);
  const Backend backend = res.preferred_backend();
  auto f = [&](double w) { return pole_function(atom, res, ResolventQuery::gap(w, backend)).real(); };
  if (f(lo) > 0.0 || f(hi) < 0.0) return std::nullopt;
  const double width = tol::bisection * res.bath().hopping_scale;
  while (hi - lo > width) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) < 0.0) lo = mid; else hi = mid;
  }
  return bs_wavefunction(atom, res, ResolventQuery::gap(0.5 * (lo + hi), backend), BSClass::in_gap);
}

namespace {

template <class Fn>
double bisect(Fn&& f, double lo, double hi, double width) {
  double flo = f(lo);
  for (int it = 0; it < 200 && hi - lo > width; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Exact finite-lattice root of F in the interval between the two poles adjacent to omega.
std::optional<double> polish_bound_root(const GiantAtom& atom, const BathResolvent& res, double omega) {
  const auto& sd = res.spectrum();
  const SiteState chi = site_state(atom);
  const VectorXc pchi = sd.eigenvectors.adjoint() * chi.dense(res.bath().n_sites());
  const double gbar = effective_strength(atom);
  double left = -INFINITY, right = INFINITY;
  for (int m = 0; m < sd.size(); ++m) {
    if (std::abs(pchi(m)) <= 1e-8) continue;
    const double lam = sd.eigenvalues(m);
    if (lam <= omega) left = std::max(left, lam); else right = std::min(right, lam);
  }
  auto f = [&](double w) {
    double s = 0.0;
    for (int m = 0; m < sd.size(); ++m)
      if (std::abs(pchi(m)) > 1e-8) s += std::norm(pchi(m)) / (w - sd.eigenvalues(m));
    return w - atom.omega0 - gbar * gbar * s;
  };
  const double span = std::max(sd.span(), 1.0);
  double lo = std::isfinite(left) ? left : omega - span;
  double hi = std::isfinite(right) ? right : omega + span;
  const double pad = 1e-13 * std::max(1.0, std::abs(omega));
  lo += pad;
  hi -= pad;
  if (!(lo < hi) || f(lo) > 0.0 || f(hi) < 0.0) return std::nullopt;
  return bisect(f, lo, hi, tol::bisection);
}

}  // namespace

namespace {

// Smallest value of a unimodal function on [a, b].
template <class F>
double golden_min(F&& f, double a, double b, double width) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > width) {
    if (fc < fd) {
      b = d; d = c; fd = fc; c = b - r * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd; d = a + r * (b - a); fd = f(d);
    }
  }
  return std::min(fc, fd);
}

}  // namespace

InbandResult find_inband_bs(const GiantAtom& atom, const BathResolvent& res, double lo, double hi,
                            const InbandOptions& opts) {
  atom.validate(res.bath().n_sites());
  if (!(lo < hi) || opts.grid < 3) throw Error(ErrorKind::invalid_argument, "bad in-band scan window");
  const double J = res.bath().hopping_scale;
  InbandResult out;
  out.epsilon = opts.backend == Backend::analytic_chain
                    ? 0.0
                    : (opts.epsilon > 0.0 ? opts.epsilon : res.automatic_epsilon(opts.backend));
  out.im_tol = opts.im_tol >= 0.0 ? opts.im_tol : tol::im_tol(out.epsilon);
  const double gbar = effective_strength(atom);
  const SiteState chi = site_state(atom);
  auto sigma = [&](double w) {
    return res.evaluate(chi, chi, ResolventQuery{w, out.epsilon, opts.backend, Regularization::richardson});
  };
  auto re_f = [&](double w) { return w - atom.omega0 - gbar * gbar * sigma(w).value.real(); };

  const double step = (hi - lo) / opts.grid;
  std::vector<double> grid(opts.grid), im(opts.grid);
  for (int i = 0; i < opts.grid; ++i) {
    grid[i] = lo + (i + 0.5) * step;
    im[i] = std::abs(sigma(grid[i]).value.imag());
  }
  std::vector<double> roots;
  for (int i = 0; i < opts.grid; ++i) {
    const bool minimum = (i == 0 || im[i] <= im[i - 1]) && (i + 1 == opts.grid || im[i] <= im[i + 1]);
    if (!minimum) continue;
    const double a = grid[std::max(i - 1, 0)], b = grid[std::min(i + 1, opts.grid - 1)];
    // the grid rarely lands on the dip itself
    if (im[i] >= out.im_tol &&
        golden_min([&](double w) { return std::abs(sigma(w).value.imag()); }, a, b, 1e-4 * step) >= out.im_tol)
      continue;
    const double fa = re_f(a), fb = re_f(b);
    if ((fa < 0.0) == (fb < 0.0)) {
      out.near_misses.push_back({grid[i], -im[i], cplx(re_f(grid[i]), 0.0), -1.0,
                                 "Re F has no root next to the Im dip"});
      continue;
    }
    const double w = bisect(re_f, a, b, tol::bisection * J);
    const ResolventValue s = sigma(w);
    if (!s.converged) {
      std::ostringstream os;
      os << "self-energy at omega = " << w << " changed by " << s.change
         << " under the epsilon refinement (epsilon = " << out.epsilon << ")";
      throw Error(ErrorKind::convergence, os.str());
    }
    const cplx f = w - atom.omega0 - gbar * gbar * s.value;
    if (std::abs(s.value.imag()) >= out.im_tol || std::abs(f) >= tol::inband_root_f * J) {
      out.near_misses.push_back({w, s.value.imag(), f, -1.0, "|F| above the in-band root tolerance"});
      continue;
    }
    bool duplicate = false;
    for (double r : roots) duplicate = duplicate || std::abs(r - w) < 1e-9 * J;
    if (duplicate) continue;
    roots.push_back(w);

    double omega_bs = w;
    ResolventQuery q{w, out.epsilon, opts.backend, Regularization::richardson};
    if (opts.backend == Backend::finite_spectral) {
      const auto exact = polish_bound_root(atom, res, w);
      if (exact && std::abs(*exact - w) < tol::inband_root_f * J) {
        omega_bs = *exact;
        q = ResolventQuery::bound(omega_bs);
      }
    } else if (opts.backend == Backend::analytic_chain) {
      q = ResolventQuery::bound(w, Backend::analytic_chain);
    }
    try {
      BoundState bs = bs_wavefunction(atom, res, q, BSClass::in_band);
      if (bs.residual <= tol::residual * J) {
        out.states.push_back(std::move(bs));
      } else {
        out.near_misses.push_back({omega_bs, s.value.imag(), f, bs.residual,
                                   "assembled state is not an eigenstate of H"});
      }
    } catch (const Error& e) {
      out.near_misses.push_back({omega_bs, s.value.imag(), f, -1.0, e.what()});
    }
  }
  return out;
}

namespace {

// omega_BS = omega0 and psi = gbar G_B(omega0) |chi> under the given regularization.
BoundState weak_state(const GiantAtom& atom, const BathResolvent& res, const ResolventQuery& q) {
  const double gbar = effective_strength(atom);
  const SiteState chi = site_state(atom);
  BoundState bs;
  bs.omega_bs = q.omega;
  bs.classification = BSClass::weak_coupling;
  bs.pole_value = -gbar * gbar * res.between(chi, chi, q);
  bs.photon_amplitudes = gbar * res.apply(chi, q);
  bs.normalization = 1.0 / std::sqrt(1.0 + bs.photon_amplitudes.squaredNorm());
  bs.atom_fraction = bs.normalization * bs.normalization;
  bs.residual = eigen_residual(res.bath(), atom, bs.assembled(), q.omega);
  bs.perturbative = gbar <= tol::weak_coupling_gbar * res.bath().hopping_scale;
  return bs;
}

}  // namespace

std::optional<BoundState> weak_coupling_bs(const GiantAtom& atom, const BathResolvent& res,
                                           double im_threshold) {
  atom.validate(res.bath().n_sites());
  const double gbar = effective_strength(atom);
  const double J = res.bath().hopping_scale;
  const Backend backend = res.preferred_backend();
  const double w = atom.omega0;
  const SiteState chi = site_state(atom);
  if (res.in_gap(w)) return weak_state(atom, res, ResolventQuery::gap(w, backend));

  const ResolventValue s = res.evaluate(chi, chi, ResolventQuery::richardson(w, 0.0, backend));
  double threshold = im_threshold;
  if (threshold < 0.0) {
    threshold = tol::im_tol(s.epsilon);
    if (gbar > 0.0) threshold = std::min(threshold, tol::inband_root_f * J / (gbar * gbar));
  }
  const bool im_ok = std::abs(s.value.imag()) <= threshold;
  if (backend == Backend::analytic_chain) {
    if (!im_ok) return std::nullopt;
    return weak_state(atom, res, ResolventQuery::bound(w, backend));
  }
  if (std::sqrt(res.on_shell_weight(chi, w)) > 1e-8) {
    if (!im_ok) return std::nullopt;
    return weak_state(atom, res, ResolventQuery::richardson(w, 0.0, backend));
  }
  // No mode at omega0 overlaps chi, so the bound limit solves (H_B - omega0) psi = gbar chi up to
  // the degenerate shell at omega0; a VDS picks the localized member of that family.
  BoundState bs = weak_state(atom, res, ResolventQuery::bound(w, backend));
  bool localized = localization_check(bs.photon_amplitudes, res.bath()).localized;
  if (!localized) {
    const auto vds = vds_search(atom, res.bath());
    if (!vds.empty()) {
      bs.photon_amplitudes = vds.front().weak_coupling_photon();
      bs.pole_value = 0.0;
      bs.normalization = 1.0 / std::sqrt(1.0 + bs.photon_amplitudes.squaredNorm());
      bs.atom_fraction = bs.normalization * bs.normalization;
      bs.residual = eigen_residual(res.bath(), atom, bs.assembled(), w);
      localized = true;
    }
  }
  if (im_ok) return bs;
  // The broadened estimate cannot resolve a quadratic LDOS dip on a small lattice; an exact
  // localized eigenstate settles it.
  if (localized && bs.residual <= tol::residual * J) return bs;
  return std::nullopt;
}

ProjectedBath projected_bath(const GiantAtom& atom, const BathGraph& bath) {
  const ChiFrame f = chi_frame(atom, bath);
  const int n = bath.n_sites();
  const int c = f.chi_column;
  std::vector<int> keep;
  keep.reserve(n - 1);
  for (int i = 0; i < n; ++i)
    if (i != c) keep.push_back(i);
  ProjectedBath pb;
  pb.hamiltonian = f.transformed_bath(keep, keep);
  pb.basis = f.basis(Eigen::all, keep);
  return pb;
}

LocalizationReport localization_check(const VectorXc& state, const BathGraph& bath, double tolerance) {
  LocalizationReport rep;
  const auto dist = boundary_distance(bath);
  int max_d = 0;
  bool any_boundary = false;
  for (int d : dist)
    if (d != INT_MAX) {
      any_boundary = true;
      max_d = std::max(max_d, d);
    }
  if (!any_boundary || max_d < 2) {
    rep.inconclusive = true;
    rep.localized = true;
    return rep;
  }
  const double total = state.squaredNorm();
  rep.shell_weights.assign(max_d + 1, 0.0);
  for (int x = 0; x < bath.n_sites(); ++x)
    if (dist[x] != INT_MAX) rep.shell_weights[dist[x]] += std::norm(state(x)) / total;
  rep.boundary_weight = rep.shell_weights[0];
  rep.localized = rep.boundary_weight < tolerance;
  return rep;
}

double VDS::excited_weight() const { return std::cos(theta) * std::cos(theta); }

VectorXc VDS::dressed_state() const {
  VectorXc s(psi_vds.size() + 1);
  s(0) = std::cos(theta);
  s.tail(psi_vds.size()) = std::polar(std::sin(theta), phi) * psi_vds;
  return s;
}

GiantAtom with_strength(const GiantAtom& atom, double strength) {
  double gmax = 0.0;
  for (const auto& c : atom.couplings) gmax = std::max(gmax, std::abs(c.g));
  if (gmax == 0.0) throw Error(ErrorKind::degenerate_emitter, "all coupling strengths vanish");
  return atom.scaled(strength / gmax);
}

namespace {

void fix_phase(VectorXc& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (std::abs(v(i)) > std::abs(v(best)) + 1e-12) best = i;
  if (std::abs(v(best)) > 0.0) v *= std::conj(v(best)) / std::abs(v(best));
}

}  // namespace

std::vector<VDS> vds_search(const GiantAtom& atom, const BathGraph& bath, const VDSOptions& opts) {
  atom.validate(bath.n_sites());
  const double J = bath.hopping_scale;
  const int n = bath.n_sites();
  const ProjectedBath pb = projected_bath(atom, bath);
  const SpectralDecomposition sd = diagonalize_hermitian(pb.hamiltonian);

  std::vector<VectorXc> cluster;
  for (int m = 0; m < sd.size(); ++m)
    if (std::abs(sd.eigenvalues(m) - atom.omega0) <= opts.e_tol * J)
      cluster.push_back(pb.basis * sd.eigenvectors.col(m));
  if (cluster.empty()) return {};
  const int m = static_cast<int>(cluster.size());

  // Boundary-weight matrix on the cluster; its small eigenvalues span the localized states.
  const auto boundary = boundary_sites(bath);
  MatrixXc w = MatrixXc::Zero(m, m);
  for (int x : boundary)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) w(i, j) += std::conj(cluster[i](x)) * cluster[j](x);
  Eigen::SelfAdjointEigenSolver<MatrixXc> wsolve(w);
  std::vector<VectorXc> local;
  for (int k = 0; k < m; ++k) {
    if (!boundary.empty() && wsolve.eigenvalues()(k) >= opts.localization_tol) continue;
    VectorXc v = VectorXc::Zero(n);
    for (int i = 0; i < m; ++i) v += wsolve.eigenvectors()(i, k) * cluster[i];
    local.push_back(v.normalized());
  }
  if (local.empty()) return {};

  const SiteState chi = site_state(atom);
  const VectorXc hchi = apply_hamiltonian(bath, chi.dense(n));
  VectorXc c(local.size());
  for (std::size_t k = 0; k < local.size(); ++k) c(k) = hchi.dot(local[k]);
  if (c.norm() <= opts.c_tol * J) return {};

  VDS v;
  v.energy = atom.omega0;
  v.psi_vds = VectorXc::Zero(n);
  for (std::size_t k = 0; k < local.size(); ++k) v.psi_vds += std::conj(c(k)) * local[k];
  v.psi_vds.normalize();
  fix_phase(v.psi_vds);
  v.coupling_overlap = hchi.dot(v.psi_vds);
  const double gbar = effective_strength(atom);
  v.eta = -gbar / v.coupling_overlap;
  v.theta = std::atan(std::abs(v.eta));
  v.phi = std::arg(v.eta);
  v.degenerate = local.size() > 1;
  v.family.push_back(v.psi_vds);
  for (const auto& u : local) {
    VectorXc r = u;
    for (const auto& f : v.family) r -= f * f.dot(r);
    for (const auto& f : v.family) r -= f * f.dot(r);
    if (r.norm() > 1e-6) v.family.push_back(r.normalized());
  }
  v.localization = localization_check(v.psi_vds, bath, opts.localization_tol);

  for (double s : opts.check_strengths) {
    const GiantAtom scaled = with_strength(atom, s * J);
    const double gs = effective_strength(scaled);
    const cplx eta = -gs / v.coupling_overlap;
    VectorXc state(n + 1);
    state(0) = 1.0;
    state.tail(n) = eta * v.psi_vds;
    state /= state.norm();
    v.check_strengths.push_back(s * J);
    v.check_residuals.push_back(eigen_residual(bath, scaled, state, atom.omega0));
  }
  return {v};
}

}  // namespace gla
