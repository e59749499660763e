#include "gla/greens.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace gla {

const char* to_string(Backend b) {
  switch (b) {
    case Backend::finite_spectral: return "finite_spectral";
    case Backend::bloch_sum: return "bloch_sum";
    case Backend::analytic_chain: return "analytic_chain";
  }
  return "finite_spectral";
}

const char* to_string(Regularization r) {
  switch (r) {
    case Regularization::broadened: return "broadened";
    case Regularization::richardson: return "richardson";
    case Regularization::gap: return "gap";
    case Regularization::bound_limit: return "bound_limit";
  }
  return "richardson";
}

Backend backend_from_string(const std::string& s) {
  if (s == "finite_spectral" || s == "finite") return Backend::finite_spectral;
  if (s == "bloch_sum" || s == "bloch") return Backend::bloch_sum;
  if (s == "analytic_chain" || s == "analytic") return Backend::analytic_chain;
  throw Error(ErrorKind::invalid_argument, "unknown backend '" + s + "'");
}

Regularization regularization_from_string(const std::string& s) {
  if (s == "broadened") return Regularization::broadened;
  if (s == "richardson") return Regularization::richardson;
  if (s == "gap") return Regularization::gap;
  if (s == "bound_limit" || s == "bound") return Regularization::bound_limit;
  throw Error(ErrorKind::invalid_argument, "unknown regularization '" + s + "'");
}

double LDOSCurve::integral() const {
  double s = 0.0;
  for (std::size_t i = 1; i < omega_grid.size(); ++i)
    s += 0.5 * (density[i] + density[i - 1]) * (omega_grid[i] - omega_grid[i - 1]);
  return s;
}

std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
  return out;
}

cplx chain_green(int n, int n2, cplx z, double J, double omega_c) {
  const cplx w = z - omega_c;
  cplx s;
  if (w.imag() == 0.0 && std::abs(w.real()) < 2.0 * J) {
    s = kI * std::sqrt(4.0 * J * J - w.real() * w.real());
  } else {
    s = std::sqrt(w * w - 4.0 * J * J);
    if (std::abs(w - s) > 2.0 * J) s = -s;
  }
  if (std::abs(s) < 1e-12) throw Error(ErrorKind::pole_proximity, "chain band edge");
  const cplx x = (w - s) / (2.0 * J);
  return std::pow(-x, std::abs(n - n2)) / s;
}

cplx bath_green_chain_analytic(int n, int n2, double omega, double J, double omega_c) {
  const double w = omega - omega_c;
  if (std::abs(w) >= 2.0 * J)
    throw Error(ErrorKind::out_of_band, "analytic chain resolvent requires |omega - omega_c| < 2J");
  const double r = std::sqrt(1.0 - (w / (2.0 * J)) * (w / (2.0 * J)));
  return -kI / (2.0 * J * r) * std::pow(cplx(-w / (2.0 * J), r), std::abs(n - n2));
}

BathResolvent::BathResolvent(BathGraph bath, Options opts) {
  bath.validate();
  bath_ = std::make_shared<const BathGraph>(std::move(bath));
  const BathGraph& b = *bath_;
  if (opts.finite) spectrum_ = std::make_shared<const SpectralDecomposition>(diagonalize(b, opts.dense_limit));
  const int subl = b.bloch ? b.bloch->sublattice_count : 1;
  const bool full_grid =
      b.bloch && b.kind != LatticeKind::custom &&
      static_cast<std::size_t>(b.n_sites()) ==
          static_cast<std::size_t>(b.cells[0]) * std::max(b.cells[1], 1) * subl;
  if (opts.bloch) {
    if (!full_grid || b.boundary != Boundary::periodic)
      throw Error(ErrorKind::unsupported_configuration,
                  "Bloch backend needs a complete periodic lattice from a builder");
    bands_ = std::make_shared<const BandStructure>(band_structure(*b.bloch, b.cells[0], b.cells[1]));
  }
  if (opts.analytic) {
    if (b.kind != LatticeKind::chain)
      throw Error(ErrorKind::unsupported_configuration, "analytic backend needs a chain");
    analytic_ = true;
  }
  if (b.bloch && b.kind != LatticeKind::custom) {
    const BandStructure coarse = band_structure(*b.bloch, 96);
    for (int n = 0; n < coarse.band_count(); ++n)
      band_edges_.emplace_back(coarse.energies.col(n).minCoeff(), coarse.energies.col(n).maxCoeff());
  }
}

const SpectralDecomposition& BathResolvent::spectrum() const {
  if (!spectrum_) throw Error(ErrorKind::unsupported_configuration, "no finite spectrum computed");
  return *spectrum_;
}

const BandStructure& BathResolvent::bands() const {
  if (!bands_) throw Error(ErrorKind::unsupported_configuration, "no Bloch data computed");
  return *bands_;
}

Backend BathResolvent::preferred_backend() const {
  if (has(Backend::finite_spectral)) return Backend::finite_spectral;
  if (has(Backend::bloch_sum)) return Backend::bloch_sum;
  return Backend::analytic_chain;
}

bool BathResolvent::has(Backend b) const {
  switch (b) {
    case Backend::finite_spectral: return static_cast<bool>(spectrum_);
    case Backend::bloch_sum: return static_cast<bool>(bands_);
    case Backend::analytic_chain: return analytic_;
  }
  return false;
}

double BathResolvent::automatic_epsilon(Backend b) const {
  if (b == Backend::finite_spectral) {
    const auto& sd = spectrum();
    return tol::epsilon_levels * sd.span() / sd.size();
  }
  if (b == Backend::bloch_sum) {
    const auto& bs = bands();
    const double span = bs.max_energy() - bs.min_energy();
    return tol::epsilon_levels * span / (bs.energies.size());
  }
  return 0.0;
}

bool BathResolvent::in_gap(double omega) const {
  bool known = false;
  if (spectrum_) {
    known = true;
    const auto& ev = spectrum_->eigenvalues;
    const double margin = tol::gap_margin_levels * spectrum_->level_spacing();
    const auto it = std::lower_bound(ev.data(), ev.data() + ev.size(), omega);
    double nearest = INFINITY;
    if (it != ev.data() + ev.size()) nearest = std::min(nearest, *it - omega);
    if (it != ev.data()) nearest = std::min(nearest, omega - *(it - 1));
    if (!(nearest > margin)) return false;
  }
  if (!band_edges_.empty()) {
    known = true;
    for (const auto& [lo, hi] : band_edges_)
      if (omega >= lo - tol::gap_margin_bands && omega <= hi + tol::gap_margin_bands) return false;
  }
  if (analytic_) {
    known = true;
    const double J = bath_->hopping_scale;
    if (std::abs(omega - bath_->omega_c) <= 2.0 * J + tol::gap_margin_bands) return false;
  }
  return known;
}

std::vector<std::pair<double, double>> BathResolvent::band_intervals() const {
  std::vector<std::pair<double, double>> raw = band_edges_;
  if (raw.empty() && spectrum_) {
    const auto& ev = spectrum_->eigenvalues;
    const double split = tol::gap_margin_levels * spectrum_->level_spacing();
    double start = ev(0);
    for (int i = 1; i < ev.size(); ++i)
      if (ev(i) - ev(i - 1) > split) {
        raw.emplace_back(start, ev(i - 1));
        start = ev(i);
      }
    raw.emplace_back(start, ev(ev.size() - 1));
  }
  std::sort(raw.begin(), raw.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& iv : raw) {
    if (!merged.empty() && iv.first <= merged.back().second)
      merged.back().second = std::max(merged.back().second, iv.second);
    else
      merged.push_back(iv);
  }
  return merged;
}

VectorXc BathResolvent::project(const SparseState& s) const {
  const auto& v = spectrum().eigenvectors;
  VectorXc out = VectorXc::Zero(v.cols());
  for (std::size_t i = 0; i < s.size(); ++i) out += s.amps[i] * v.row(s.sites[i]).adjoint();
  return out;
}

std::vector<VectorXc> BathResolvent::project_bloch(const SparseState& s) const {
  return bloch_overlaps(s, *bath_, bands());
}

std::vector<VectorXc> bloch_overlaps(const SiteState& chi, const BathGraph& bath,
                                     const BandStructure& bands) {
  const int nk = static_cast<int>(bands.k_grid.size());
  const double norm = 1.0 / std::sqrt(static_cast<double>(nk));
  std::vector<VectorXc> out(nk);
  for (int k = 0; k < nk; ++k) {
    const auto& kv = bands.k_grid[k];
    const MatrixXc& u = bands.bloch_vectors[k];
    VectorXc acc = VectorXc::Zero(u.cols());
    for (std::size_t i = 0; i < chi.size(); ++i) {
      const SiteLabel& lab = bath.labels[chi.sites[i]];
      const cplx phase = std::exp(-kI * (kv[0] * lab.a + kv[1] * lab.b)) * norm;
      acc += chi.amps[i] * phase * u.row(lab.sub).adjoint();
    }
    out[k] = acc;
  }
  return out;
}

cplx BathResolvent::between_z(const SparseState& a, const SparseState& b, cplx z,
                              Backend backend) const {
  if (!has(backend))
    throw Error(ErrorKind::unsupported_configuration,
                std::string("backend ") + to_string(backend) + " is not available");
  if (backend == Backend::finite_spectral) {
    const VectorXc pa = project(a), pb = project(b);
    const auto& ev = spectrum_->eigenvalues;
    cplx s = 0.0;
    for (int m = 0; m < ev.size(); ++m) s += std::conj(pa(m)) * pb(m) / (z - ev(m));
    return s;
  }
  if (backend == Backend::bloch_sum) {
    const auto pa = project_bloch(a), pb = project_bloch(b);
    cplx s = 0.0;
    for (std::size_t k = 0; k < pa.size(); ++k)
      for (int n = 0; n < pa[k].size(); ++n)
        s += std::conj(pa[k](n)) * pb[k](n) / (z - bands_->energies(k, n));
    return s;
  }
  const double J = bath_->hopping_scale;
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      s += std::conj(a.amps[i]) * b.amps[j] *
           chain_green(bath_->labels[a.sites[i]].a, bath_->labels[b.sites[j]].a, z, J, bath_->omega_c);
  return s;
}

MatrixXc BathResolvent::matrix_z(cplx z) const {
  const auto& sd = spectrum();
  VectorXc w(sd.size());
  for (int m = 0; m < sd.size(); ++m) w(m) = 1.0 / (z - sd.eigenvalues(m));
  return sd.eigenvectors * w.asDiagonal() * sd.eigenvectors.adjoint();
}

double BathResolvent::on_shell_weight(const SparseState& b, double omega) const {
  const double window = tol::degeneracy * std::max(1.0, std::abs(omega));
  double w = 0.0;
  if (spectrum_) {
    const VectorXc pb = project(b);
    for (int m = 0; m < pb.size(); ++m)
      if (std::abs(spectrum_->eigenvalues(m) - omega) <= window) w += std::norm(pb(m));
    return w;
  }
  if (bands_) {
    const auto pb = project_bloch(b);
    for (std::size_t k = 0; k < pb.size(); ++k)
      for (int n = 0; n < pb[k].size(); ++n)
        if (std::abs(bands_->energies(k, n) - omega) <= window) w += std::norm(pb[k](n));
  }
  return w;
}

namespace {

// Mode weight for the finite and Bloch sums under a given regularization.
// richardson extrapolates to epsilon -> 0 through epsilon, 3 epsilon / 4 and epsilon / 2
// (quadratic); `coarse` selects the linear estimate from the two smaller widths instead,
// whose distance from the quadratic one is the reported change.
struct ModeKernel {
  Regularization reg;
  double omega;
  double eps;
  double window;
  bool coarse = false;
  cplx operator()(double lambda) const {
    switch (reg) {
      case Regularization::broadened: return 1.0 / (cplx(omega, eps) - lambda);
      case Regularization::richardson: {
        const cplx r1 = 1.0 / (cplx(omega, eps) - lambda);
        const cplx r3 = 1.0 / (cplx(omega, 0.75 * eps) - lambda);
        const cplx r2 = 1.0 / (cplx(omega, 0.5 * eps) - lambda);
        return coarse ? 3.0 * r2 - 2.0 * r3 : 3.0 * r1 - 8.0 * r3 + 6.0 * r2;
      }
      case Regularization::gap: return 1.0 / (omega - lambda);
      case Regularization::bound_limit:
        return std::abs(lambda - omega) <= window ? cplx(0.0) : cplx(1.0 / (omega - lambda));
    }
    return 0.0;
  }
};

}  // namespace

ResolventValue BathResolvent::evaluate(const SparseState& a, const SparseState& b,
                                       const ResolventQuery& q) const {
  if (!has(q.backend))
    throw Error(ErrorKind::unsupported_configuration,
                std::string("backend ") + to_string(q.backend) + " is not available");
  ResolventValue out;
  const double omega = q.omega;

  if (q.backend == Backend::analytic_chain) {
    const bool band = std::abs(omega - bath_->omega_c) < 2.0 * bath_->hopping_scale;
    if (q.regularization == Regularization::gap && band)
      throw Error(ErrorKind::regularization_required, "omega lies inside the chain band");
    double eps = 0.0;
    if (q.regularization == Regularization::broadened || q.regularization == Regularization::richardson)
      eps = std::max(q.epsilon, 0.0);
    if (q.regularization == Regularization::richardson && eps > 0.0) {
      const cplx g1 = between_z(a, b, cplx(omega, eps), q.backend);
      const cplx g3 = between_z(a, b, cplx(omega, 0.75 * eps), q.backend);
      const cplx g2 = between_z(a, b, cplx(omega, 0.5 * eps), q.backend);
      out.value = 3.0 * g1 - 8.0 * g3 + 6.0 * g2;
      out.change = std::abs(out.value - (3.0 * g2 - 2.0 * g3));
    } else {
      out.value = between_z(a, b, cplx(omega, eps), q.backend);
    }
    out.epsilon = eps;
    return out;
  }

  ModeKernel kernel{q.regularization, omega, 0.0, tol::degeneracy * std::max(1.0, std::abs(omega))};
  if (q.regularization == Regularization::gap && !in_gap(omega)) {
    std::ostringstream os;
    os << "omega = " << omega << " is not a certified gap energy; a broadened query is required";
    throw Error(ErrorKind::regularization_required, os.str());
  }
  if (q.regularization == Regularization::broadened || q.regularization == Regularization::richardson) {
    kernel.eps = q.epsilon > 0.0 ? q.epsilon : automatic_epsilon(q.backend);
    out.epsilon = kernel.eps;
  }

  auto sum_with = [&](const ModeKernel& kern) -> cplx {
    cplx s = 0.0;
    if (q.backend == Backend::finite_spectral) {
      const VectorXc pa = project(a), pb = project(b);
      const auto& ev = spectrum_->eigenvalues;
      for (int m = 0; m < ev.size(); ++m) s += std::conj(pa(m)) * pb(m) * kern(ev(m));
    } else {
      const auto pa = project_bloch(a), pb = project_bloch(b);
      for (std::size_t k = 0; k < pa.size(); ++k)
        for (int n = 0; n < pa[k].size(); ++n)
          s += std::conj(pa[k](n)) * pb[k](n) * kern(bands_->energies(k, n));
    }
    return s;
  };

  if (q.regularization == Regularization::bound_limit) {
    const double wa = on_shell_weight(a, omega), wb = on_shell_weight(b, omega);
    if (std::sqrt(wa) > 1e-8 || std::sqrt(wb) > 1e-8) {
      std::ostringstream os;
      os << "probed state has weight " << std::max(wa, wb)
         << " on modes degenerate with omega = " << omega << "; use a broadened query";
      throw Error(ErrorKind::regularization_required, os.str());
    }
  }
  out.value = sum_with(kernel);
  if (q.regularization == Regularization::richardson) {
    ModeKernel linear = kernel;
    linear.coarse = true;
    out.change = std::abs(sum_with(linear) - out.value);
    const double scale = std::max(std::abs(out.value), 1.0 / bath_->hopping_scale);
    out.converged = out.change <= tol::richardson_rel * scale;
  }
  return out;
}

cplx BathResolvent::element(int x, int x2, const ResolventQuery& q) const {
  SparseState a{{x}, {1.0}}, b{{x2}, {1.0}};
  return between(a, b, q);
}

VectorXc BathResolvent::apply(const SparseState& b, const ResolventQuery& q) const {
  const int n = bath_->n_sites();
  if (q.backend == Backend::analytic_chain) {
    VectorXc out(n);
    for (int x = 0; x < n; ++x) out(x) = between(SparseState{{x}, {1.0}}, b, q);
    return out;
  }
  if (q.regularization == Regularization::gap && !in_gap(q.omega))
    throw Error(ErrorKind::regularization_required, "omega is not a certified gap energy");
  if (q.regularization == Regularization::bound_limit && std::sqrt(on_shell_weight(b, q.omega)) > 1e-8)
    throw Error(ErrorKind::regularization_required,
                "state overlaps modes degenerate with omega; use a broadened query");
  ModeKernel kernel{q.regularization, q.omega, 0.0,
                    tol::degeneracy * std::max(1.0, std::abs(q.omega))};
  if (q.regularization == Regularization::broadened || q.regularization == Regularization::richardson)
    kernel.eps = q.epsilon > 0.0 ? q.epsilon : automatic_epsilon(q.backend);
  if (q.backend == Backend::finite_spectral) {
    VectorXc pb = project(b);
    for (int m = 0; m < pb.size(); ++m) pb(m) *= kernel(spectrum_->eigenvalues(m));
    return spectrum_->eigenvectors * pb;
  }
  const auto pb = project_bloch(b);
  const auto& bs = bands();
  const double norm = 1.0 / std::sqrt(static_cast<double>(bs.k_grid.size()));
  VectorXc out = VectorXc::Zero(n);
  for (std::size_t k = 0; k < pb.size(); ++k) {
    VectorXc c(pb[k].size());
    for (int m = 0; m < c.size(); ++m) c(m) = pb[k](m) * kernel(bs.energies(k, m));
    const VectorXc cell_amp = bs.bloch_vectors[k] * c;  // per sublattice
    for (int x = 0; x < n; ++x) {
      const SiteLabel& lab = bath_->labels[x];
      out(x) += cell_amp(lab.sub) * std::exp(kI * (bs.k_grid[k][0] * lab.a + bs.k_grid[k][1] * lab.b)) * norm;
    }
  }
  return out;
}

cplx bath_green_element(const BathResolvent& res, int x, int x2, const ResolventQuery& q) {
  const int n = res.bath().n_sites();
  if (x < 0 || x >= n || x2 < 0 || x2 >= n) throw Error(ErrorKind::index_error, "site outside the bath");
  return res.element(x, x2, q);
}

SelfEnergySample self_energy(const GiantAtom& atom, const BathResolvent& res, const ResolventQuery& q) {
  atom.validate(res.bath().n_sites());
  const SiteState chi = site_state(atom);
  return {q.omega, res.between(chi, chi, q)};
}

cplx cross_green(const SiteState& chi_j, const SiteState& chi_j2, const BathResolvent& res,
                 const ResolventQuery& q) {
  return res.between(chi_j, chi_j2, q);
}

double default_kernel_width(const BandStructure& bands) { return 4.0 * bands.sampling_spacing(); }

SpectralDensity::SpectralDensity(const SiteState& a, const SiteState& b, const BathGraph& bath,
                                 const BandStructure& bands, double width)
    : width_(width) {
  if (!(width > bands.sampling_spacing()))
    throw Error(ErrorKind::invalid_argument, "kernel width must exceed the band sampling spacing");
  const auto pa = bloch_overlaps(a, bath, bands);
  const auto pb = bloch_overlaps(b, bath, bands);
  std::vector<std::pair<double, cplx>> items;
  for (std::size_t k = 0; k < pa.size(); ++k)
    for (int n = 0; n < pa[k].size(); ++n)
      items.emplace_back(bands.energies(k, n), std::conj(pa[k](n)) * pb[k](n));
  std::sort(items.begin(), items.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  for (const auto& [e, w] : items) {
    energies_.push_back(e);
    weights_.push_back(w);
  }
  lo_ = bands.min_energy() - 8.0 * width;
  hi_ = bands.max_energy() + 8.0 * width;
}

cplx SpectralDensity::operator()(double w) const {
  const double cut = 8.0 * width_;
  auto lo = std::lower_bound(energies_.begin(), energies_.end(), w - cut);
  auto hi = std::upper_bound(energies_.begin(), energies_.end(), w + cut);
  const double norm = 1.0 / (std::sqrt(2.0 * kPi) * width_);
  cplx s = 0.0;
  for (auto it = lo; it != hi; ++it) {
    const double u = (w - *it) / width_;
    s += weights_[it - energies_.begin()] * std::exp(-0.5 * u * u) * norm;
  }
  return s;
}

cplx SpectralDensity::principal_value(double omega) const {
  return gla::principal_value(*this, omega, lo_, hi_, 0.5 * width_);
}

LDOSCurve ldos(const SiteState& chi, const BathGraph& bath, const BandStructure& bands,
               const std::vector<double>& omega_grid, double kernel_width) {
  if (omega_grid.empty()) throw Error(ErrorKind::invalid_argument, "empty omega grid");
  const SpectralDensity ks(chi, chi, bath, bands, kernel_width);
  LDOSCurve c;
  c.omega_grid = omega_grid;
  for (double w : omega_grid) c.density.push_back(std::max(0.0, ks(w).real()));
  return c;
}

CrossLDOSCurve cross_ldos(const SiteState& chi_j, const SiteState& chi_j2, const BathGraph& bath,
                          const BandStructure& bands, const std::vector<double>& omega_grid,
                          double kernel_width) {
  if (omega_grid.empty()) throw Error(ErrorKind::invalid_argument, "empty omega grid");
  const SpectralDensity ks(chi_j, chi_j2, bath, bands, kernel_width);
  CrossLDOSCurve c;
  c.omega_grid = omega_grid;
  for (double w : omega_grid) c.density.push_back(ks(w));
  return c;
}

std::pair<double, double> self_energy_re_im(const GiantAtom& atom, const BathGraph& bath,
                                            const BandStructure& bands, double omega,
                                            double kernel_width) {
  const double width = kernel_width > 0.0 ? kernel_width : default_kernel_width(bands);
  const SiteState chi = site_state(atom);
  const SpectralDensity ks(chi, chi, bath, bands, width);
  return {ks.principal_value(omega).real(), -kPi * ks(omega).real()};
}

MatrixXc TotalGreen::assembled() const {
  const int n = static_cast<int>(bath_green.rows());
  const VectorXc gchi = bath_green * chi.dense(n);
  const Eigen::RowVectorXcd chig = chi.dense(n).adjoint() * bath_green;
  MatrixXc g(n + 1, n + 1);
  g(0, 0) = 1.0 / F;
  g.block(1, 0, n, 1) = gbar * gchi / F;
  g.block(0, 1, 1, n) = gbar * chig / F;
  g.block(1, 1, n, n) = bath_green + (gbar * gbar / F) * gchi * chig;
  return g;
}

TotalGreen total_green(const BathResolvent& res, const GiantAtom& atom, cplx z) {
  atom.validate(res.bath().n_sites());
  const auto& sd = res.spectrum();
  double dist = INFINITY;
  for (int m = 0; m < sd.size(); ++m) dist = std::min(dist, std::abs(z - sd.eigenvalues(m)));
  TotalGreen t;
  t.gbar = effective_strength(atom);
  t.chi = site_state(atom);
  t.bath_green = res.matrix_z(z);
  const int n = res.bath().n_sites();
  const VectorXc chi = t.chi.dense(n);
  const VectorXc gchi = t.bath_green * chi;
  t.F = z - atom.omega0 - t.gbar * t.gbar * chi.dot(gchi);
  if (std::abs(t.F) < 1e-9 || dist < 1e-9)
    throw Error(ErrorKind::pole_proximity, "z is too close to an eigenvalue of H");
  t.psi.resize(n + 1);
  t.psi(0) = 1.0;
  t.psi.tail(n) = t.gbar * gchi;
  return t;
}

}  // namespace gla
