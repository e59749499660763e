#include "gla/emitters.hpp"

#include <cmath>
#include <set>

namespace gla {

GiantAtom GiantAtom::scaled(cplx factor) const {
  GiantAtom out = *this;
  for (auto& c : out.couplings) c.g *= factor;
  return out;
}

void GiantAtom::validate(int n_sites) const {
  if (couplings.empty()) throw Error(ErrorKind::degenerate_emitter, "atom has no coupling points");
  std::set<int> seen;
  bool any = false;
  for (const auto& c : couplings) {
    if (!seen.insert(c.site).second)
      throw Error(ErrorKind::invalid_argument, "coupling sites must be distinct");
    if (n_sites >= 0 && (c.site < 0 || c.site >= n_sites))
      throw Error(ErrorKind::index_error, "coupling site outside the bath");
    any = any || c.g != cplx(0.0);
  }
  if (!any) throw Error(ErrorKind::degenerate_emitter, "all coupling strengths vanish");
}

double effective_strength(const GiantAtom& atom) {
  atom.validate();
  double s = 0.0;
  for (const auto& c : atom.couplings) s += std::norm(c.g);
  return std::sqrt(s);
}

SiteState site_state(const GiantAtom& atom) {
  const double gbar = effective_strength(atom);
  SiteState chi;
  for (const auto& c : atom.couplings) {
    chi.sites.push_back(c.site);
    chi.amps.push_back(c.g / gbar);
  }
  return chi;
}

ChiFrame chi_frame(const GiantAtom& atom, const BathGraph& bath) {
  atom.validate(bath.n_sites());
  const int n = bath.n_sites();
  const int npts = atom.point_count();
  ChiFrame f;
  f.chi = site_state(atom);
  f.basis = MatrixXc::Identity(n, n);
  f.chi_column = atom.couplings[0].site;

  // Gram-Schmidt on the coupling-point span, chi first, then unit vectors in list order.
  std::vector<VectorXc> frame;
  VectorXc chi_local(npts);
  for (int l = 0; l < npts; ++l) chi_local(l) = f.chi.amps[l];
  frame.push_back(chi_local);
  for (int l = 0; l < npts && static_cast<int>(frame.size()) < npts; ++l) {
    VectorXc v = VectorXc::Zero(npts);
    v(l) = 1.0;
    for (const auto& u : frame) v -= u * u.dot(v);
    for (const auto& u : frame) v -= u * u.dot(v);
    const double nv = v.norm();
    if (nv < 1e-8) continue;
    frame.push_back(v / nv);
  }
  for (int col = 0; col < npts; ++col) {
    const int site_col = atom.couplings[col].site;
    for (int r = 0; r < npts; ++r) f.basis(atom.couplings[r].site, site_col) = 0.0;
    for (int r = 0; r < npts; ++r) f.basis(atom.couplings[r].site, site_col) = frame[col](r);
    if (col > 0) {
      SiteState s;
      for (int r = 0; r < npts; ++r) {
        s.sites.push_back(atom.couplings[r].site);
        s.amps.push_back(frame[col](r));
      }
      f.chi_perp.push_back(std::move(s));
    }
  }
  // basis differs from the identity only on the coupling columns.
  MatrixXc hb = hamiltonian_matrix(bath);
  for (int col = 0; col < npts; ++col) {
    const int c = atom.couplings[col].site;
    hb.col(c) = apply_hamiltonian(bath, f.basis.col(c));
  }
  MatrixXc rows(npts, n);
  for (int col = 0; col < npts; ++col) {
    const int c = atom.couplings[col].site;
    rows.row(col).setZero();
    for (int r = 0; r < npts; ++r) {
      const int s = atom.couplings[r].site;
      rows.row(col) += std::conj(f.basis(s, c)) * hb.row(s);
    }
  }
  for (int col = 0; col < npts; ++col) hb.row(atom.couplings[col].site) = rows.row(col);
  f.transformed_bath = std::move(hb);
  return f;
}

bool EmitterEnsemble::uniform_omega0(double tol) const {
  for (const auto& a : atoms)
    if (std::abs(a.omega0 - atoms.front().omega0) > tol) return false;
  return true;
}

bool EmitterEnsemble::uniform_gbar(double tol) const {
  if (atoms.empty()) return true;
  const double ref = effective_strength(atoms.front());
  for (const auto& a : atoms)
    if (std::abs(effective_strength(a) - ref) > tol * std::max(1.0, ref)) return false;
  return true;
}

void EmitterEnsemble::validate(const BathGraph& bath) const {
  for (const auto& a : atoms) a.validate(bath.n_sites());
}

MatrixXc total_hamiltonian_1ex(const BathGraph& bath, const EmitterEnsemble& ensemble) {
  ensemble.validate(bath);
  const int na = ensemble.size();
  const int n = bath.n_sites();
  MatrixXc h = MatrixXc::Zero(na + n, na + n);
  h.bottomRightCorner(n, n) = hamiltonian_matrix(bath);
  for (int j = 0; j < na; ++j) {
    const auto& atom = ensemble.atoms[j];
    h(j, j) = atom.omega0;
    for (const auto& c : atom.couplings) {
      h(na + c.site, j) += c.g;
      h(j, na + c.site) += std::conj(c.g);
    }
  }
  return h;
}

VectorXc apply_total_hamiltonian(const BathGraph& bath, const EmitterEnsemble& ensemble,
                                 const VectorXc& v) {
  const int na = ensemble.size();
  const int n = bath.n_sites();
  VectorXc out(na + n);
  out.tail(n) = apply_hamiltonian(bath, v.tail(n));
  for (int j = 0; j < na; ++j) {
    const auto& atom = ensemble.atoms[j];
    out(j) = atom.omega0 * v(j);
    for (const auto& c : atom.couplings) {
      out(na + c.site) += c.g * v(j);
      out(j) += std::conj(c.g) * v(na + c.site);
    }
  }
  return out;
}

}  // namespace gla
