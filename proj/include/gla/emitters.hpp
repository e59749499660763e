#pragma once

#include <vector>

#include "gla/bath.hpp"
#include "gla/types.hpp"

namespace gla {

struct Coupling {
  int site = 0;
  cplx g;
};

struct GiantAtom {
  double omega0 = 0.0;
  std::vector<Coupling> couplings;

  int point_count() const { return static_cast<int>(couplings.size()); }
  bool is_giant() const { return couplings.size() >= 2; }
  // Same geometry with every coupling multiplied by `factor`.
  GiantAtom scaled(cplx factor) const;
  void validate(int n_sites = -1) const;
};

// Normalized site state with alpha_l = g_l / gbar on the coupling points.
using SiteState = SparseState;

SiteState site_state(const GiantAtom& atom);
double effective_strength(const GiantAtom& atom);

struct ChiFrame {
  SiteState chi;
  std::vector<SiteState> chi_perp;
  MatrixXc basis;             // columns: new basis vectors in the site basis
  MatrixXc transformed_bath;  // basis^dagger H_B basis
  int chi_column = 0;         // column of basis holding chi
};

// chi sits at the column of the first coupling point and each chi_perp at the
// column of a later one, so the rotated frame keeps the site ordering elsewhere.
ChiFrame chi_frame(const GiantAtom& atom, const BathGraph& bath);

struct EmitterEnsemble {
  std::vector<GiantAtom> atoms;

  int size() const { return static_cast<int>(atoms.size()); }
  bool uniform_omega0(double tol = 0.0) const;
  bool uniform_gbar(double tol = 1e-12) const;
  void validate(const BathGraph& bath) const;
};

// Single-excitation Hamiltonian; emitter states |e_j> occupy indices 0..N_a-1,
// bath sites follow at offset N_a.
MatrixXc total_hamiltonian_1ex(const BathGraph& bath, const EmitterEnsemble& ensemble);
VectorXc apply_total_hamiltonian(const BathGraph& bath, const EmitterEnsemble& ensemble,
                                 const VectorXc& v);

}  // namespace gla
