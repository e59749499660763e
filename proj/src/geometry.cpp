#include "gla/geometry.hpp"

#include <cmath>

namespace gla {

namespace {

int site(const BathGraph& bath, int a, int b, int sub) {
  const int x = bath.find({a, b, sub});
  if (x < 0) throw Error(ErrorKind::invalid_geometry, "atom does not fit inside the lattice");
  return x;
}

}  // namespace

GiantAtom graphene_three_point(const BathGraph& bath, int ca, int cb, int vds_sub, double g,
                               double omega0) {
  if (bath.kind != LatticeKind::graphene) throw Error(ErrorKind::invalid_geometry, "graphene lattice required");
  GiantAtom atom{omega0, {}};
  if (vds_sub == graphene_a) {
    for (auto [da, db] : {std::array{0, 0}, {-1, 0}, {0, -1}})
      atom.couplings.push_back({site(bath, ca + da, cb + db, graphene_b), g});
  } else {
    for (auto [da, db] : {std::array{0, 0}, {1, 0}, {0, 1}})
      atom.couplings.push_back({site(bath, ca + da, cb + db, graphene_a), g});
  }
  return atom;
}

GiantAtom graphene_four_point(const BathGraph& bath, int ca, int cb, double g, double omega0) {
  if (bath.kind != LatticeKind::graphene) throw Error(ErrorKind::invalid_geometry, "graphene lattice required");
  return {omega0,
          {{site(bath, ca - 1, cb, graphene_b), g},
           {site(bath, ca, cb - 1, graphene_b), g},
           {site(bath, ca + 1, cb, graphene_a), g},
           {site(bath, ca, cb + 1, graphene_a), g}}};
}

bool lieb_length_allowed(int string_length) {
  return string_length >= 5 && (string_length - 5) % 6 == 0;
}

namespace {

// Cavity k of a Lieb string (k = 0 and k = length + 1 are the coupling points).
int lieb_string_site(const BathGraph& bath, int start_a, int start_b, int k, bool horizontal) {
  const int cell = (k + 1) / 2;
  const bool corner = k % 2 == 1;
  if (horizontal) return site(bath, start_a + cell, start_b, corner ? lieb_a : lieb_b);
  return site(bath, start_a, start_b + cell, corner ? lieb_a : lieb_c);
}

}  // namespace

GiantAtom lieb_string_atom(const BathGraph& bath, int start_a, int start_b, int string_length,
                           bool horizontal, double g, double omega0) {
  if (bath.kind != LatticeKind::lieb_nnn) throw Error(ErrorKind::invalid_geometry, "Lieb lattice required");
  if (string_length < 1 || string_length % 2 == 0)
    throw Error(ErrorKind::invalid_geometry, "a Lieb string between two edge cavities has odd length");
  return {omega0,
          {{lieb_string_site(bath, start_a, start_b, 0, horizontal), g},
           {lieb_string_site(bath, start_a, start_b, string_length + 1, horizontal), -g}}};
}

VectorXc lieb_string_state(const BathGraph& bath, int start_a, int start_b, int string_length,
                           bool horizontal) {
  VectorXc v = VectorXc::Zero(bath.n_sites());
  for (int k = 1; k <= string_length; ++k) {
    if (k % 3 == 0) continue;
    v(lieb_string_site(bath, start_a, start_b, k, horizontal)) = k % 3 == 1 ? 1.0 : -1.0;
  }
  return v.normalized();
}

GiantAtom square_diamond(const BathGraph& bath, int cx, int cy, int mu, double g, double omega0) {
  if (bath.kind != LatticeKind::square) throw Error(ErrorKind::invalid_geometry, "square lattice required");
  if (mu < 1 || mu % 2 == 0) throw Error(ErrorKind::invalid_geometry, "diamond size must be odd");
  return {omega0,
          {{site(bath, cx + mu, cy, 0), g},
           {site(bath, cx - mu, cy, 0), g},
           {site(bath, cx, cy + mu, 0), g},
           {site(bath, cx, cy - mu, 0), g}}};
}

VectorXc square_diamond_state(const BathGraph& bath, int cx, int cy, int mu) {
  VectorXc v = VectorXc::Zero(bath.n_sites());
  for (int dx = -(mu - 1); dx <= mu - 1; ++dx)
    for (int dy = -(mu - 1); dy <= mu - 1; ++dy) {
      const int r = std::abs(dx) + std::abs(dy);
      if (r > mu - 1 || (r - (mu - 1)) % 2 != 0) continue;
      v(site(bath, cx + dx, cy + dy, 0)) = (std::abs(dx) % 2 == 0) ? 1.0 : -1.0;
    }
  return v.normalized();
}

GiantAtom chain_atom(const BathGraph& bath, const std::vector<int>& positions, double g, double omega0) {
  GiantAtom atom{omega0, {}};
  for (int p : positions) atom.couplings.push_back({site(bath, p, 0, 0), g});
  return atom;
}

GiantAtom chain_pair_atom(const BathGraph& bath, int first, int second, double gbar, double theta,
                          double omega0) {
  GiantAtom atom{omega0, {}};
  const double g1 = gbar * std::cos(theta), g2 = gbar * std::sin(theta);
  if (std::abs(g1) > 1e-15) atom.couplings.push_back({site(bath, first, 0, 0), g1});
  if (std::abs(g2) > 1e-15) atom.couplings.push_back({site(bath, second, 0, 0), g2});
  return atom;
}

}  // namespace gla
