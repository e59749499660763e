#pragma once

#include <array>
#include <vector>

#include "gla/bath.hpp"
#include "gla/emitters.hpp"

namespace gla {

// Which sublattice hosts the vacancy-like state of a graphene 3-point atom.
// The atom couples to the three neighbours of that site.
GiantAtom graphene_three_point(const BathGraph& bath, int ca, int cb, int vds_sub, double g,
                               double omega0);

// Four-point atom around the bond A(c)-B(c): couples to the two outer neighbours of each end.
GiantAtom graphene_four_point(const BathGraph& bath, int ca, int cb, double g, double omega0);

// Two-point Lieb atom on a string of `string_length` cavities (5 + 6 nu) between B sites of
// row `row` (horizontal) or C sites of column `column` (vertical); couplings g and -g.
GiantAtom lieb_string_atom(const BathGraph& bath, int start_a, int start_b, int string_length,
                           bool horizontal, double g, double omega0);
bool lieb_length_allowed(int string_length);

// Four-point square-lattice atom at the corners (c +- (mu, 0), c +- (0, mu)), mu odd.
GiantAtom square_diamond(const BathGraph& bath, int cx, int cy, int mu, double g, double omega0);
// Normalized checkerboard diamond state trapped by `square_diamond`.
VectorXc square_diamond_state(const BathGraph& bath, int cx, int cy, int mu);

// Chain atom coupling with equal g to the listed cell positions.
GiantAtom chain_atom(const BathGraph& bath, const std::vector<int>& positions, double g, double omega0);
// Two-point chain atom with g1 = gbar cos theta, g2 = gbar sin theta.
GiantAtom chain_pair_atom(const BathGraph& bath, int first, int second, double gbar, double theta,
                          double omega0);

// Normalized Lieb string state (|1> - |2> + |4> - |5> + ...)/norm with nodes every third cavity.
VectorXc lieb_string_state(const BathGraph& bath, int start_a, int start_b, int string_length,
                           bool horizontal);

}  // namespace gla
