#include <cmath>
#include <random>

#include "doctest.h"
#include "gla/boundstates.hpp"
#include "gla/geometry.hpp"

using namespace gla;

namespace {

// Eigenvalues of the dense single-excitation Hamiltonian above `threshold`.
std::vector<double> dense_levels_above(const BathGraph& bath, const GiantAtom& atom, double threshold) {
  const auto sd = diagonalize_hermitian(total_hamiltonian_1ex(bath, EmitterEnsemble{{atom}}));
  std::vector<double> out;
  for (int m = 0; m < sd.size(); ++m)
    if (sd.eigenvalues(m) > threshold) out.push_back(sd.eigenvalues(m));
  return out;
}

// Chain with alternating bonds -J1, -J2: bands at +-[|J1-J2|, J1+J2].
BathGraph dimerized_chain(int cells, double j1, double j2) {
  std::vector<SiteLabel> labels;
  std::vector<Hopping> bonds;
  for (int i = 0; i < 2 * cells; ++i) {
    labels.push_back({i, 0, 0});
    if (i > 0) bonds.push_back({i - 1, i, cplx(i % 2 == 1 ? -j1 : -j2)});
  }
  return make_bath(labels, std::vector<double>(labels.size(), 0.0), bonds, Boundary::open);
}

}  // namespace

TEST_CASE("pole function reduces to omega - omega0 for a vanishing coupling") {
  const auto res = BathResolvent::finite(build_chain(51, 1.0, 0.0, Boundary::open));
  GiantAtom atom{0.7, {{25, 1e-9}}};
  const cplx f = pole_function(atom, res, ResolventQuery::gap(3.0));
  CHECK(std::abs(f - (3.0 - 0.7)) < 1e-15);
  CHECK_THROWS_AS(pole_function(GiantAtom{0.7, {{25, 0.0}}}, res, ResolventQuery::gap(3.0)), Error);
}

TEST_CASE("in-gap bound state above the chain band matches the dense eigenvalue") {
  const auto bath = build_chain(201, 1.0, 0.0, Boundary::open);
  const auto res = BathResolvent::finite(bath);
  for (double g : {0.2, 0.5}) {
    GiantAtom atom{2.5, {{100, g}}};
    const auto bs = find_ingap_bs(atom, res, 2.2, 20.0);
    REQUIRE(bs.has_value());
    const auto dense = dense_levels_above(bath, atom, 2.0 + 1e-3);
    REQUIRE(dense.size() == 1);
    CHECK(std::abs(bs->omega_bs - dense[0]) < 1e-10);
    CHECK(bs->residual < 1e-8);
    CHECK(std::abs(bs->normalization * bs->normalization * (1.0 + bs->photon_amplitudes.squaredNorm()) - 1.0) < 1e-10);
    // exponential localization around the coupling point
    CHECK(std::abs(bs->photon_amplitudes(100 + 40)) < 1e-6 * std::abs(bs->photon_amplitudes(100)));
    CHECK(localization_check(bs->photon_amplitudes, bath).localized);
  }
}

TEST_CASE("deep-gap bound state approaches omega0 as g -> 0") {
  const auto res = BathResolvent::finite(build_chain(101, 1.0, 0.0, Boundary::open));
  GiantAtom atom{4.0, {{50, 1e-3}, {53, 1e-3}}};
  const auto bs = find_ingap_bs(atom, res, 2.3, 10.0);
  REQUIRE(bs.has_value());
  CHECK(std::abs(bs->omega_bs - 4.0) < 1e-6);
  CHECK(bs->normalization == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(bs->assembled()(0)) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("gap intervals touching a band are rejected") {
  const auto res = BathResolvent::finite(build_chain(101, 1.0, 0.0, Boundary::open));
  GiantAtom atom{2.5, {{50, 0.3}}};
  CHECK_THROWS_AS(find_ingap_bs(atom, res, 1.5, 5.0), Error);
  try {
    find_ingap_bs(atom, res, 1.5, 5.0);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::not_a_gap);
  }
}

TEST_CASE("at most one bound state per gap on a two-gap lattice") {
  const auto bath = dimerized_chain(100, 1.0, 0.5);
  const auto res = BathResolvent::finite(bath);
  const auto bands = res.band_intervals();
  REQUIRE(bands.size() == 2);
  const std::vector<std::pair<double, double>> gaps = {
      {-6.0, bands[0].first - 0.1}, {bands[0].second + 0.1, bands[1].first - 0.1}, {bands[1].second + 0.1, 6.0}};
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> uw(-3.0, 3.0), ug(0.05, 0.8);
  std::uniform_int_distribution<int> us(60, 140), ud(1, 5);
  for (int trial = 0; trial < 50; ++trial) {
    const int x = us(rng);
    GiantAtom atom{uw(rng), {{x, ug(rng)}, {x + ud(rng), ug(rng)}}};
    const auto chi = site_state(atom);
    for (const auto& [lo, hi] : gaps) {
      int sign_changes = 0;
      double prev = NAN;
      for (int i = 0; i <= 200; ++i) {
        const double w = lo + (hi - lo) * i / 200.0;
        const double f = pole_function(atom, res, ResolventQuery::gap(w)).real();
        if (!std::isnan(prev)) {
          CHECK(f > prev);
          if ((f > 0) != (prev > 0)) ++sign_changes;
        }
        prev = f;
      }
      CHECK(sign_changes <= 1);
      const auto bs = find_ingap_bs(atom, res, lo, hi);
      CHECK(bs.has_value() == (sign_changes == 1));
      if (bs) CHECK(bs->residual < 1e-8);
    }
  }
}

TEST_CASE("in-band bound state of a two-point chain atom at k0 d = pi") {
  const int L = 2001;
  const auto bath = build_chain(L, 1.0, 0.0, Boundary::open);
  const auto res = BathResolvent::finite(bath);
  const int x = 1000;
  GiantAtom atom{0.0, {{x, 0.05}, {x + 2, 0.05}}};
  const auto r = find_inband_bs(atom, res, -1.9, 1.9);
  REQUIRE(r.states.size() == 1);
  const auto& bs = r.states[0];
  CHECK(std::abs(bs.omega_bs) < 1e-9);
  CHECK(bs.residual < 1e-8);
  // confined between the coupling points: -(g/J) on the middle cavity for k0 = pi/2
  for (int n = 0; n < L; ++n)
    if (n != x + 1) CHECK(std::abs(bs.photon_amplitudes(n)) < 1e-8);
  CHECK(std::abs(std::abs(bs.photon_amplitudes(x + 1)) - 0.05) < 1e-8);
}

TEST_CASE("in-band search is empty for normal atoms and unequal couplings") {
  const auto bath = build_chain(2001, 1.0, 0.0, Boundary::open);
  const auto res = BathResolvent::finite(bath);
  CHECK(find_inband_bs(GiantAtom{0.3, {{1000, 0.05}}}, res, -1.9, 1.9).states.empty());
  const double theta = 0.6;
  GiantAtom unequal{0.0, {{1000, 0.05 * std::cos(theta)}, {1002, 0.05 * std::sin(theta)}}};
  CHECK(find_inband_bs(unequal, res, -1.9, 1.9).states.empty());
}

TEST_CASE("bs_wavefunction refuses a stale root") {
  const auto res = BathResolvent::finite(build_chain(101, 1.0, 0.0, Boundary::open));
  GiantAtom atom{2.5, {{50, 0.3}}};
  try {
    bs_wavefunction(atom, res, ResolventQuery::gap(3.0), BSClass::in_gap);
    FAIL("expected stale root");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::stale_root);
  }
}

TEST_CASE("weak-coupling bound state: gap, normal atom in band, Lieb string") {
  const auto chain = BathResolvent::finite(build_chain(1001, 1.0, 0.0, Boundary::open));
  CHECK(weak_coupling_bs(GiantAtom{2.6, {{500, 0.05}}}, chain).has_value());
  CHECK(!weak_coupling_bs(GiantAtom{0.4, {{500, 0.05}}}, chain).has_value());

  const auto lieb = build_lieb_nnn(20, 20, 1.0, Boundary::open);
  const double g = 0.02;
  const auto atom = lieb_string_atom(lieb, 7, 10, 5, true, g, -1.0);
  const auto res = BathResolvent::finite(lieb);
  const auto bs = weak_coupling_bs(atom, res);
  REQUIRE(bs.has_value());
  const VectorXc ref = lieb_string_state(lieb, 7, 10, 5, true);
  const cplx overlap = ref.dot(bs->photon_amplitudes);
  CHECK(std::abs(std::abs(overlap) - 2.0 * g) < 1e-10);
  CHECK(std::abs(std::norm(overlap) - bs->photon_amplitudes.squaredNorm()) < 1e-14);
}

TEST_CASE("projected bath of a normal atom is the vacancy Hamiltonian") {
  const auto bath = build_graphene(4, 4, 1.0, 0.0, Boundary::open);
  GiantAtom atom{0.0, {{9, 0.1}}};
  const auto pb = projected_bath(atom, bath);
  const auto a = diagonalize_hermitian(pb.hamiltonian);
  const auto b = diagonalize(apply_vacancy(bath, 9));
  CHECK((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff() < 1e-12);
  // interlacing with the full bath spectrum
  const auto full = diagonalize(bath);
  for (int i = 0; i < a.size(); ++i) {
    CHECK(full.eigenvalues(i) <= a.eigenvalues(i) + 1e-12);
    CHECK(a.eigenvalues(i) <= full.eigenvalues(i + 1) + 1e-12);
  }
}

TEST_CASE("graphene three-point atom: the trapped site is an eigenstate of the projected bath") {
  const auto bath = build_graphene(6, 6, 1.0, 0.0, Boundary::open);
  const auto atom = graphene_three_point(bath, 3, 3, graphene_a, 0.1, 0.0);
  const auto pb = projected_bath(atom, bath);
  VectorXc zero = VectorXc::Zero(bath.n_sites());
  zero(bath.index({3, 3, graphene_a})) = 1.0;
  const VectorXc local = pb.basis.adjoint() * zero;
  CHECK(std::abs(local.norm() - 1.0) < 1e-12);
  CHECK((pb.hamiltonian * local).norm() < 1e-12);
}

TEST_CASE("VDS search on the reference geometries") {
  SUBCASE("chain k0 d = pi at d = 2 and d = 3, none at d = 3 for k0 = pi/2") {
    const auto bath = build_chain(301, 1.0, 0.0, Boundary::open);
    auto v2 = vds_search(chain_atom(bath, {150, 152}, 0.1, 0.0), bath);
    REQUIRE(v2.size() == 1);
    auto v3 = vds_search(chain_atom(bath, {150, 153}, 0.1, -1.0), bath);
    REQUIRE(v3.size() == 1);
    CHECK(std::abs(std::abs(v3[0].psi_vds(151)) - std::sqrt(0.5)) < 1e-10);
    CHECK(vds_search(chain_atom(bath, {150, 153}, 0.1, 0.0), bath).empty());
    // exactly zero outside the coupling points
    for (int n = 0; n < 301; ++n)
      if (n < 150 || n > 153) CHECK(std::abs(v3[0].psi_vds(n)) < 1e-12);
  }
  SUBCASE("graphene four-point: bonding state with coupling sqrt2 J") {
    const auto bath = build_graphene(9, 9, 1.0, 0.0, Boundary::open);
    const auto v = vds_search(graphene_four_point(bath, 4, 4, 0.1, 1.0), bath);
    REQUIRE(v.size() == 1);
    CHECK(std::abs(v[0].coupling_overlap - std::sqrt(2.0)) < 1e-10);
    CHECK(std::abs(v[0].psi_vds(bath.index({4, 4, graphene_a})) - std::sqrt(0.5)) < 1e-10);
    CHECK(std::abs(v[0].psi_vds(bath.index({4, 4, graphene_b})) - std::sqrt(0.5)) < 1e-10);
  }
  SUBCASE("Lieb string of length 11 has nodes at 3, 6, 9") {
    const auto bath = build_lieb_nnn(14, 7, 1.0, Boundary::open);
    const auto v = vds_search(lieb_string_atom(bath, 2, 3, 11, true, 0.1, -1.0), bath);
    REQUIRE(v.size() == 1);
    const VectorXc ref = lieb_string_state(bath, 2, 3, 11, true);
    CHECK(std::norm(ref.dot(v[0].psi_vds)) > 1 - 1e-12);
    for (const SiteLabel& node : {SiteLabel{4, 3, lieb_a}, SiteLabel{5, 3, lieb_b}, SiteLabel{7, 3, lieb_a}})
      CHECK(std::abs(v[0].psi_vds(bath.index(node))) < 1e-12);
    CHECK(std::abs(std::abs(v[0].psi_vds(bath.index({3, 3, lieb_a}))) - 1.0 / std::sqrt(8.0)) < 1e-10);
  }
}

TEST_CASE("VDS invariants on every discovered state") {
  std::vector<std::pair<BathGraph, GiantAtom>> cases;
  {
    auto b = build_graphene(8, 8, 1.0, 0.0, Boundary::open);
    auto a = graphene_three_point(b, 4, 4, graphene_b, 0.1, 0.0);
    cases.emplace_back(b, a);
  }
  {
    auto b = build_square(15, 15, 1.0, 0.0, Boundary::open);
    auto a = square_diamond(b, 7, 7, 3, 0.1, 0.0);
    cases.emplace_back(b, a);
  }
  {
    auto b = build_lieb_nnn(10, 10, 1.0, Boundary::open);
    auto a = lieb_string_atom(b, 5, 2, 5, false, 0.1, -1.0);
    cases.emplace_back(b, a);
  }
  for (const auto& [bath, atom] : cases) {
    const auto found = vds_search(atom, bath);
    REQUIRE(found.size() == 1);
    const auto& v = found[0];
    const int n = bath.n_sites();
    CHECK(std::abs(site_state(atom).dense(n).dot(v.psi_vds)) < 1e-10);
    const VectorXc hpsi = apply_hamiltonian(bath, v.psi_vds);
    const VectorXc chi = site_state(atom).dense(n);
    // H_B psi = omega0 psi + c chi
    CHECK((hpsi - atom.omega0 * v.psi_vds - v.coupling_overlap * chi).norm() < 1e-8);
    CHECK(std::abs(v.eta + effective_strength(atom) / v.coupling_overlap) < 1e-14);
    CHECK(v.theta == doctest::Approx(std::atan(std::abs(v.eta))));
    for (double r : v.check_residuals) CHECK(r < 1e-8);
    CHECK(v.localization.localized);
    CHECK(eigen_residual(bath, atom, v.dressed_state(), atom.omega0) < 1e-8);
  }
}

TEST_CASE("weak-coupling bound state is parallel to the VDS with coefficient -gbar / c") {
  const auto bath = build_chain(801, 1.0, 0.0, Boundary::open);
  const auto res = BathResolvent::finite(bath);
  const auto atom = chain_atom(bath, {400, 406}, 0.01, 0.0);
  const auto v = vds_search(atom, bath);
  REQUIRE(v.size() == 1);
  const auto bs = weak_coupling_bs(atom, res);
  REQUIRE(bs.has_value());
  const VectorXc expect = v[0].weak_coupling_photon();
  CHECK(std::abs(expect.dot(bs->photon_amplitudes)) / (expect.norm() * bs->photon_amplitudes.norm()) ==
        doctest::Approx(1.0).epsilon(1e-8));
  CHECK((bs->photon_amplitudes - expect).norm() < 1e-10);
}

TEST_CASE("localization check: plane waves fail, finite support passes, sizes agree") {
  const auto bath = build_chain(200, 1.0, 0.0, Boundary::periodic);
  VectorXc wave(200);
  for (int n = 0; n < 200; ++n) wave(n) = std::exp(kI * 0.3 * double(n));
  CHECK(localization_check(wave, bath).inconclusive);
  const auto open = build_chain(200, 1.0, 0.0, Boundary::open);
  CHECK(!localization_check(wave, open).localized);

  // a VDS found on a lattice and on one 1.5x larger carries the same interior weight
  auto weight = [](int cells) {
    const auto b = build_graphene(cells, cells, 1.0, 0.0, Boundary::open);
    const int c = cells / 2;
    const auto v = vds_search(graphene_three_point(b, c, c, graphene_a, 0.1, 0.0), b);
    return v.at(0).localization.boundary_weight;
  };
  CHECK(std::abs(weight(8) - weight(12)) < 10 * tol::localization);
  CHECK(weight(8) < 1e-20);
}

TEST_CASE("weak-coupling consistency between the in-band scan and the perturbative test") {
  const auto res = BathResolvent::analytic_chain(build_chain(2001, 1.0, 0.0, Boundary::open));
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> ud(1, 6);
  std::uniform_real_distribution<double> uk(0.3, 2.8);
  for (int trial = 0; trial < 12; ++trial) {
    const int d = ud(rng);
    // alternate exact k0 d = pi geometries with generic ones
    const double k0 = trial % 2 == 0 ? kPi / d * (d == 1 ? 0.5 : 1.0) : uk(rng);
    const double w0 = -2.0 * std::cos(k0);
    GiantAtom atom{w0, {{1000, 0.01 / std::sqrt(2.0)}, {1000 + d, 0.01 / std::sqrt(2.0)}}};
    const double lo = std::max(-1.95, w0 - 0.3), hi = std::min(1.95, w0 + 0.3);
    const auto scan = find_inband_bs(atom, res, lo, hi, InbandOptions{120, 0.0, -1.0, Backend::analytic_chain});
    const auto weak = weak_coupling_bs(atom, res);
    INFO("d = ", d, " k0 = ", k0, " near misses ", scan.near_misses.size());
    CHECK(scan.states.empty() == !weak.has_value());
    for (const auto& s : scan.states) CHECK(std::abs(s.omega_bs - w0) <= 1e-3);
  }
}
