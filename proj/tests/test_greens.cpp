#include <cmath>
#include <random>

#include "doctest.h"
#include "gla/greens.hpp"

using namespace gla;

TEST_CASE("two-site graph resolvent matches the hand inversion") {
  const double J = 1.0;
  auto bath = make_bath({{0, 0, 0}, {1, 0, 0}}, {0.0, 0.0}, {{0, 1, -J}}, Boundary::open);
  const auto res = BathResolvent::finite(bath);
  // (z - H)^-1 = [[z, -J], [-J, z]] / (z^2 - J^2) for H = [[0, -J], [-J, 0]]
  const double w = 0.3;
  CHECK(std::abs(res.element(0, 0, ResolventQuery::bound(w)) - w / (w * w - J * J)) < 1e-12);
  CHECK(std::abs(res.element(0, 1, ResolventQuery::bound(w)) - (-J) / (w * w - J * J)) < 1e-12);
  CHECK(std::abs(res.element(0, 0, ResolventQuery::bound(0.0))) < 1e-12);
  CHECK(std::abs(res.element(0, 1, ResolventQuery::bound(0.0)) - 1.0 / J) < 1e-12);
  // two levels 2J apart cannot be certified as a gap by the five-spacing rule
  CHECK_THROWS_AS(res.element(0, 0, ResolventQuery::gap(w)), Error);
}

TEST_CASE("analytic chain closed form at the band centre") {
  CHECK(std::abs(bath_green_chain_analytic(0, 0, 0.0, 1.0) - cplx(0, -0.5)) < 1e-14);
  CHECK(std::abs(bath_green_chain_analytic(3, 5, 0.0, 1.0) - cplx(0, 0.5)) < 1e-14);
  CHECK_THROWS_AS(bath_green_chain_analytic(0, 0, 2.0, 1.0), Error);
  // complex-z form agrees with the in-band closed form on the real axis
  for (double w : {-1.7, -0.4, 0.9, 1.5})
    for (int d = 0; d < 6; ++d)
      CHECK(std::abs(chain_green(0, d, w, 1.0) - bath_green_chain_analytic(0, d, w, 1.0)) < 1e-12);
  // and equals -(i/v) e^{i k0 |d|}
  const double k0 = 1.1, v = 2 * std::sin(k0);
  CHECK(std::abs(bath_green_chain_analytic(2, 6, -2 * std::cos(k0), 1.0) +
                 kI / v * std::exp(kI * k0 * 4.0)) < 1e-12);
}

TEST_CASE("finite chain agrees with the analytic chain inside the band") {
  const int L = 2001;
  const auto bath = build_chain(L, 1.0, 0.0, Boundary::open);
  BathResolvent::Options o;
  o.analytic = true;
  const BathResolvent res(bath, o);
  const int mid = L / 2;
  for (double w : {-1.5, -0.6, 0.0, 0.7, 1.3}) {
    for (int d : {0, 3, 10, 20}) {
      const auto r = res.evaluate(SparseState{{mid}, {1.0}}, SparseState{{mid + d}, {1.0}},
                                  ResolventQuery::richardson(w));
      const cplx exact = bath_green_chain_analytic(0, d, w, 1.0);
      CHECK(std::abs(r.value - exact) / std::abs(exact) < 1e-2);
      if (d <= 3) CHECK(r.converged);
    }
  }
}

TEST_CASE("gap queries: far above the band and certification") {
  const auto res = BathResolvent::finite(build_chain(101, 1.0, 0.0, Boundary::open));
  const cplx g = res.element(50, 50, ResolventQuery::gap(10.0));
  CHECK(std::abs(g.imag()) < 1e-15);
  CHECK(g.real() * 10.0 == doctest::Approx(1.0).epsilon(2e-2));
  CHECK_THROWS_AS(res.element(50, 50, ResolventQuery::gap(0.0)), Error);
  CHECK(res.in_gap(2.5));
  CHECK(!res.in_gap(0.01));
}

TEST_CASE("large-|z| asymptotics") {
  const auto res = BathResolvent::finite(build_graphene(4, 4, 1.0, 0.0, Boundary::open));
  const cplx z(1e4, 3e3);
  for (int x : {0, 5, 17}) CHECK(std::abs(z * res.between_z({{x}, {1.0}}, {{x}, {1.0}}, z, Backend::finite_spectral) - 1.0) < 1e-3);
}

TEST_CASE("assembled total resolvent equals the dense inverse") {
  const auto bath = build_chain(11, 1.0, 0.0, Boundary::open);
  const auto res = BathResolvent::finite(bath);
  GiantAtom atom{0.4, {{2, 0.3}, {6, cplx(0.2, -0.1)}}};
  EmitterEnsemble ens{{atom}};
  const MatrixXc h = total_hamiltonian_1ex(bath, ens);
  const cplx z(3.0, 0.1);
  const auto tg = total_green(res, atom, z);
  const MatrixXc direct = (z * MatrixXc::Identity(12, 12) - h).inverse();
  CHECK((tg.assembled() - direct).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("gap monotonicity of the self-energy") {
  const auto bath = build_chain(101, 1.0, 0.0, Boundary::open);
  const auto res = BathResolvent::finite(bath);
  GiantAtom atom{0.0, {{40, 0.1}, {43, 0.1}}};
  const auto chi = site_state(atom);
  for (double w = 2.2; w < 5.0; w += 0.1) {
    const double a = res.between(chi, chi, ResolventQuery::gap(w)).real();
    const double b = res.between(chi, chi, ResolventQuery::gap(w + 1e-6)).real();
    CHECK(b - a <= 0.0);
  }
}

TEST_CASE("self-energy of a two-point chain atom") {
  const auto chain = BathResolvent::analytic_chain(build_chain(64, 1.0, 0.0, Boundary::open));
  const double k0 = 0.8;
  const double w = -2 * std::cos(k0), v = 2 * std::sin(k0);
  GiantAtom atom{w, {{10, 0.1}, {14, 0.1}}};
  const auto s = self_energy(atom, chain, ResolventQuery::bound(w, Backend::analytic_chain));
  CHECK(std::abs(s.value - (-kI / v) * (1.0 + std::exp(kI * k0 * 4.0))) < 1e-12);
  GiantAtom vds{0.0, {{10, 0.1}, {12, 0.1}}};
  CHECK(std::abs(self_energy(vds, chain, ResolventQuery::bound(0.0, Backend::analytic_chain)).value) < 1e-14);
}

TEST_CASE("Bloch backend equals the finite backend on a periodic lattice") {
  const auto bath = build_graphene(6, 6, 1.0, 0.0, Boundary::periodic);
  BathResolvent::Options o;
  o.bloch = true;
  const BathResolvent res(bath, o);
  SparseState a{{0, 3}, {0.6, cplx(0, 0.8)}}, b{{7, 20}, {1.0, -1.0}};
  const cplx z(0.37, 0.05);
  CHECK(std::abs(res.between_z(a, b, z, Backend::finite_spectral) - res.between_z(a, b, z, Backend::bloch_sum)) < 1e-12);
  const VectorXc fa = res.apply(b, ResolventQuery::broadened(0.37, 0.05));
  const VectorXc fb = res.apply(b, ResolventQuery::broadened(0.37, 0.05, Backend::bloch_sum));
  CHECK((fa - fb).norm() < 1e-12);
}

TEST_CASE("LDOS of a normal chain atom and the PV self-energy") {
  const int n = 20000;
  const auto bath = build_chain(n, 1.0, 0.0, Boundary::periodic);
  const auto bands = band_structure(*bath.bloch, n, 1);
  GiantAtom atom{0.0, {{0, 0.1}}};
  const auto grid = linspace(-2.5, 2.5, 2001);
  const auto curve = ldos(site_state(atom), bath, bands, grid, default_kernel_width(bands));
  CHECK(std::abs(curve.integral() - 1.0) < 1e-3);
  const double at_half = curve.density[std::lower_bound(grid.begin(), grid.end(), 0.5 - 1e-12) - grid.begin()];
  CHECK(at_half == doctest::Approx(1.0 / (kPi * std::sqrt(4.0 - 0.25))).epsilon(1e-2));
  const auto [re0, im0] = self_energy_re_im(atom, bath, bands, 0.0);
  CHECK(std::abs(re0) < 1e-3);
  CHECK(im0 == doctest::Approx(-0.5).epsilon(1e-3));
  const auto [re1, im1] = self_energy_re_im(atom, bath, bands, 0.9);
  const cplx exact = bath_green_chain_analytic(0, 0, 0.9, 1.0);
  CHECK(std::abs(cplx(re1, im1) - exact) < 1e-2);
}
