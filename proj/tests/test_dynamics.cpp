#include <cmath>
#include <random>

#include "doctest.h"
#include "gla/dynamics.hpp"
#include "gla/geometry.hpp"

using namespace gla;

namespace {

constexpr int kChain = 2001;
constexpr int kMid = 1000;

EmitterEnsemble chain_pair(const BathGraph& bath, int a1, int a2, int b1, int b2, double gbar, double theta,
                           double omega0) {
  return {{chain_pair_atom(bath, a1, a2, gbar, theta, omega0), chain_pair_atom(bath, b1, b2, gbar, theta, omega0)}};
}

const BathResolvent& analytic_chain() {
  static const BathResolvent res = BathResolvent::analytic_chain(build_chain(kChain, 1.0, 0.0, Boundary::open));
  return res;
}

const BathResolvent& finite_chain() {
  static const BathResolvent res = BathResolvent::finite(build_chain(kChain, 1.0, 0.0, Boundary::open));
  return res;
}

MatrixXc rates_b(const MatrixXc& k, const MatrixXc& gamma) { return 0.5 * gamma + kI * k; }

}  // namespace

TEST_CASE("braided chain rates match the closed form") {
  const auto& res = analytic_chain();
  const double gbar = 0.1;
  for (double theta : {kPi / 4, 0.3, 1.1})
    for (double k0 : {kPi / 2, 1.0, 2.2}) {
      const double w0 = -2.0 * std::cos(k0);
      const auto ens = chain_pair(res.bath(), kMid, kMid + 3, kMid + 1, kMid + 4, gbar, theta, w0);
      const auto r = rates_green(ens, res);
      const auto ref = braided_rates_closed_form(theta, k0, 3, 1, gbar, 1.0);
      CHECK(std::abs(r.K(0, 1) - ref.K12) < 1e-10);
      CHECK(std::abs(r.gamma(0, 1) - ref.gamma12) < 1e-10);
      CHECK(std::abs(r.gamma(0, 0) - ref.gamma11) < 1e-10);
      CHECK(std::abs(r.gamma(1, 1) - ref.gamma11) < 1e-10);
    }
}

TEST_CASE("finite chain rates agree with the infinite chain") {
  const double gbar = 0.1;
  for (double theta : {kPi / 4, 0.5}) {
    const auto ens = chain_pair(finite_chain().bath(), kMid, kMid + 2, kMid + 1, kMid + 3, gbar, theta, 0.0);
    const auto r = rates_green(ens, finite_chain());
    const auto ref = braided_rates_closed_form(theta, kPi / 2, 2, 1, gbar, 1.0);
    const double scale = gbar * gbar;
    CHECK(std::abs(r.K(0, 1) - ref.K12) < 0.02 * scale);
    CHECK(std::abs(r.gamma(0, 1) - ref.gamma12) < 0.02 * scale);
    CHECK(std::abs(r.gamma(0, 0) - ref.gamma11) < 0.02 * scale);
  }
}

TEST_CASE("rate matrices are Hermitian and reconstruct B") {
  const auto& res = analytic_chain();
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> ut(0.05, 1.5), uk(0.2, 2.9);
  for (int trial = 0; trial < 20; ++trial) {
    const double theta = ut(rng), k0 = uk(rng);
    EmitterEnsemble ens{{chain_pair_atom(res.bath(), kMid, kMid + 4, 0.1, theta, -2 * std::cos(k0)),
                         chain_pair_atom(res.bath(), kMid + 2, kMid + 7, 0.07, ut(rng), -2 * std::cos(k0)),
                         chain_atom(res.bath(), {kMid - 3}, 0.05, -2 * std::cos(k0))}};
    const auto r = rates_green(ens, res);
    CHECK((r.K - r.K.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((r.gamma - r.gamma.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((rates_b(r.K, r.gamma) - r.B).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(r.gamma_psd);
    CHECK(r.nonuniform_gbar);
    // K - i gamma / 2 is gbar_j gbar_j' G
    const MatrixXc g = r.K - 0.5 * kI * r.gamma;
    CHECK(std::abs(g(0, 1) - 0.1 * 0.07 * analytic_chain().between(site_state(ens.atoms[0]),
                                                               site_state(ens.atoms[1]),
                                                               ResolventQuery::bound(-2 * std::cos(k0), Backend::analytic_chain))) < 1e-14);
  }
}

TEST_CASE("normal-atom pair on a chain: cosine and sine of the phase") {
  const auto& res = analytic_chain();
  const double g = 0.1, k0 = 1.2;
  for (int s : {1, 2, 5}) {
    EmitterEnsemble ens{{chain_atom(res.bath(), {kMid}, g, -2 * std::cos(k0)),
                         chain_atom(res.bath(), {kMid + s}, g, -2 * std::cos(k0))}};
    const auto r = rates_green(ens, res);
    const double v = 2 * std::sin(k0);
    CHECK(std::abs(r.gamma(0, 1) - 2 * g * g / v * std::cos(k0 * s)) < 1e-12);
    CHECK(std::abs(r.K(0, 1) - g * g / v * std::sin(k0 * s)) < 1e-12);
    CHECK(std::abs(r.gamma(0, 0) - 2 * g * g / v) < 1e-12);
  }
}

TEST_CASE("spectral route agrees with the resolvent route") {
  const auto spec = chain_spec(1.0, 0.0);
  const auto bath = build_chain(400, 1.0, 0.0, Boundary::periodic);
  const auto bands = band_structure(spec, 6000, 1);
  const auto& res = analytic_chain();
  for (double theta : {kPi / 4, 0.5}) {
    const auto ens = chain_pair(bath, 100, 103, 101, 104, 0.1, theta, -1.0);
    const auto spectral = rates_spectral(ens, bath, bands);
    const auto exact = rates_green(chain_pair(res.bath(), kMid, kMid + 3, kMid + 1, kMid + 4, 0.1, theta, -1.0), res);
    const double scale = exact.B.cwiseAbs().maxCoeff();
    CHECK((spectral.K - exact.K).cwiseAbs().maxCoeff() < 0.02 * scale);
    CHECK((spectral.gamma - exact.gamma).cwiseAbs().maxCoeff() < 0.02 * scale);
    CHECK(spectral.gamma(0, 0).real() >= -1e-12);
  }
}

TEST_CASE("closed forms reject degenerate geometries") {
  CHECK_THROWS_AS(braided_rates_closed_form(0.3, kPi / 2, 2, 2, 0.1, 1.0), Error);
  CHECK_THROWS_AS(braided_rates_closed_form(0.3, 0.0, 2, 1, 0.1, 1.0), Error);
  CHECK_THROWS_AS(chain_decay_closed_form(0.3, kPi / 2, 0, 0.1, 1.0), Error);
}

TEST_CASE("decoherence-free chain configurations") {
  const auto& res = analytic_chain();
  const auto& bath = res.bath();
  const double gbar = 0.05;
  struct Case {
    int a1, a2, b1, b2;
    bool zero_interaction;
  };
  // braided, serial, nested
  for (const Case& c : {Case{0, 2, 1, 3, false}, Case{0, 2, 3, 5, true}, Case{0, 6, 1, 3, true}}) {
    const auto ens = chain_pair(bath, kMid + c.a1, kMid + c.a2, kMid + c.b1, kMid + c.b2, gbar, kPi / 4, 0.0);
    const auto r = rates_green(ens, res);
    const auto dfh = dfh_check(r, ens, res);
    CHECK(dfh.is_dfh);
    CHECK(dfh.consistent);
    CHECK(dfh.per_atom_bs_exists == std::vector<bool>{true, true});
    CHECK(dfh.zero_interaction_pairs.empty() == !c.zero_interaction);
    const auto heff = heff_from_bs(ens, dfh.bound_states);
    CHECK(heff.reciprocity_error < 1e-12);
    CHECK(std::abs(heff.K(0, 1) - r.K(0, 1)) < 1e-10);
    if (c.zero_interaction) CHECK(std::abs(r.K(0, 1)) < 1e-12);
  }
  const auto braided = rates_green(chain_pair(bath, kMid, kMid + 2, kMid + 1, kMid + 3, gbar, kPi / 4, 0.0), res);
  CHECK(std::abs(braided.K(0, 1) - gbar * gbar / 2.0) < 1e-12);

  const auto generic = chain_pair(bath, kMid, kMid + 2, kMid + 1, kMid + 3, gbar, 0.4, 0.0);
  const auto dfh = dfh_check(rates_green(generic, res), generic, res);
  CHECK(!dfh.is_dfh);
  CHECK(dfh.consistent);
  CHECK(dfh.per_atom_bs_exists == std::vector<bool>{false, false});
  CHECK_THROWS_AS(heff_from_bs(generic, dfh.bound_states), Error);
}

TEST_CASE("decoherence-free iff every atom has a bound state") {
  const auto& res = analytic_chain();
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> ut(0.1, 1.4), uk(0.3, 2.8);
  std::uniform_int_distribution<int> ud(1, 5), um(0, 2);
  int dfh_count = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int d = ud(rng);
    double theta = ut(rng), k0 = uk(rng);
    if (trial % 2 == 0 && d >= 2) {
      // exact points: theta = pi/4 and k0 d an odd multiple of pi below d pi
      theta = kPi / 4;
      const int odd = 2 * (um(rng) % ((d + 1) / 2)) + 1;
      k0 = odd * kPi / d;
    }
    if (!(k0 > 0.0 && k0 < kPi)) continue;
    const double w0 = -2.0 * std::cos(k0);
    const auto ens = chain_pair(res.bath(), kMid, kMid + d, kMid + 11, kMid + 11 + d, 0.05, theta, w0);
    const auto dfh = dfh_check(rates_green(ens, res), ens, res);
    const bool all_bs = dfh.per_atom_bs_exists[0] && dfh.per_atom_bs_exists[1];
    CHECK(dfh.is_dfh == all_bs);
    const bool exact_point = std::abs(theta - kPi / 4) < 1e-15 && std::abs(std::cos(k0 * d) + 1.0) < 1e-12;
    CHECK(dfh.is_dfh == exact_point);
    dfh_count += dfh.is_dfh;
  }
  CHECK(dfh_count > 5);
}

TEST_CASE("braided exchange is first-order robust in theta") {
  const auto& res = analytic_chain();
  auto at = [&](double theta) {
    return rates_green(chain_pair(res.bath(), kMid, kMid + 2, kMid + 1, kMid + 3, 0.1, theta, 0.0), res);
  };
  const double h = 1e-3;
  const auto plus = at(kPi / 4 + h), minus = at(kPi / 4 - h), mid = at(kPi / 4);
  const double dk = std::abs(plus.K(0, 1) - minus.K(0, 1)) / (2 * h);
  const double dg = std::abs(plus.gamma(0, 0) - minus.gamma(0, 0)) / (2 * h);
  CHECK(dk < 1e-8);
  CHECK(dg < 1e-8);
  CHECK(std::abs(plus.gamma(0, 0)) < 0.01 * 2 * h * h * 10);
  CHECK(std::abs(mid.gamma(0, 0)) < 1e-14);
}

TEST_CASE("Lindblad: exponential decay, exchange oscillation, conservation") {
  std::vector<double> t;
  for (int i = 0; i <= 50; ++i) t.push_back(0.2 * i);

  SUBCASE("single atom decays as exp(-gamma t)") {
    const double gamma = 0.3;
    MatrixXc b(1, 1);
    b(0, 0) = 0.5 * gamma;
    const auto tr = lindblad_evolve(single_excitation_density(1, 0), RateMatrices::from_b(b), 0.0, t);
    for (std::size_t i = 0; i < t.size(); ++i) {
      CHECK(std::abs(tr.populations[i][0] - std::exp(-gamma * t[i])) < 1e-7);
      CHECK(std::abs(tr.trace[i] - 1.0) < 1e-10);
      CHECK(tr.min_eigenvalue[i] > -1e-10);
    }
  }
  SUBCASE("decoherence-free pair exchanges the excitation as cos^2") {
    const double kappa = 0.4;
    MatrixXc b = MatrixXc::Zero(2, 2);
    b(0, 1) = b(1, 0) = kI * kappa;
    const auto tr = lindblad_evolve(single_excitation_density(2, 0), RateMatrices::from_b(b), 0.0, t);
    for (std::size_t i = 0; i < t.size(); ++i) {
      CHECK(std::abs(tr.populations[i][0] - std::pow(std::cos(kappa * t[i]), 2)) < 1e-7);
      CHECK(std::abs(tr.populations[i][0] + tr.populations[i][1] - 1.0) < 1e-9);
    }
  }
  SUBCASE("zero rates leave the state unchanged") {
    const MatrixXc rho0 = single_excitation_density(3, 1);
    const auto tr = lindblad_evolve(rho0, RateMatrices::from_b(MatrixXc::Zero(3, 3)), 0.0, t);
    CHECK((tr.states.back() - rho0).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("superradiant pair keeps the trace and positivity") {
    MatrixXc b(2, 2);
    b << 0.2, 0.15 + 0.05 * kI, 0.15 + 0.05 * kI, 0.2;
    MatrixXc rho0 = MatrixXc::Zero(4, 4);
    rho0(3, 3) = 1.0;
    const auto tr = lindblad_evolve(rho0, RateMatrices::from_b(b), 0.0, t);
    for (std::size_t i = 0; i < t.size(); ++i) {
      CHECK(std::abs(tr.trace[i] - 1.0) < 1e-10);
      CHECK(tr.min_eigenvalue[i] > -1e-10);
      CHECK((tr.states[i] - tr.states[i].adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("invalid initial states are rejected") {
    MatrixXc bad = MatrixXc::Identity(2, 2);
    MatrixXc b = MatrixXc::Zero(1, 1);
    CHECK_THROWS_AS(lindblad_evolve(bad, RateMatrices::from_b(b), 0.0, t), Error);
  }
}

TEST_CASE("exact single-excitation evolution") {
  const auto bath = build_chain(401, 1.0, 0.0, Boundary::open);
  std::vector<double> t;
  for (int i = 0; i <= 40; ++i) t.push_back(2.0 * i);
  auto excited = [&](int na) {
    VectorXc v = VectorXc::Zero(na + bath.n_sites());
    v(0) = 1.0;
    return v;
  };

  SUBCASE("uncoupled emitter keeps its amplitude") {
    EmitterEnsemble ens{{chain_atom(bath, {200}, 1e-12, 0.3)}};
    const auto tr = exact_1ex_evolve(bath, ens, excited(1), t);
    for (const auto& a : tr.emitter_amplitudes) CHECK(std::abs(std::norm(a(0)) - 1.0) < 1e-12);
  }
  SUBCASE("norm is conserved and the horizon is reported") {
    EmitterEnsemble ens{{chain_atom(bath, {200}, 0.2, 0.0)}};
    const auto tr = exact_1ex_evolve(bath, ens, excited(1), t);
    for (const auto& s : tr.states) CHECK(std::abs(s.norm() - 1.0) < 1e-10);
    CHECK(tr.horizon == doctest::Approx(100.0));
    CHECK(tr.horizon_violated == false);
    // Markovian decay at gamma = 2 g^2 / v
    for (std::size_t i = 0; i < t.size(); ++i)
      CHECK(std::abs(std::norm(tr.emitter_amplitudes[i](0)) - std::exp(-0.04 * t[i])) < 0.03);
  }
  SUBCASE("a decoherence-free giant atom settles on cos^4 theta") {
    const double g = 0.1;
    EmitterEnsemble ens{{chain_atom(bath, {200, 202}, g, 0.0)}};
    const auto tr = exact_1ex_evolve(bath, ens, excited(1), t);
    const double cos2 = 1.0 / (1.0 + g * g);
    CHECK(std::abs(std::norm(tr.emitter_amplitudes.back()(0)) - cos2 * cos2) < 1e-2);
  }
  SUBCASE("evolving past the horizon sets a warning") {
    EmitterEnsemble ens{{chain_atom(bath, {200}, 0.2, 0.0)}};
    const auto tr = exact_1ex_evolve(bath, ens, excited(1), {0.0, 150.0});
    CHECK(tr.horizon_violated);
    CHECK(!tr.warning.empty());
  }
}
