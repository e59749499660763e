#include "gla/regression.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include <unistd.h>

#include "gla/boundstates.hpp"
#include "gla/dynamics.hpp"
#include "gla/geometry.hpp"
#include "gla/scenario.hpp"

namespace gla {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Collects named measurements; a row passes when every check does.
class Checks {
 public:
  void expect(bool ok, const std::string& what) { add(ok, what + (ok ? "" : " (false)")); }
  void within(const std::string& name, double value, double expected, double tol) {
    add(std::abs(value - expected) <= tol, name + "=" + num(value) + " vs " + num(expected) + " tol " + num(tol));
  }
  void within_rel(const std::string& name, double value, double expected, double rel) {
    within(name, value, expected, rel * std::abs(expected));
  }
  void at_most(const std::string& name, double value, double bound) {
    add(value <= bound, name + "=" + num(value) + " <= " + num(bound));
  }
  void at_least(const std::string& name, double value, double bound) {
    add(value >= bound, name + "=" + num(value) + " >= " + num(bound));
  }
  void note(const std::string& text) { notes_.push_back(text); }

  bool ok() const { return failures_.empty(); }
  std::string detail() const {
    std::string out;
    auto append = [&](const std::string& s) { out += (out.empty() ? "" : "; ") + s; };
    for (const auto& f : failures_) append("FAILED " + f);
    for (const auto& p : passed_) append(p);
    for (const auto& n : notes_) append(n);
    return out;
  }

 private:
  void add(bool ok, const std::string& text) { (ok ? passed_ : failures_).push_back(text); }
  std::vector<std::string> passed_, failures_, notes_;
};

[[noreturn]] void not_certified(const std::string& what) {
  throw Error(ErrorKind::convergence, what + " was not certified at the requested Im tolerance");
}

template <class T>
T require(std::optional<T> v, const std::string& what) {
  if (!v) not_certified(what);
  return std::move(*v);
}

// Default weak-coupling Im threshold of the resolvent, rescaled.
double im_threshold(const GiantAtom& atom, const BathResolvent& res, double scale) {
  const double eps = res.automatic_epsilon(res.preferred_backend());
  const double gbar = effective_strength(atom), J = res.bath().hopping_scale;
  return scale * std::min(tol::im_tol(eps), tol::inband_root_f * J / (gbar * gbar));
}

// Runs the decoherence-free check; a gamma spectrum that only the unscaled tolerance accepts is a
// resolution problem, not a physics failure.
DFHReport certified_dfh(const RateMatrices& rates, const EmitterEnsemble& ens, const BathResolvent& res,
                        double scale, const std::string& what) {
  DFHReport rep = dfh_check(rates, ens, res, scale);
  const double bound = std::max(rep.dfh_tol, rep.gamma_uncertainty);
  if (rep.is_dfh && rep.max_gamma_eigenvalue > scale * bound)
    not_certified(what + " gamma eigenvalue " + num(rep.max_gamma_eigenvalue));
  for (std::size_t j = 0; j < rep.bound_states.size(); ++j)
    if (rep.is_dfh && !rep.bound_states[j]) not_certified(what + " bound state of atom " + std::to_string(j + 1));
  return rep;
}

double fidelity(const VectorXc& state, const VectorXc& reference) {
  return std::norm(reference.dot(state)) / (state.squaredNorm() * reference.squaredNorm());
}

VectorXc unit_vector(int n, int i) {
  VectorXc v = VectorXc::Zero(n);
  v(i) = 1.0;
  return v;
}

double k_bound_state_route(const DFHReport& rep, const EmitterEnsemble& ens, int j, int k) {
  return heff_from_bs(ens, rep.bound_states).K(j, k).real();
}

const BathResolvent& graphene31() {
  static const BathResolvent res = BathResolvent::finite(build_graphene(31, 31, 1.0, 0.0, Boundary::open));
  return res;
}

constexpr int kChain = 2001;
constexpr int kMid = 1000;

const BathResolvent& chain_finite() {
  static const BathResolvent res = BathResolvent::finite(build_chain(kChain, 1.0, 0.0, Boundary::open));
  return res;
}

const BathResolvent& chain_analytic() {
  static const BathResolvent res = BathResolvent::analytic_chain(build_chain(kChain, 1.0, 0.0, Boundary::open));
  return res;
}

// Two-point chain atom; a coupling that vanishes exactly is dropped.
GiantAtom chain_pair(const BathGraph& bath, int x1, int x2, double gbar, double theta, double omega0) {
  GiantAtom a = chain_pair_atom(bath, x1, x2, gbar, theta, omega0);
  std::erase_if(a.couplings, [](const Coupling& c) { return c.g == 0.0; });
  return a;
}

EmitterEnsemble chain_ensemble(const BathGraph& bath, int a1, int a2, int b1, int b2, double gbar, double theta,
                               double omega0) {
  return {{chain_pair(bath, a1, a2, gbar, theta, omega0), chain_pair(bath, b1, b2, gbar, theta, omega0)}};
}

BathGraph dimerized_chain(int cells, double j1, double j2) {
  std::vector<SiteLabel> labels;
  std::vector<Hopping> bonds;
  for (int i = 0; i < 2 * cells; ++i) {
    labels.push_back({i, 0, 0});
    if (i > 0) bonds.push_back({i - 1, i, cplx(i % 2 == 1 ? -j1 : -j2)});
  }
  return make_bath(labels, std::vector<double>(labels.size(), 0.0), bonds, Boundary::open);
}

// 1. graphene 3-point atom: bound state pinned at the Dirac energy on the trapped site
Checks criterion_graphene3(const RegressionOptions& o) {
  constexpr double kResidual = 1e-8, kFidelity = 1e-8, kAmplitude = 1e-10, kSeconds = 30.0;
  const auto start = std::chrono::steady_clock::now();
  Checks c;
  const double g = 0.05, J = 1.0;
  const auto& res = graphene31();
  const auto& bath = res.bath();
  const GiantAtom atom = graphene_three_point(bath, 15, 15, graphene_a, g, 0.0);
  const auto bs = require(weak_coupling_bs(atom, res, im_threshold(atom, res, o.im_tol_scale)),
                           "graphene 3-point bound state");
  const int trapped = bath.index({15, 15, graphene_a});
  c.within("omega_bs - omega_c", bs.omega_bs, 0.0, 0.0);
  c.at_most("residual/J", bs.residual / J, kResidual);
  c.at_least("fidelity with the trapped site", fidelity(bs.photon_amplitudes, unit_vector(bath.n_sites(), trapped)),
             1.0 - kFidelity);
  c.within("|psi_BS| on the trapped site", std::abs(bs.photon_amplitudes(trapped)), g / J, kAmplitude);
  c.note("signed amplitude " + num(bs.photon_amplitudes(trapped).real()));
  c.at_most("runtime s", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), kSeconds);
  return c;
}

// 2. graphene 4-point atom and the decoherence-free pair
Checks criterion_graphene4(const RegressionOptions& o) {
  constexpr double kOverlap = 1e-10, kFidelity = 1e-8, kNorm = 1e-10, kRelK = 1e-6;
  Checks c;
  const double g = 0.05, J = 1.0, w0 = 1.0;
  const auto& res = graphene31();
  const auto& bath = res.bath();
  const GiantAtom atom = graphene_four_point(bath, 15, 15, g, w0);
  const auto vds = vds_search(atom, bath);
  if (vds.empty()) not_certified("graphene 4-point vacancy-like state");
  c.within("|<chi|H_B|psi+> - sqrt2 J|", std::abs(vds[0].coupling_overlap - std::sqrt(2.0) * J), 0.0, kOverlap);
  VectorXc plus = unit_vector(bath.n_sites(), bath.index({15, 15, graphene_a})) +
                  unit_vector(bath.n_sites(), bath.index({15, 15, graphene_b}));
  plus /= std::sqrt(2.0);
  c.at_least("VDS fidelity with psi+", fidelity(vds[0].psi_vds, plus), 1.0 - kFidelity);
  const auto bs = require(weak_coupling_bs(atom, res, im_threshold(atom, res, o.im_tol_scale)),
                           "graphene 4-point bound state");
  c.at_least("BS fidelity with psi+", fidelity(bs.photon_amplitudes, plus), 1.0 - kFidelity);
  c.within("||psi_BS||", bs.photon_amplitudes.norm(), std::sqrt(2.0) * g / J, kNorm);
  c.note("<psi+|psi_BS> " + num(plus.dot(bs.photon_amplitudes).real()));

  EmitterEnsemble ens{{atom, graphene_four_point(bath, 16, 15, g, w0)}};
  const auto rates = rates_green(ens, res);
  const auto rep = certified_dfh(rates, ens, res, o.im_tol_scale, "graphene 4-point pair");
  c.expect(rep.is_dfh, "is_dfh");
  c.within_rel("K12 bound-state route", k_bound_state_route(rep, ens, 0, 1), g * g / J, kRelK);
  c.note("K12 resolvent route " + num(rates.K(0, 1).real()));
  return c;
}

// 3. braided chain pair at theta = pi/4, k0 d = pi
Checks criterion_braided(const RegressionOptions& o) {
  constexpr double kFiniteRel = 0.02, kAnalytic = 1e-10;
  Checks c;
  const double g = 0.05, gbar = std::sqrt(2.0) * g, J = 1.0, theta = kPi / 4, k0 = kPi / 2;
  const int d = 2, x21 = 1;
  const double v = 2.0 * J * std::sin(k0);
  const double expected = 2.0 * g * g / v * std::sin(k0 * x21);
  c.within("closed form K12", braided_rates_closed_form(theta, k0, d, x21, gbar, J).K12, expected, 1e-14);
  for (const BathResolvent* res : {&chain_finite(), &chain_analytic()}) {
    const bool finite = res == &chain_finite();
    const std::string tag = finite ? " (finite L=2001)" : " (analytic)";
    const auto ens = chain_ensemble(res->bath(), kMid, kMid + d, kMid + x21, kMid + 3, gbar, theta, 0.0);
    const auto rates = rates_green(ens, *res);
    const auto rep = certified_dfh(rates, ens, *res, o.im_tol_scale, "braided pair" + tag);
    c.at_most("max gamma eigenvalue" + tag, rep.max_gamma_eigenvalue, rep.dfh_tol);
    if (finite) c.within_rel("K12" + tag, rates.K(0, 1).real(), expected, kFiniteRel);
    else c.within("K12" + tag, rates.K(0, 1).real(), expected, kAnalytic);
  }
  return c;
}

// 4. serial and nested chain pairs: no interaction, explicit nested cancellation
Checks criterion_serial_nested(const RegressionOptions& o) {
  constexpr double kRelK = 1e-6, kCancel = 1e-10, kNonzero = 1e-3;
  Checks c;
  const double g = 0.05, gbar = std::sqrt(2.0) * g, J = 1.0, k0 = kPi / 2;
  const double kmax = kRelK * g * g / J;
  struct Layout {
    const char* name;
    int a1, a2, b1, b2;
  };
  for (const Layout& l : {Layout{"serial", 0, 2, 3, 5}, Layout{"nested", 0, 6, 1, 3}}) {
    for (const BathResolvent* res : {&chain_finite(), &chain_analytic()}) {
      const bool finite = res == &chain_finite();
      const std::string tag = std::string(" ") + l.name + (finite ? " finite" : " analytic");
      const auto ens = chain_ensemble(res->bath(), kMid + l.a1, kMid + l.a2, kMid + l.b1, kMid + l.b2, gbar,
                                      kPi / 4, 0.0);
      const auto rates = rates_green(ens, *res);
      const auto rep = certified_dfh(rates, ens, *res, o.im_tol_scale, tag.substr(1));
      c.expect(rep.is_dfh, "is_dfh" + tag);
      c.at_most("|K12| bound-state route" + tag, std::abs(k_bound_state_route(rep, ens, 0, 1)), kmax);
      if (!finite) c.at_most("|K12| resolvent route" + tag, std::abs(rates.K(0, 1)), kmax);
      else c.note("finite resolvent-route K12" + tag + " " + num(rates.K(0, 1).real()));
      if (l.name == std::string("nested") && finite) {
        const VectorXc& psi1 = rep.bound_states[0]->photon_amplitudes;
        const VectorXc& psi2 = rep.bound_states[1]->photon_amplitudes;
        const double scale = psi1.cwiseAbs().maxCoeff();
        const cplx at21 = psi1(kMid + l.b1), at22 = psi1(kMid + l.b2);
        c.at_least("|psi1 at x21| / max", std::abs(at21) / scale, kNonzero);
        c.at_least("|psi1 at x22| / max", std::abs(at22) / scale, kNonzero);
        c.at_most("|psi1(x21) + psi1(x22)| / max", std::abs(at21 + at22) / scale, kCancel);
        c.within("sin(k0 x21) + sin(k0 x22)", std::sin(k0 * l.b1) + std::sin(k0 * l.b2), 0.0, 1e-14);
        const double scale2 = psi2.cwiseAbs().maxCoeff();
        c.at_most("|psi2| on atom-1 points / max",
                  std::max(std::abs(psi2(kMid + l.a1)), std::abs(psi2(kMid + l.a2))) / scale2, kCancel);
        c.expect(std::find(rep.zero_interaction_pairs.begin(), rep.zero_interaction_pairs.end(),
                           std::make_pair(0, 1)) != rep.zero_interaction_pairs.end(),
                 "zero-interaction pair (1,2) flagged");
      }
    }
  }
  return c;
}

// 5. square-lattice diamonds
Checks criterion_square(const RegressionOptions& o) {
  constexpr double kBraidedRel = 0.02, kNestedRel = 1e-6;
  Checks c;
  const double g = 0.05, J = 1.0;
  const auto res = BathResolvent::finite(build_square(41, 41, J, 0.0, Boundary::open));
  const auto& bath = res.bath();
  {
    EmitterEnsemble ens{{square_diamond(bath, 18, 20, 3, g, 0.0), square_diamond(bath, 23, 20, 3, g, 0.0)}};
    const auto rates = rates_green(ens, res);
    const auto rep = certified_dfh(rates, ens, res, o.im_tol_scale, "square braided pair");
    c.expect(rep.is_dfh, "braided is_dfh");
    c.within_rel("braided K12", k_bound_state_route(rep, ens, 0, 1), g * g / J, kBraidedRel);
    c.note("braided resolvent-route K12 " + num(rates.K(0, 1).real()));
  }
  {
    EmitterEnsemble ens{{square_diamond(bath, 20, 20, 5, g, 0.0), square_diamond(bath, 20, 20, 3, g, 0.0)}};
    const auto rates = rates_green(ens, res);
    const auto rep = certified_dfh(rates, ens, res, o.im_tol_scale, "square nested pair");
    c.expect(rep.is_dfh, "nested is_dfh");
    c.at_most("|nested K12|", std::abs(k_bound_state_route(rep, ens, 0, 1)), kNestedRel * g * g / J);
  }
  return c;
}

// 6. Lieb strings: vacancy-like state, attractive exchange, crossed strings decouple
Checks criterion_lieb(const RegressionOptions& o) {
  constexpr double kFidelity = 1e-8, kRelK = 0.02, kZeroRel = 1e-6, kAmplitude = 1e-10;
  Checks c;
  const double g = 0.05, J = 1.0, w0 = -J;
  const auto res = BathResolvent::finite(build_lieb_nnn(21, 21, J, Boundary::open));
  const auto& bath = res.bath();
  const GiantAtom a1 = lieb_string_atom(bath, 8, 10, 5, true, g, w0);
  const auto vds = vds_search(a1, bath);
  if (vds.empty()) not_certified("Lieb vacancy-like state");
  c.within("VDS energy", vds[0].energy, w0, 1e-10);
  c.at_least("VDS fidelity with the string state", fidelity(vds[0].psi_vds, lieb_string_state(bath, 8, 10, 5, true)),
             1.0 - kFidelity);
  c.within("max VDS amplitude", vds[0].psi_vds.cwiseAbs().maxCoeff(), 0.5, kAmplitude);
  {
    EmitterEnsemble ens{{a1, lieb_string_atom(bath, 10, 10, 5, true, g, w0)}};
    const auto rates = rates_green(ens, res);
    const auto rep = certified_dfh(rates, ens, res, o.im_tol_scale, "Lieb pair");
    c.expect(rep.is_dfh, "pair is_dfh");
    c.within_rel("pair K12", k_bound_state_route(rep, ens, 0, 1), -g * g / J, kRelK);
  }
  {
    EmitterEnsemble ens{{a1, lieb_string_atom(bath, 10, 8, 5, false, g, w0)}};
    const auto rates = rates_green(ens, res);
    const auto rep = certified_dfh(rates, ens, res, o.im_tol_scale, "Lieb crossed pair");
    c.expect(rep.is_dfh, "crossed is_dfh");
    c.at_most("|crossed K12|", std::abs(k_bound_state_route(rep, ens, 0, 1)), kZeroRel * g * g / J);
  }
  return c;
}

// 7. Lieb size law through the scenario layer
Checks criterion_lieb_lengths(const RegressionOptions&) {
  constexpr double kFidelity = 1e-8, kAmplitude = 1e-10;
  Checks c;
  ScenarioConfig cfg = default_config(ScenarioKind::lieb_pair);
  cfg.outputs = {OutputKind::vds};
  cfg.sweep = SweepConfig{"string_length", {5, 11, 17}};
  const fs::path dir = fs::temp_directory_path() / ("gla-lieb-lengths-" + std::to_string(::getpid()));
  const RunReport report = run_scenario(cfg, dir.string());
  const auto& points = report.json.at("sweep").at("points");
  for (const auto& p : points) {
    const int len = static_cast<int>(p.at("value").get<double>());
    const std::string tag = " L=" + std::to_string(len);
    const auto& list = p.at("results").at("vds");
    c.expect(!list.empty(), "VDS found" + tag);
    for (const auto& h : p.at("headlines"))
      if (h.at("name") == "vds_fidelity_atom1") c.at_least("fidelity" + tag, h.at("value").get<double>(), 1.0 - kFidelity);
  }
  // amplitudes and nodes of each string state directly
  const auto bath = build_lieb_nnn(21, 21, 1.0, Boundary::open);
  for (int len : {5, 11, 17}) {
    const auto vds = vds_search(lieb_string_atom(bath, 2, 10, len, true, 0.05, -1.0), bath);
    if (vds.empty()) {
      c.expect(false, "VDS found at L=" + std::to_string(len));
      continue;
    }
    const VectorXc& psi = vds[0].psi_vds;
    int nonzero = 0;
    double worst = 0.0;
    const double amp = std::sqrt(3.0 / (2.0 * (len + 1)));
    for (int s = 0; s < psi.size(); ++s)
      if (std::abs(psi(s)) > 1e-6) {
        ++nonzero;
        worst = std::max(worst, std::abs(std::abs(psi(s)) - amp));
      }
    c.within("nonzero cavities L=" + std::to_string(len), nonzero, 2.0 * (len + 1) / 3.0, 0.0);
    c.at_most("amplitude deviation L=" + std::to_string(len), worst, kAmplitude);
  }
  for (int len : {7, 9}) {
    ScenarioConfig bad = default_config(ScenarioKind::lieb_pair);
    bad.params["string_length"] = len;
    bool rejected = false;
    try {
      validate_config(bad);
    } catch (const Error& e) {
      rejected = e.kind() == ErrorKind::config_error && std::string(e.what()).find("size law") != std::string::npos;
    }
    c.expect(rejected, "L=" + std::to_string(len) + " rejected by the size law");
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  return c;
}

// 8. two-point decay law over theta and k0 d, plus its stationary point
Checks criterion_decay_law(const RegressionOptions&) {
  constexpr double kFiniteRel = 0.02, kAnalytic = 1e-10, kCurvatureRel = 1e-4, kSlopeRel = 1e-8, kStep = 1e-3;
  Checks c;
  const double gbar = 0.1, J = 1.0;
  const int d = 2;
  double worst_finite = 0.0, worst_analytic = 0.0;
  for (double theta : {0.0, kPi / 8, kPi / 4, 3 * kPi / 8, kPi / 2})
    for (double k0d : {kPi / 2, kPi, 3 * kPi / 2}) {
      const double k0 = k0d / d, v = 2 * J * std::sin(k0), w0 = -2 * J * std::cos(k0);
      const double scale = 2 * gbar * gbar / v;
      const double law = scale * (1 + std::sin(2 * theta) * std::cos(k0d));
      for (const BathResolvent* res : {&chain_finite(), &chain_analytic()}) {
        EmitterEnsemble ens{{chain_pair(res->bath(), kMid, kMid + d, gbar, theta, w0)}};
        const double gamma = rates_green(ens, *res).gamma(0, 0).real();
        if (res == &chain_finite()) worst_finite = std::max(worst_finite, std::abs(gamma - law) / scale);
        else worst_analytic = std::max(worst_analytic, std::abs(gamma - law));
      }
    }
  c.at_most("finite |gamma - law| / (2 gbar^2 / v)", worst_finite, kFiniteRel);
  c.at_most("analytic |gamma - law|", worst_analytic, kAnalytic);

  const auto& res = chain_analytic();
  auto gamma_at = [&](double theta, double k0) {
    EmitterEnsemble ens{{chain_pair(res.bath(), kMid, kMid + d, gbar, theta, -2 * J * std::cos(k0))}};
    return rates_green(ens, res).gamma(0, 0).real();
  };
  const double k0 = kPi / 2, theta = kPi / 4, scale = 2 * gbar * gbar / (2 * J);
  const double g0 = gamma_at(theta, k0);
  const double tp = gamma_at(theta + kStep, k0), tm = gamma_at(theta - kStep, k0);
  const double kp = gamma_at(theta, k0 + kStep), km = gamma_at(theta, k0 - kStep);
  c.at_most("|gamma| at the stationary point", std::abs(g0), kAnalytic);
  c.at_most("|d gamma / d theta| / scale", std::abs(tp - tm) / (2 * kStep) / scale, kSlopeRel);
  c.at_most("|d gamma / d k0| / scale", std::abs(kp - km) / (2 * kStep) / scale, kSlopeRel);
  c.within_rel("d2 gamma / d theta2", (tp - 2 * g0 + tm) / (kStep * kStep), 4 * scale, kCurvatureRel);
  c.within_rel("d2 gamma / d k0^2", (kp - 2 * g0 + km) / (kStep * kStep), d * d * scale, kCurvatureRel);
  return c;
}

// 9. assembled total resolvent against the dense inverse
Checks criterion_resolvent_identity(const RegressionOptions&) {
  constexpr double kEntry = 1e-10, kSeconds = 5.0;
  const auto start = std::chrono::steady_clock::now();
  Checks c;
  const auto bath = build_chain(101, 1.0, 0.0, Boundary::open);
  const auto res = BathResolvent::finite(bath);
  const GiantAtom atom{0.3, {{20, 0.3}, {50, cplx(0.2, -0.1)}, {51, 0.25}}};
  const MatrixXc h = total_hamiltonian_1ex(bath, EmitterEnsemble{{atom}});
  const MatrixXc id = MatrixXc::Identity(h.rows(), h.cols());
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> ure(-3.0, 3.0), uim(0.01, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const cplx z(ure(rng), (i % 2 ? -1.0 : 1.0) * uim(rng));
    const MatrixXc dense = (z * id - h).inverse();
    worst = std::max(worst, (total_green(res, atom, z).assembled() - dense).cwiseAbs().maxCoeff());
  }
  c.at_most("max entry difference", worst, kEntry);
  c.at_most("runtime s", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), kSeconds);
  return c;
}

// 10. at most one root per gap and a strictly increasing pole function
Checks criterion_gap_uniqueness(const RegressionOptions&) {
  constexpr int kConfigs = 50, kGrid = 200;
  Checks c;
  struct Lattice {
    const char* name;
    BathGraph bath;
  };
  std::vector<Lattice> lattices;
  lattices.push_back({"chain", build_chain(80, 1.0, 0.0, Boundary::open)});
  lattices.push_back({"dimerized chain", dimerized_chain(60, 1.0, 0.5)});
  lattices.push_back({"square", build_square(9, 9, 1.0, 0.0, Boundary::open)});
  lattices.push_back({"graphene", build_graphene(6, 6, 1.0, 0.0, Boundary::open)});
  lattices.push_back({"lieb", build_lieb_nnn(5, 5, 1.0, Boundary::open)});
  std::mt19937 rng(2024);
  for (const auto& l : lattices) {
    const auto res = BathResolvent::finite(l.bath);
    const auto windows = gap_windows(res, 8.0);
    const double lo = res.spectrum().eigenvalues(0), hi = res.spectrum().eigenvalues(l.bath.n_sites() - 1);
    std::uniform_real_distribution<double> uw(lo - 2.0, hi + 2.0), ug(0.05, 0.8);
    std::uniform_int_distribution<int> usite(0, l.bath.n_sites() - 1), ucount(1, 4);
    int two_roots = 0, non_monotone = 0, mismatched = 0, roots = 0;
    for (int trial = 0; trial < kConfigs; ++trial) {
      GiantAtom atom{uw(rng), {}};
      const int count = ucount(rng);
      std::vector<int> sites;
      while (static_cast<int>(sites.size()) < count) {
        const int s = usite(rng);
        if (std::find(sites.begin(), sites.end(), s) == sites.end()) sites.push_back(s);
      }
      for (int s : sites) atom.couplings.push_back({s, ug(rng)});
      for (const auto& [a, b] : windows) {
        int changes = 0;
        double prev = NAN;
        for (int i = 0; i <= kGrid; ++i) {
          const double f = pole_function(atom, res, ResolventQuery::gap(a + (b - a) * i / kGrid)).real();
          if (!std::isnan(prev)) {
            if (!(f > prev)) ++non_monotone;
            if ((f > 0) != (prev > 0)) ++changes;
          }
          prev = f;
        }
        if (changes > 1) ++two_roots;
        const auto bs = find_ingap_bs(atom, res, a, b);
        roots += bs.has_value();
        if (bs.has_value() != (changes == 1)) ++mismatched;
      }
    }
    const std::string tag = std::string(" ") + l.name + " (" + std::to_string(windows.size()) + " gaps)";
    c.within("gaps with two roots" + tag, two_roots, 0, 0);
    c.within("non-increasing grid steps" + tag, non_monotone, 0, 0);
    c.within("root/sign-change mismatches" + tag, mismatched, 0, 0);
    c.note("roots found" + tag + " " + std::to_string(roots));
  }
  return c;
}

// 11. a normal atom never binds inside the band
Checks criterion_normal_inband(const RegressionOptions& o) {
  constexpr int kConfigs = 20;
  Checks c;
  const auto& res = chain_finite();
  std::mt19937 rng(31);
  std::uniform_int_distribution<int> usite(kMid - 200, kMid + 200);
  std::uniform_real_distribution<double> ug(0.05, 0.5), uw(-1.8, 1.8);
  InbandOptions opts;
  opts.grid = 200;
  if (o.im_tol_scale != 1.0) opts.im_tol = o.im_tol_scale * tol::im_tol(res.automatic_epsilon(Backend::finite_spectral));
  int found = 0, misses = 0;
  for (int trial = 0; trial < kConfigs; ++trial) {
    const GiantAtom atom{uw(rng), {{usite(rng), ug(rng)}}};
    const auto r = find_inband_bs(atom, res, -1.95, 1.95, opts);
    found += static_cast<int>(r.states.size());
    misses += static_cast<int>(r.near_misses.size());
  }
  c.within("in-band bound states", found, 0, 0);
  c.note("near misses reported " + std::to_string(misses));
  return c;
}

// 12. resolvent, spectral and closed-form rates agree
Checks criterion_rate_routes(const RegressionOptions&) {
  constexpr double kRel = 0.02;
  Checks c;
  const double gbar = 0.1, J = 1.0;
  const auto periodic = build_chain(400, J, 0.0, Boundary::periodic);
  const auto bands = band_structure(chain_spec(J, 0.0), 6000, 1);
  double worst = 0.0;
  for (double theta : {kPi / 4, 0.5})
    for (double k0 : {kPi / 2, kPi / 3}) {
      const double w0 = -2 * J * std::cos(k0);
      const auto closed = braided_rates_closed_form(theta, k0, 3, 1, gbar, J);
      const auto green = rates_green(chain_ensemble(chain_finite().bath(), kMid, kMid + 3, kMid + 1, kMid + 4, gbar,
                                                    theta, w0), chain_finite());
      const auto spectral = rates_spectral(chain_ensemble(periodic, 100, 103, 101, 104, gbar, theta, w0), periodic, bands);
      const double scale = 2 * gbar * gbar / (2 * J * std::sin(k0));
      const double triples[3][3] = {
          {closed.K12, green.K(0, 1).real(), spectral.K(0, 1).real()},
          {closed.gamma12, green.gamma(0, 1).real(), spectral.gamma(0, 1).real()},
          {closed.gamma11, green.gamma(0, 0).real(), spectral.gamma(0, 0).real()}};
      for (const auto& t : triples)
        for (int a = 0; a < 3; ++a)
          for (int b = a + 1; b < 3; ++b) worst = std::max(worst, std::abs(t[a] - t[b]) / scale);
    }
  c.at_most("max pairwise difference / (2 gbar^2 / v)", worst, kRel);
  return c;
}

// 13. Lindblad dynamics: decay, conservation, undamped exchange
Checks criterion_lindblad(const RegressionOptions&) {
  constexpr double kDecayRel = 0.02, kDriftPerTime = 1e-8, kExchange = 1e-6, kLoss = 1e-6;
  Checks c;
  const double gbar = 0.1, J = 1.0, theta = 0.5, k0 = kPi / 2;
  {
    // giant atom away from the decoherence-free point, rates from the finite lattice
    EmitterEnsemble ens{{chain_pair(chain_finite().bath(), kMid, kMid + 2, gbar, theta, 0.0)}};
    const auto rates = rates_green(ens, chain_finite());
    const double gamma = chain_decay_closed_form(theta, k0, 2, gbar, J);
    std::vector<double> t = linspace(0.0, 5.0 / gamma, 101);
    const auto tr = lindblad_evolve(single_excitation_density(1, 0), rates, 0.0, t);
    double worst = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double law = std::exp(-gamma * t[i]);
      worst = std::max(worst, std::abs(tr.populations[i][0] - law) / law);
    }
    c.at_most("max |P - exp(-gamma t)| / exp(-gamma t), gamma t <= 5", worst, kDecayRel);
  }
  {
    const auto ens = chain_ensemble(chain_finite().bath(), kMid, kMid + 3, kMid + 1, kMid + 4, gbar, theta, -1.0);
    const auto rates = rates_green(ens, chain_finite());
    MatrixXc rho0 = MatrixXc::Zero(4, 4);
    rho0(3, 3) = 1.0;
    const double t_max = 400.0;
    const auto tr = lindblad_evolve(rho0, rates, -1.0, linspace(0.0, t_max, 201));
    double drift = 0.0;
    for (double x : tr.trace) drift = std::max(drift, std::abs(x - 1.0));
    c.at_most("trace drift per unit time", drift / t_max, kDriftPerTime);
  }
  {
    const auto ens = chain_ensemble(chain_analytic().bath(), kMid, kMid + 2, kMid + 1, kMid + 3, std::sqrt(2.0) * 0.05,
                                    kPi / 4, 0.0);
    const auto rates = rates_green(ens, chain_analytic());
    const double kappa = rates.K(0, 1).real();
    const auto t = linspace(0.0, 4 * kPi / kappa, 401);
    const auto tr = lindblad_evolve(single_excitation_density(2, 0), rates, 0.0, t);
    double worst = 0.0, loss = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      worst = std::max(worst, std::abs(tr.populations[i][0] - std::pow(std::cos(kappa * t[i]), 2)));
      loss = std::max(loss, 1.0 - tr.populations[i][0] - tr.populations[i][1]);
    }
    c.at_most("max |P1 - cos^2(K12 t)|, K12 t in [0, 4 pi]", worst, kExchange);
    c.at_most("population lost from the pair", loss, kLoss);
  }
  return c;
}

// 14. vacancy-like states stay exact eigenstates; fractional decay plateau
Checks criterion_vds_pinning(const RegressionOptions&) {
  constexpr double kResidual = 1e-8, kPlateauRel = 0.03;
  Checks c;
  const VDSOptions opts;  // checks g = 0.05, 0.5, 1.0 J
  c.expect(opts.check_strengths == std::vector<double>{0.05, 0.5, 1.0}, "check strengths 0.05, 0.5, 1.0 J");
  struct Case {
    const char* name;
    BathGraph bath;
    std::function<GiantAtom(const BathGraph&)> atom;
  };
  std::vector<Case> cases;
  cases.push_back({"graphene 3-point", build_graphene(15, 15, 1.0, 0.0, Boundary::open),
                   [](const BathGraph& b) { return graphene_three_point(b, 7, 7, graphene_a, 0.05, 0.0); }});
  cases.push_back({"graphene 4-point", build_graphene(15, 15, 1.0, 0.0, Boundary::open),
                   [](const BathGraph& b) { return graphene_four_point(b, 7, 7, 0.05, 1.0); }});
  cases.push_back({"chain d=2", build_chain(201, 1.0, 0.0, Boundary::open),
                   [](const BathGraph& b) { return chain_atom(b, {100, 102}, 0.05, 0.0); }});
  cases.push_back({"chain d=3", build_chain(201, 1.0, 0.0, Boundary::open),
                   [](const BathGraph& b) { return chain_atom(b, {100, 103}, 0.05, -1.0); }});
  cases.push_back({"square diamond", build_square(21, 21, 1.0, 0.0, Boundary::open),
                   [](const BathGraph& b) { return square_diamond(b, 10, 10, 3, 0.05, 0.0); }});
  cases.push_back({"Lieb string", build_lieb_nnn(21, 21, 1.0, Boundary::open),
                   [](const BathGraph& b) { return lieb_string_atom(b, 8, 10, 5, true, 0.05, -1.0); }});
  for (const auto& cs : cases) {
    const auto vds = vds_search(cs.atom(cs.bath), cs.bath, opts);
    c.expect(!vds.empty(), std::string("VDS found: ") + cs.name);
    double worst = 0.0;
    for (const auto& v : vds)
      for (double r : v.check_residuals) worst = std::max(worst, r);
    c.at_most(std::string("max eigen residual/J ") + cs.name, worst, kResidual);
  }

  // g = J: the excited amplitude settles on <e|Psi_VDS>; extra bound states outside the band make
  // the population oscillate, so the plateau is the time average of the rotating-frame amplitude.
  const auto bath = build_chain(801, 1.0, 0.0, Boundary::open);
  const GiantAtom atom = chain_atom(bath, {400, 402}, 1.0, 0.0);
  const auto vds = vds_search(atom, bath);
  if (vds.empty()) not_certified("chain vacancy-like state at g = J");
  const double plateau = std::pow(vds[0].excited_weight(), 2);
  const auto t = linspace(40.0, 190.0, 2001);
  VectorXc init = VectorXc::Zero(1 + bath.n_sites());
  init(0) = 1.0;
  const auto tr = exact_1ex_evolve(bath, EmitterEnsemble{{atom}}, init, t);
  cplx avg = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) avg += tr.emitter_amplitudes[i](0) * std::exp(kI * atom.omega0 * t[i]);
  avg /= static_cast<double>(t.size());
  c.expect(!tr.horizon_violated, "evolution inside the boundary horizon");
  c.within_rel("plateau |<a>|^2 vs cos^4 theta", std::norm(avg), plateau, kPlateauRel);
  return c;
}

// release check: configuration round trip
Checks check_round_trip(const RegressionOptions&) {
  Checks c;
  int bad = 0, total = 0;
  auto trip = [&](const ScenarioConfig& cfg) {
    ++total;
    const ScenarioConfig back = config_from_json(Json::parse(to_json(cfg).dump()));
    if (!(back == cfg)) ++bad;
  };
  for (auto k : all_scenarios()) {
    if (k == ScenarioKind::custom) continue;
    ScenarioConfig cfg = default_config(k);
    trip(cfg);
    apply_override(cfg, "g=0.0731");
    apply_override(cfg, "time.t_max=12.5");
    apply_override(cfg, "outputs=[\"rates\",\"lindblad\"]");
    trip(cfg);
  }
  ScenarioConfig custom = default_config(ScenarioKind::custom);
  custom.atoms = {AtomConfig{0.1, {{{3, 0, 0}, 0.2}, {{7, 0, 0}, -0.15}}}, AtomConfig{0.1, {{{5, 0, 0}, 0.3}}}};
  custom.sweep = SweepConfig{"initial_atom", {0, 1}};
  trip(custom);
  c.within("configs that changed in a round trip", bad, 0, 0);
  c.note(std::to_string(total) + " configurations");
  return c;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// release check: identical configs write identical CSV bytes
Checks check_determinism(const RegressionOptions&) {
  Checks c;
  ScenarioConfig cfg = default_config(ScenarioKind::lieb_pair);
  cfg.outputs = {OutputKind::vds, OutputKind::bound_states, OutputKind::rates, OutputKind::dfh_report,
                 OutputKind::lindblad, OutputKind::self_energy};
  cfg.window.points = 41;
  cfg.time = {50.0, 50};
  const fs::path base = fs::temp_directory_path() / ("gla-determinism-" + std::to_string(::getpid()));
  const auto first = run_scenario(cfg, (base / "a").string());
  run_scenario(cfg, (base / "b").string());
  int compared = 0, differing = 0;
  for (const auto& f : first.files) {
    if (f.size() < 4 || f.substr(f.size() - 4) != ".csv") continue;
    ++compared;
    if (read_file(base / "a" / f) != read_file(base / "b" / f)) ++differing;
  }
  c.at_least("CSV files compared", compared, 5);
  c.within("CSV files that differ", differing, 0, 0);
  std::error_code ec;
  fs::remove_all(base, ec);
  return c;
}

struct RowSpec {
  const char* title;
  Checks (*run)(const RegressionOptions&);
};

const std::vector<RowSpec>& rows() {
  static const std::vector<RowSpec> list{
      {"graphene 3-point vacancy-like bound state", criterion_graphene3},
      {"graphene 4-point state and pair exchange K12 = g^2/J", criterion_graphene4},
      {"chain braided pair: gamma eigenvalues and K12", criterion_braided},
      {"chain serial and nested pairs: K12 = 0", criterion_serial_nested},
      {"square-lattice braided and nested diamonds", criterion_square},
      {"Lieb pair and crossed strings", criterion_lieb},
      {"Lieb string size law", criterion_lieb_lengths},
      {"two-point decay law and its stationary point", criterion_decay_law},
      {"total resolvent identity", criterion_resolvent_identity},
      {"one root per gap", criterion_gap_uniqueness},
      {"normal atoms have no in-band bound state", criterion_normal_inband},
      {"rate routes agree", criterion_rate_routes},
      {"Lindblad decay, trace and exchange", criterion_lindblad},
      {"vacancy-like state pinning and decay plateau", criterion_vds_pinning},
      {"config round trip", check_round_trip},
      {"deterministic CSV output", check_determinism},
  };
  return list;
}

}  // namespace

const char* to_string(RowStatus s) {
  switch (s) {
    case RowStatus::pass: return "pass";
    case RowStatus::fail: return "fail";
    case RowStatus::convergence_error: return "convergence-error";
    case RowStatus::error: return "error";
  }
  return "error";
}

int regression_row_count() { return static_cast<int>(rows().size()); }

std::string regression_title(int id) {
  if (id < 1 || id > regression_row_count()) throw Error(ErrorKind::invalid_argument, "no regression row " + std::to_string(id));
  return rows()[id - 1].title;
}

RegressionRow run_regression_row(int id, const RegressionOptions& opts) {
  RegressionRow row;
  row.id = id;
  row.title = regression_title(id);
  const auto start = std::chrono::steady_clock::now();
  try {
    const Checks c = rows()[id - 1].run(opts);
    row.status = c.ok() ? RowStatus::pass : RowStatus::fail;
    row.detail = c.detail();
  } catch (const Error& e) {
    row.status = e.kind() == ErrorKind::convergence ? RowStatus::convergence_error : RowStatus::error;
    row.detail = e.what();
  } catch (const std::exception& e) {
    row.status = RowStatus::error;
    row.detail = e.what();
  }
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

std::vector<RegressionRow> run_regression(const RegressionOptions& opts, std::vector<int> ids) {
  if (ids.empty())
    for (int i = 1; i <= regression_row_count(); ++i) ids.push_back(i);
  std::vector<RegressionRow> out;
  for (int id : ids) out.push_back(run_regression_row(id, opts));
  return out;
}

std::string format_regression_table(const std::vector<RegressionRow>& rows) {
  std::ostringstream s;
  char line[256];
  std::snprintf(line, sizeof line, "%-4s %-18s %8s  %s\n", "row", "status", "seconds", "check");
  s << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-4d %-18s %8.2f  %s\n", r.id, to_string(r.status), r.seconds, r.title.c_str());
    s << line << "       " << r.detail << "\n";
  }
  int passed = 0;
  for (const auto& r : rows) passed += r.status == RowStatus::pass;
  s << passed << "/" << rows.size() << " rows pass\n";
  return s.str();
}

}  // namespace gla
