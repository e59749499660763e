#include "gla/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

#include "gla/boundstates.hpp"
#include "gla/dynamics.hpp"
#include "gla/geometry.hpp"

namespace gla {

namespace fs = std::filesystem;

namespace {

struct Named {
  ScenarioKind kind;
  const char* name;
};

constexpr Named kScenarios[] = {
    {ScenarioKind::graphene3, "graphene3"},
    {ScenarioKind::graphene4, "graphene4"},
    {ScenarioKind::graphene_chain, "graphene_chain"},
    {ScenarioKind::waveguide_serial, "waveguide_serial"},
    {ScenarioKind::waveguide_braided, "waveguide_braided"},
    {ScenarioKind::waveguide_nested, "waveguide_nested"},
    {ScenarioKind::square_braided, "square_braided"},
    {ScenarioKind::square_nested, "square_nested"},
    {ScenarioKind::lieb_pair, "lieb_pair"},
    {ScenarioKind::lieb_mismatched, "lieb_mismatched"},
    {ScenarioKind::custom, "custom"},
};

constexpr const char* kOutputs[] = {"self_energy", "ldos",     "bound_states",   "vds",
                                    "rates",       "dfh_report", "lindblad", "exact_evolution"};

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::config_error, what); }

bool is_waveguide(ScenarioKind k) {
  return k == ScenarioKind::waveguide_serial || k == ScenarioKind::waveguide_braided ||
         k == ScenarioKind::waveguide_nested;
}

bool is_graphene(ScenarioKind k) {
  return k == ScenarioKind::graphene3 || k == ScenarioKind::graphene4 || k == ScenarioKind::graphene_chain;
}

bool is_lieb(ScenarioKind k) { return k == ScenarioKind::lieb_pair || k == ScenarioKind::lieb_mismatched; }

// Bare-atom frequency that seeds the vacancy-like state, in units of J above omega_c.
double vds_offset(ScenarioKind k) {
  if (k == ScenarioKind::graphene4 || k == ScenarioKind::graphene_chain) return 1.0;
  if (is_lieb(k)) return -1.0;
  return 0.0;
}

std::map<std::string, double> default_params(ScenarioKind k) {
  std::map<std::string, double> p{{"initial_atom", 0}, {"inband_scan", 0}, {"inband_grid", 200}};
  if (k == ScenarioKind::custom) return p;
  p["g"] = 0.05;
  p["omega0"] = vds_offset(k);
  switch (k) {
    case ScenarioKind::graphene3:
    case ScenarioKind::graphene4:
      p["cx"] = 15;
      p["cy"] = 15;
      break;
    case ScenarioKind::graphene_chain:
      p["n_atoms"] = 4;
      p["cx"] = 13;
      p["cy"] = 15;
      break;
    case ScenarioKind::waveguide_serial:
    case ScenarioKind::waveguide_braided:
    case ScenarioKind::waveguide_nested:
      p["theta"] = kPi / 4;
      p["origin"] = 1000;
      p["d"] = k == ScenarioKind::waveguide_nested ? 6 : 2;
      p["x21"] = k == ScenarioKind::waveguide_serial ? 3 : 1;
      p["x22"] = k == ScenarioKind::waveguide_serial ? 5 : 3;
      break;
    case ScenarioKind::square_braided:
      p["mu"] = 3;
      p["shift"] = 5;
      p["cx"] = 18;
      p["cy"] = 20;
      break;
    case ScenarioKind::square_nested:
      p["mu_outer"] = 5;
      p["mu_inner"] = 3;
      p["cx"] = 20;
      p["cy"] = 20;
      break;
    case ScenarioKind::lieb_pair:
      p["string_length"] = 5;
      p["shift"] = 2;
      p["cx"] = 8;
      p["cy"] = 10;
      break;
    case ScenarioKind::lieb_mismatched:
      p["string_length"] = 5;
      p["cx"] = 8;
      p["cy"] = 10;
      break;
    case ScenarioKind::custom:
      break;
  }
  return p;
}

// Parameters that only place or scale the geometry; the published values hold for any of them.
bool placement_only(const std::string& key) {
  static const std::set<std::string> keys{"g", "cx", "cy", "origin", "initial_atom", "inband_scan", "inband_grid"};
  return keys.count(key) > 0;
}

const std::set<std::string>& integer_params() {
  static const std::set<std::string> keys{"initial_atom", "inband_scan", "inband_grid", "cx", "cy", "n_atoms",
                                          "origin", "d", "x21", "x22", "mu", "shift", "mu_outer", "mu_inner",
                                          "string_length"};
  return keys;
}

int iparam(const ScenarioConfig& c, const std::string& key) { return static_cast<int>(std::lround(c.params.at(key))); }

Json lattice_json(const LatticeConfig& l) {
  return Json{{"kind", to_string(l.kind)}, {"size", l.size}, {"J", l.J}, {"omega_c", l.omega_c},
              {"boundary", to_string(l.boundary)}};
}

template <class T>
T field(const Json& j, const char* key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    config_error(std::string("field '") + key + "': " + e.what());
  }
}

void reject_unknown(const Json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) config_error(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) config_error("unknown field '" + it.key() + "' in " + where);
  }
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
 public:
  Csv(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw Error(ErrorKind::resource_error, "cannot write " + path.string());
    row_strings(header);
  }
  void row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    for (double v : values) cells.push_back(format_number(v));
    row_strings(cells);
  }
  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

double vds_fidelity(const VectorXc& state, const VectorXc& reference) {
  return std::norm(reference.dot(state)) / (state.squaredNorm() * reference.squaredNorm());
}

struct PointResult {
  Json results = Json::object();
  std::vector<Headline> headlines;
  std::vector<std::string> files;
  std::vector<std::string> warnings;
};

Json headline_json(const Headline& h) {
  Json j{{"name", h.name}, {"value", h.value}};
  if (h.expected) {
    j["provenance"] = "reference-expected";
    j["expected"] = *h.expected;
    j["tolerance"] = h.tolerance;
    j["pass"] = h.pass();
  } else {
    j["provenance"] = "computed-only";
  }
  if (!h.note.empty()) j["note"] = h.note;
  return j;
}

bool expectations_apply(const ScenarioConfig& c) {
  if (c.scenario == ScenarioKind::custom) return false;
  const auto defaults = default_params(c.scenario);
  for (const auto& [k, v] : c.params) {
    if (placement_only(k)) continue;
    if (k == "omega0") {
      if (std::abs(v - (c.lattice.omega_c + vds_offset(c.scenario) * c.lattice.J)) > 1e-12 * c.lattice.J)
        return false;
      continue;
    }
    if (defaults.count(k) && std::abs(defaults.at(k) - v) > 1e-12) return false;
  }
  return true;
}

PointResult run_point(const ScenarioConfig& c, const fs::path& dir) {
  fs::create_directories(dir);
  PointResult out;
  auto add_file = [&](const std::string& name) { out.files.push_back(name); return dir / name; };
  auto want = [&](OutputKind k) { return std::find(c.outputs.begin(), c.outputs.end(), k) != c.outputs.end(); };

  const ScenarioSystem sys = build_system(c);
  const BathGraph& bath = sys.bath;
  const EmitterEnsemble& ens = sys.ensemble;
  const int na = ens.size();
  const double J = bath.hopping_scale;
  const double g = c.params.count("g") ? c.params.at("g") : 0.0;
  const bool expect = expectations_apply(c);

  const bool need_res = want(OutputKind::self_energy) || want(OutputKind::ldos) || want(OutputKind::bound_states) ||
                        want(OutputKind::rates) || want(OutputKind::dfh_report) || want(OutputKind::lindblad);
  std::optional<BathResolvent> res;
  if (need_res) {
    if (c.backend == Backend::analytic_chain) res.emplace(BathResolvent::analytic_chain(bath));
    else if (c.backend == Backend::bloch_sum) res.emplace(BathResolvent(bath, BathResolvent::Options{false, true, false}));
    else res.emplace(BathResolvent::finite(bath));
  }

  auto expect_value = [&](const std::string& name, double value, double expected, double tol,
                          const std::string& note = "") {
    Headline h{name, value, std::nullopt, 0.0, note};
    if (expect) {
      h.expected = expected;
      h.tolerance = tol;
    }
    out.headlines.push_back(h);
  };
  auto computed = [&](const std::string& name, double value, const std::string& note = "") {
    out.headlines.push_back(Headline{name, value, std::nullopt, 0.0, note});
  };

  // vacancy-like dressed states
  std::vector<std::vector<VDS>> vds_sets(na);
  const bool need_vds = want(OutputKind::vds);
  if (need_vds) {
    Csv table(add_file("vds.csv"), {"atom", "energy", "coupling_re", "coupling_im", "eta_re", "eta_im", "theta",
                                    "degenerate", "localized", "max_check_residual"});
    Csv amps(add_file("vds_amplitudes.csv"), {"atom", "a", "b", "sub", "re", "im"});
    Json list = Json::array();
    for (int j = 0; j < na; ++j) {
      vds_sets[j] = vds_search(ens.atoms[j], bath);
      for (const auto& v : vds_sets[j]) {
        const double worst = v.check_residuals.empty()
                                 ? 0.0
                                 : *std::max_element(v.check_residuals.begin(), v.check_residuals.end());
        table.row({double(j + 1), v.energy, v.coupling_overlap.real(), v.coupling_overlap.imag(), v.eta.real(),
                   v.eta.imag(), v.theta, double(v.degenerate), double(v.localization.localized), worst});
        for (int s = 0; s < bath.n_sites(); ++s)
          if (std::abs(v.psi_vds(s)) > 1e-12)
            amps.row({double(j + 1), double(bath.labels[s].a), double(bath.labels[s].b), double(bath.labels[s].sub),
                      v.psi_vds(s).real(), v.psi_vds(s).imag()});
        list.push_back(Json{{"atom", j + 1},
                            {"energy", v.energy},
                            {"coupling_overlap", {v.coupling_overlap.real(), v.coupling_overlap.imag()}},
                            {"eta", {v.eta.real(), v.eta.imag()}},
                            {"theta", v.theta},
                            {"excited_weight", v.excited_weight()},
                            {"degenerate", v.degenerate},
                            {"localized", v.localization.localized},
                            {"max_check_residual", worst}});
      }
    }
    out.results["vds"] = list;
    for (int j = 0; j < std::min(na, 2); ++j)
      expect_value("vds_found_atom" + std::to_string(j + 1), vds_sets[j].empty() ? 0.0 : 1.0, 1.0, 0.0);
    if (c.scenario == ScenarioKind::graphene4 && !vds_sets[0].empty())
      expect_value("coupling_overlap_atom1", vds_sets[0][0].coupling_overlap.real(), std::sqrt(2.0) * J, 1e-10 * J);
    if (is_lieb(c.scenario) && !vds_sets[0].empty()) {
      const VectorXc ref = lieb_string_state(bath, iparam(c, "cx"), iparam(c, "cy"), iparam(c, "string_length"), true);
      expect_value("vds_fidelity_atom1", vds_fidelity(vds_sets[0][0].psi_vds, ref), 1.0, 1e-8);
    }
  }

  // bound states
  if (want(OutputKind::bound_states)) {
    Csv table(add_file("bound_states.csv"),
              {"atom", "class", "omega", "atom_fraction", "residual", "pole_re", "pole_im"});
    Json list = Json::array();
    auto record = [&](int j, const BoundState& bs) {
      table.row_strings({std::to_string(j + 1), to_string(bs.classification), format_number(bs.omega_bs),
                         format_number(bs.atom_fraction), format_number(bs.residual),
                         format_number(bs.pole_value.real()), format_number(bs.pole_value.imag())});
      list.push_back(Json{{"atom", j + 1},
                          {"class", to_string(bs.classification)},
                          {"omega", bs.omega_bs},
                          {"atom_fraction", bs.atom_fraction},
                          {"residual", bs.residual}});
    };
    for (int j = 0; j < na; ++j) {
      const GiantAtom& atom = ens.atoms[j];
      const double gbar = effective_strength(atom);
      const double reach = 10.0 * (J + gbar) + std::abs(atom.omega0) + 10.0 * J;
      for (const auto& [lo, hi] : gap_windows(*res, reach))
        if (auto bs = find_ingap_bs(atom, *res, lo, hi)) record(j, *bs);
      if (auto bs = weak_coupling_bs(atom, *res)) record(j, *bs);
      if (iparam(c, "inband_scan") != 0) {
        InbandOptions opts;
        opts.grid = iparam(c, "inband_grid");
        opts.backend = res->preferred_backend();
        for (const auto& [a, b] : res->band_intervals()) {
          const double pad = 1e-3 * (b - a);
          const auto r = find_inband_bs(atom, *res, a + pad, b - pad, opts);
          for (const auto& bs : r.states) record(j, bs);
          for (const auto& m : r.near_misses)
            out.warnings.push_back("atom " + std::to_string(j + 1) + " near miss at " + format_number(m.omega) +
                                   ": " + m.reason);
        }
      }
    }
    out.results["bound_states"] = list;
  }

  // rates and the decoherence-free report
  std::optional<RateMatrices> rates;
  if (want(OutputKind::rates) || want(OutputKind::dfh_report) || want(OutputKind::lindblad)) {
    rates = rates_green(ens, *res);
    Csv table(add_file("rates.csv"), {"i", "j", "K_re", "K_im", "gamma_re", "gamma_im"});
    for (int j = 0; j < na; ++j)
      for (int k = 0; k < na; ++k)
        table.row({double(j + 1), double(k + 1), rates->K(j, k).real(), rates->K(j, k).imag(),
                   rates->gamma(j, k).real(), rates->gamma(j, k).imag()});
    Eigen::SelfAdjointEigenSolver<MatrixXc> es(rates->gamma, Eigen::EigenvaluesOnly);
    Json eig = Json::array();
    for (int j = 0; j < na; ++j) eig.push_back(es.eigenvalues()(j));
    Json kmat = Json::array();
    for (int j = 0; j < na; ++j) {
      Json row = Json::array();
      for (int k = 0; k < na; ++k) row.push_back(rates->K(j, k).real());
      kmat.push_back(row);
    }
    out.results["rates"] = Json{{"K", kmat},
                                {"gamma_eigenvalues", eig},
                                {"converged", rates->converged},
                                {"change", rates->change},
                                {"nonuniform_gbar", rates->nonuniform_gbar}};
    if (na >= 2) computed("K12_rates", rates->K(0, 1).real(), "resolvent route");
    computed("gamma_max_eigenvalue", es.eigenvalues()(na - 1));
    if (!rates->converged)
      out.warnings.push_back("rate elements did not pass the epsilon-refinement check (change " +
                             format_number(rates->change) + ")");
  }

  if (want(OutputKind::dfh_report)) {
    const DFHReport dfh = dfh_check(*rates, ens, *res);
    Json zero = Json::array();
    for (const auto& [j, k] : dfh.zero_interaction_pairs) zero.push_back(Json::array({j + 1, k + 1}));
    Json report{{"is_dfh", dfh.is_dfh},
                {"dfh_tol", dfh.dfh_tol},
                {"max_gamma_eigenvalue", dfh.max_gamma_eigenvalue},
                {"gamma_uncertainty", dfh.gamma_uncertainty},
                {"resolution_limited", dfh.resolution_limited},
                {"per_atom_bs_exists", dfh.per_atom_bs_exists},
                {"consistent", dfh.consistent},
                {"zero_interaction_pairs", zero}};
    std::optional<MatrixXc> k_bs;
    if (std::all_of(dfh.per_atom_bs_exists.begin(), dfh.per_atom_bs_exists.end(), [](bool b) { return b; })) {
      const HeffResult h = heff_from_bs(ens, dfh.bound_states);
      k_bs = h.K;
      Json kmat = Json::array();
      for (int j = 0; j < na; ++j) {
        Json row = Json::array();
        for (int k = 0; k < na; ++k) row.push_back(h.K(j, k).real());
        kmat.push_back(row);
      }
      report["K_bound_states"] = kmat;
      report["reciprocity_error"] = h.reciprocity_error;
    }
    out.results["dfh_report"] = report;
    if (!dfh.consistent) out.warnings.push_back("gamma criterion and per-atom bound states disagree");
    Csv table(add_file("dfh_report.csv"), {"atom", "bound_state", "gamma_eigenvalue"});
    Eigen::SelfAdjointEigenSolver<MatrixXc> es(rates->gamma, Eigen::EigenvaluesOnly);
    for (int j = 0; j < na; ++j)
      table.row({double(j + 1), double(dfh.per_atom_bs_exists[j]), es.eigenvalues()(j)});

    const double k_unit = g * g / J;
    const auto k_entry = [&](int j, int k) {
      return k_bs ? (*k_bs)(j, k).real() : rates->K(j, k).real();
    };
    const std::string route = k_bs ? "bound-state route" : "resolvent route";
    const bool has_zero_12 = std::find(dfh.zero_interaction_pairs.begin(), dfh.zero_interaction_pairs.end(),
                                       std::make_pair(0, 1)) != dfh.zero_interaction_pairs.end();
    switch (c.scenario) {
      case ScenarioKind::graphene3:
      case ScenarioKind::graphene4:
        expect_value("is_dfh", dfh.is_dfh, 1.0, 0.0);
        expect_value("K12", k_entry(0, 1), k_unit, 1e-6 * k_unit, route);
        break;
      case ScenarioKind::graphene_chain:
        expect_value("is_dfh", dfh.is_dfh, 1.0, 0.0);
        expect_value("K12", k_entry(0, 1), k_unit, 1e-6 * k_unit, route);
        if (na >= 3) expect_value("K13", k_entry(0, 2), 0.0, 1e-6 * k_unit, route);
        break;
      case ScenarioKind::waveguide_braided: {
        const double k0 = std::acos(std::clamp(-(c.params.at("omega0") - c.lattice.omega_c) / (2.0 * J), -1.0, 1.0));
        const double gbar = std::sqrt(2.0) * g;
        const auto ref = braided_rates_closed_form(c.params.at("theta"), k0, iparam(c, "d"), iparam(c, "x21"), gbar, J);
        const double scale = 2.0 * gbar * gbar / (2.0 * J * std::sin(k0));
        expect_value("is_dfh", dfh.is_dfh, 1.0, 0.0);
        expect_value("K12", k_entry(0, 1), ref.K12, 0.02 * scale, route);
        expect_value("gamma_max_eigenvalue_bound", dfh.max_gamma_eigenvalue <= dfh.dfh_tol, 1.0, 0.0);
        break;
      }
      case ScenarioKind::waveguide_serial:
      case ScenarioKind::lieb_mismatched:
        expect_value("is_dfh", dfh.is_dfh, 1.0, 0.0);
        expect_value("K12", k_entry(0, 1), 0.0, 1e-6 * k_unit, route);
        break;
      case ScenarioKind::waveguide_nested:
      case ScenarioKind::square_nested:
        expect_value("is_dfh", dfh.is_dfh, 1.0, 0.0);
        expect_value("zero_interaction_12", has_zero_12, 1.0, 0.0);
        expect_value("K12", k_entry(0, 1), 0.0, 1e-6 * k_unit, route);
        break;
      case ScenarioKind::square_braided:
        expect_value("is_dfh", dfh.is_dfh, 1.0, 0.0);
        expect_value("K12", k_entry(0, 1), k_unit, 0.02 * k_unit, route);
        break;
      case ScenarioKind::lieb_pair:
        expect_value("is_dfh", dfh.is_dfh, 1.0, 0.0);
        expect_value("K12", k_entry(0, 1), -k_unit, 0.02 * k_unit, route);
        computed("abs_K12", std::abs(k_entry(0, 1)), route);
        break;
      case ScenarioKind::custom:
        if (na >= 2) computed("K12", k_entry(0, 1), route);
        break;
    }
  }

  const std::vector<double> times = linspace(0.0, c.time.t_max, c.time.steps + 1);
  const int initial = iparam(c, "initial_atom");
  if (want(OutputKind::lindblad)) {
    const auto traj = lindblad_evolve(single_excitation_density(na, initial), *rates, ens.atoms[0].omega0, times);
    std::vector<std::string> header{"t"};
    for (int j = 0; j < na; ++j) header.push_back("P" + std::to_string(j + 1));
    header.push_back("trace");
    header.push_back("min_eigenvalue");
    Csv table(add_file("lindblad.csv"), header);
    for (std::size_t i = 0; i < times.size(); ++i) {
      std::vector<double> row{times[i]};
      for (double p : traj.populations[i]) row.push_back(p);
      row.push_back(traj.trace[i]);
      row.push_back(traj.min_eigenvalue[i]);
      table.row(row);
    }
    out.results["lindblad"] = Json{{"step", traj.step}, {"final_trace", traj.trace.back()}};
  }

  if (want(OutputKind::exact_evolution)) {
    VectorXc init = VectorXc::Zero(na + bath.n_sites());
    init(initial) = 1.0;
    const auto traj = exact_1ex_evolve(bath, ens, init, times);
    std::vector<std::string> header{"t"};
    for (int j = 0; j < na; ++j) header.push_back("P" + std::to_string(j + 1));
    Csv table(add_file("exact_evolution.csv"), header);
    for (std::size_t i = 0; i < times.size(); ++i) {
      std::vector<double> row{times[i]};
      for (int j = 0; j < na; ++j) row.push_back(std::norm(traj.emitter_amplitudes[i](j)));
      table.row(row);
    }
    out.results["exact_evolution"] = Json{{"horizon", traj.horizon}, {"horizon_violated", traj.horizon_violated}};
    if (traj.horizon_violated) out.warnings.push_back(traj.warning);
  }

  if (want(OutputKind::self_energy) || want(OutputKind::ldos)) {
    const auto omegas = linspace(c.window.omega_min, c.window.omega_max, c.window.points);
    const Backend backend = res->preferred_backend();
    std::optional<Csv> se, ld;
    if (want(OutputKind::self_energy)) se.emplace(add_file("self_energy.csv"), std::vector<std::string>{"atom", "omega", "re", "im", "converged"});
    if (want(OutputKind::ldos)) ld.emplace(add_file("ldos.csv"), std::vector<std::string>{"atom", "omega", "ldos"});
    int skipped = 0;
    for (int j = 0; j < na; ++j) {
      const SiteState chi = site_state(ens.atoms[j]);
      const double g2 = std::pow(effective_strength(ens.atoms[j]), 2);
      for (double w : omegas) {
        try {
          if (se) {
            const ResolventValue v = res->evaluate(chi, chi, ResolventQuery::richardson(w, 0.0, backend));
            se->row({double(j + 1), w, g2 * v.value.real(), g2 * v.value.imag(), double(v.converged)});
          }
          if (ld) {
            const ResolventValue v = res->evaluate(chi, chi, ResolventQuery::broadened(w, 0.0, backend));
            ld->row({double(j + 1), w, -v.value.imag() / kPi});
          }
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::pole_proximity) throw;
          ++skipped;
        }
      }
    }
    if (skipped) out.warnings.push_back(std::to_string(skipped) + " spectrum points sit on a resolvent pole and were skipped");
  }
  return out;
}

}  // namespace

const char* to_string(ScenarioKind k) {
  for (const auto& s : kScenarios)
    if (s.kind == k) return s.name;
  return "custom";
}

ScenarioKind scenario_from_string(const std::string& name) {
  for (const auto& s : kScenarios)
    if (name == s.name) return s.kind;
  config_error("unknown scenario '" + name + "'");
}

const std::vector<ScenarioKind>& all_scenarios() {
  static const std::vector<ScenarioKind> list = [] {
    std::vector<ScenarioKind> v;
    for (const auto& s : kScenarios) v.push_back(s.kind);
    return v;
  }();
  return list;
}

const char* to_string(OutputKind k) { return kOutputs[static_cast<int>(k)]; }

OutputKind output_from_string(const std::string& name) {
  for (int i = 0; i < 8; ++i)
    if (name == kOutputs[i]) return static_cast<OutputKind>(i);
  config_error("unknown output '" + name + "'");
}

bool Headline::pass() const { return !expected || std::abs(value - *expected) <= tolerance; }

bool RunReport::expectations_met() const {
  return std::all_of(headlines.begin(), headlines.end(), [](const Headline& h) { return h.pass(); });
}

ScenarioConfig default_config(ScenarioKind kind) {
  ScenarioConfig c;
  c.scenario = kind;
  c.params = default_params(kind);
  if (is_graphene(kind)) c.lattice = {LatticeKind::graphene, {31, 31}, 1.0, 0.0, Boundary::open};
  else if (is_waveguide(kind)) c.lattice = {LatticeKind::chain, {2001}, 1.0, 0.0, Boundary::open};
  else if (kind == ScenarioKind::square_braided || kind == ScenarioKind::square_nested)
    c.lattice = {LatticeKind::square, {41, 41}, 1.0, 0.0, Boundary::open};
  else if (is_lieb(kind)) c.lattice = {LatticeKind::lieb_nnn, {21, 21}, 1.0, 0.0, Boundary::open};
  else c.lattice = {LatticeKind::chain, {101}, 1.0, 0.0, Boundary::open};
  c.outputs = {OutputKind::vds, OutputKind::bound_states, OutputKind::rates, OutputKind::dfh_report};
  if (kind == ScenarioKind::custom) c.outputs = {OutputKind::bound_states, OutputKind::rates};
  return c;
}

Json to_json(const ScenarioConfig& c) {
  Json j;
  j["schema"] = c.schema;
  j["scenario"] = to_string(c.scenario);
  j["lattice"] = lattice_json(c.lattice);
  j["backend"] = to_string(c.backend);
  j["params"] = Json::object();
  for (const auto& [k, v] : c.params) j["params"][k] = v;
  j["atoms"] = Json::array();
  for (const auto& a : c.atoms) {
    Json cs = Json::array();
    for (const auto& cp : a.couplings)
      cs.push_back(Json{{"site", {cp.site.a, cp.site.b, cp.site.sub}}, {"g", cp.g}});
    j["atoms"].push_back(Json{{"omega0", a.omega0}, {"couplings", cs}});
  }
  if (c.sweep) j["sweep"] = Json{{"parameter", c.sweep->parameter}, {"values", c.sweep->values}};
  j["outputs"] = Json::array();
  for (auto o : c.outputs) j["outputs"].push_back(to_string(o));
  j["window"] = Json{{"omega_min", c.window.omega_min}, {"omega_max", c.window.omega_max}, {"points", c.window.points}};
  j["time"] = Json{{"t_max", c.time.t_max}, {"steps", c.time.steps}};
  return j;
}

ScenarioConfig config_from_json(const Json& j) {
  reject_unknown(j, {"schema", "scenario", "lattice", "backend", "params", "atoms", "sweep", "outputs", "window", "time"},
                 "config");
  if (!j.contains("schema")) config_error("missing \"schema\" field");
  const int schema = field<int>(j, "schema", 0);
  if (schema != 1) config_error("unsupported schema " + std::to_string(schema) + " (expected 1)");
  ScenarioConfig c = default_config(scenario_from_string(field<std::string>(j, "scenario", "custom")));
  try {
    if (j.contains("lattice")) {
      const Json& l = j.at("lattice");
      reject_unknown(l, {"kind", "size", "J", "omega_c", "boundary"}, "lattice");
      if (l.contains("kind")) c.lattice.kind = lattice_from_string(l.at("kind").get<std::string>());
      c.lattice.size = field(l, "size", c.lattice.size);
      c.lattice.J = field(l, "J", c.lattice.J);
      c.lattice.omega_c = field(l, "omega_c", c.lattice.omega_c);
      if (l.contains("boundary")) c.lattice.boundary = boundary_from_string(l.at("boundary").get<std::string>());
    }
    if (j.contains("backend")) c.backend = backend_from_string(j.at("backend").get<std::string>());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::config_error) throw;
    config_error(e.what());
  }
  if (j.contains("params")) {
    const Json& p = j.at("params");
    if (!p.is_object()) config_error("params must be an object");
    for (auto it = p.begin(); it != p.end(); ++it) {
      if (!c.params.count(it.key()))
        config_error("unknown parameter '" + it.key() + "' for scenario " + to_string(c.scenario));
      if (!it.value().is_number()) config_error("parameter '" + it.key() + "' must be a number");
      c.params[it.key()] = it.value().get<double>();
    }
  }
  if (j.contains("atoms")) {
    c.atoms.clear();
    for (const Json& a : j.at("atoms")) {
      reject_unknown(a, {"omega0", "couplings"}, "atom");
      AtomConfig atom;
      atom.omega0 = field(a, "omega0", 0.0);
      if (!a.contains("couplings")) config_error("atom without couplings");
      for (const Json& cp : a.at("couplings")) {
        reject_unknown(cp, {"site", "g"}, "coupling");
        const auto site = field<std::vector<int>>(cp, "site", {});
        if (site.empty() || site.size() > 3) config_error("coupling site must be [a], [a, b] or [a, b, sub]");
        SiteLabel label{site[0], site.size() > 1 ? site[1] : 0, site.size() > 2 ? site[2] : 0};
        atom.couplings.push_back({label, field(cp, "g", 0.0)});
      }
      c.atoms.push_back(atom);
    }
  }
  if (j.contains("sweep") && !j.at("sweep").is_null()) {
    const Json& s = j.at("sweep");
    reject_unknown(s, {"parameter", "values"}, "sweep");
    c.sweep = SweepConfig{field<std::string>(s, "parameter", ""), field<std::vector<double>>(s, "values", {})};
  }
  if (j.contains("outputs")) {
    c.outputs.clear();
    for (const Json& o : j.at("outputs")) {
      if (!o.is_string()) config_error("outputs must be names");
      c.outputs.push_back(output_from_string(o.get<std::string>()));
    }
  }
  if (j.contains("window")) {
    const Json& w = j.at("window");
    reject_unknown(w, {"omega_min", "omega_max", "points"}, "window");
    c.window = {field(w, "omega_min", c.window.omega_min), field(w, "omega_max", c.window.omega_max),
                field(w, "points", c.window.points)};
  }
  if (j.contains("time")) {
    const Json& t = j.at("time");
    reject_unknown(t, {"t_max", "steps"}, "time");
    c.time = {field(t, "t_max", c.time.t_max), field(t, "steps", c.time.steps)};
  }
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot read " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    config_error(path + ": " + e.what());
  }
  return config_from_json(j);
}

void apply_override(ScenarioConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) config_error("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    value = text;
  }
  Json j = to_json(c);
  Json* node = &j;
  std::stringstream path(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(path, part, '.')) parts.push_back(part);
  // bare parameter names address the params block
  if (parts.size() == 1 && c.params.count(parts[0])) parts.insert(parts.begin(), "params");
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) config_error("override path '" + key + "' does not name a field");
    node = &(*node)[parts[i]];
  }
  (*node)[parts.back()] = value;
  c = config_from_json(j);
}

void validate_config(const ScenarioConfig& c) {
  if (c.schema != 1) config_error("unsupported schema");
  const auto& L = c.lattice;
  const std::size_t dims = L.kind == LatticeKind::chain ? 1 : 2;
  if (L.kind == LatticeKind::custom) config_error("custom lattices are not supported by the scenario runner");
  if (L.size.size() != dims) config_error(std::string(to_string(L.kind)) + " lattice needs " + std::to_string(dims) + " size entries");
  for (int s : L.size)
    if (s < 1) config_error("lattice sizes must be positive");
  if (!(L.J > 0.0)) config_error("hopping J must be positive");
  if (c.backend == Backend::analytic_chain && L.kind != LatticeKind::chain)
    config_error("the analytic backend applies to the chain only");
  if (c.backend == Backend::bloch_sum && L.boundary != Boundary::periodic)
    config_error("the Bloch backend needs periodic boundaries");
  for (const auto& [k, v] : c.params) {
    if (!std::isfinite(v)) config_error("parameter '" + k + "' is not finite");
    if (integer_params().count(k) && std::abs(v - std::round(v)) > 0.0)
      config_error("parameter '" + k + "' must be an integer");
  }
  if (c.window.points < 2 || !(c.window.omega_min < c.window.omega_max)) config_error("bad spectrum window");
  if (c.time.steps < 1 || !(c.time.t_max > 0.0)) config_error("bad time grid");
  if (iparam(c, "inband_grid") < 3) config_error("inband_grid must be at least 3");

  auto need_lattice = [&](LatticeKind kind) {
    if (L.kind != kind)
      config_error(std::string(to_string(c.scenario)) + " runs on the " + to_string(kind) + " lattice");
  };
  int n_atoms = 2;
  const ScenarioKind k = c.scenario;
  if (k != ScenarioKind::custom && !(c.params.at("g") > 0.0)) config_error("coupling g must be positive");
  if (is_graphene(k)) need_lattice(LatticeKind::graphene);
  if (k == ScenarioKind::graphene_chain) {
    n_atoms = iparam(c, "n_atoms");
    if (n_atoms < 2) config_error("graphene_chain needs at least two atoms");
  }
  if (is_waveguide(k)) {
    need_lattice(LatticeKind::chain);
    const int d = iparam(c, "d"), x21 = iparam(c, "x21"), x22 = iparam(c, "x22"), o = iparam(c, "origin");
    if (k == ScenarioKind::waveguide_braided && !(0 < x21 && x21 < d && d < x22))
      config_error("braided pairs require 0 < x21 < d < x22");
    if (k == ScenarioKind::waveguide_serial && !(0 < d && d < x21 && x21 < x22))
      config_error("serial pairs require 0 < d < x21 < x22");
    if (k == ScenarioKind::waveguide_nested && !(0 < x21 && x21 < x22 && x22 < d))
      config_error("nested pairs require 0 < x21 < x22 < d");
    if (o < 0 || o + std::max(d, x22) >= L.size[0]) config_error("waveguide atoms do not fit on the chain");
    const double th = c.params.at("theta");
    if (!(th > 0.0 && th < kPi / 2)) config_error("theta must lie in (0, pi/2) so both points couple");
  }
  if (k == ScenarioKind::square_braided || k == ScenarioKind::square_nested) need_lattice(LatticeKind::square);
  if (k == ScenarioKind::square_braided) {
    const int mu = iparam(c, "mu"), shift = iparam(c, "shift");
    if (mu < 1 || mu % 2 == 0) config_error("diamond size mu must be odd and positive");
    if (shift <= 0 || shift >= 2 * mu || shift % 2 == 0)
      config_error("braided diamonds require an odd shift with 0 < shift < 2 mu");
  }
  if (k == ScenarioKind::square_nested) {
    const int mo = iparam(c, "mu_outer"), mi = iparam(c, "mu_inner");
    if (mo % 2 == 0 || mi % 2 == 0 || mi < 1) config_error("diamond sizes must be odd and positive");
    if (!(mi < mo)) config_error("nested diamonds require mu_inner < mu_outer");
  }
  if (is_lieb(k)) {
    need_lattice(LatticeKind::lieb_nnn);
    const int len = iparam(c, "string_length");
    if (!lieb_length_allowed(len))
      config_error("Lieb string length " + std::to_string(len) +
                   " violates the size law: lengths are 5 + 6 n with n = 0, 1, 2, ...");
  }
  if (k == ScenarioKind::custom) {
    if (c.atoms.empty()) config_error("custom scenarios list their atoms");
    n_atoms = static_cast<int>(c.atoms.size());
    for (const auto& a : c.atoms)
      if (a.couplings.empty()) config_error("every atom needs at least one coupling");
  }
  const int initial = iparam(c, "initial_atom");
  if (initial < 0 || initial >= n_atoms) config_error("initial_atom is out of range");
  if (c.sweep) {
    if (!c.params.count(c.sweep->parameter))
      config_error("sweep parameter '" + c.sweep->parameter + "' is not a parameter of " + to_string(k));
    if (c.sweep->values.empty()) config_error("sweep has no values");
    for (double v : c.sweep->values) {
      ScenarioConfig point = c;
      point.sweep.reset();
      point.params[c.sweep->parameter] = v;
      validate_config(point);
    }
  }
}

ScenarioSystem build_system(const ScenarioConfig& c) {
  validate_config(c);
  const auto& L = c.lattice;
  ScenarioSystem sys;
  switch (L.kind) {
    case LatticeKind::chain: sys.bath = build_chain(L.size[0], L.J, L.omega_c, L.boundary); break;
    case LatticeKind::graphene: sys.bath = build_graphene(L.size[0], L.size[1], L.J, L.omega_c, L.boundary); break;
    case LatticeKind::square: sys.bath = build_square(L.size[0], L.size[1], L.J, L.omega_c, L.boundary); break;
    case LatticeKind::lieb_nnn:
      if (L.omega_c != 0.0) config_error("the Lieb lattice builder uses zero cavity frequency");
      sys.bath = build_lieb_nnn(L.size[0], L.size[1], L.J, L.boundary);
      break;
    case LatticeKind::custom: config_error("custom lattices are not supported by the scenario runner");
  }
  const BathGraph& bath = sys.bath;
  auto& atoms = sys.ensemble.atoms;
  const ScenarioKind k = c.scenario;
  try {
    if (k == ScenarioKind::custom) {
      for (const auto& a : c.atoms) {
        GiantAtom atom{a.omega0, {}};
        for (const auto& cp : a.couplings) atom.couplings.push_back({bath.index(cp.site), cp.g});
        atoms.push_back(atom);
      }
      sys.ensemble.validate(bath);
      return sys;
    }
    const double g = c.params.at("g"), w0 = c.params.at("omega0");
    switch (k) {
      case ScenarioKind::graphene3: {
        const int cx = iparam(c, "cx"), cy = iparam(c, "cy");
        atoms.push_back(graphene_three_point(bath, cx, cy, graphene_a, g, w0));
        atoms.push_back(graphene_three_point(bath, cx, cy, graphene_b, g, w0));
        break;
      }
      case ScenarioKind::graphene4:
        atoms.push_back(graphene_four_point(bath, iparam(c, "cx"), iparam(c, "cy"), g, w0));
        atoms.push_back(graphene_four_point(bath, iparam(c, "cx") + 1, iparam(c, "cy"), g, w0));
        break;
      case ScenarioKind::graphene_chain:
        for (int j = 0; j < iparam(c, "n_atoms"); ++j)
          atoms.push_back(graphene_four_point(bath, iparam(c, "cx") + j, iparam(c, "cy"), g, w0));
        break;
      case ScenarioKind::waveguide_serial:
      case ScenarioKind::waveguide_braided:
      case ScenarioKind::waveguide_nested: {
        const int o = iparam(c, "origin");
        const double gbar = std::sqrt(2.0) * g, th = c.params.at("theta");
        atoms.push_back(chain_pair_atom(bath, o, o + iparam(c, "d"), gbar, th, w0));
        atoms.push_back(chain_pair_atom(bath, o + iparam(c, "x21"), o + iparam(c, "x22"), gbar, th, w0));
        break;
      }
      case ScenarioKind::square_braided: {
        const int cx = iparam(c, "cx"), cy = iparam(c, "cy"), mu = iparam(c, "mu");
        atoms.push_back(square_diamond(bath, cx, cy, mu, g, w0));
        atoms.push_back(square_diamond(bath, cx + iparam(c, "shift"), cy, mu, g, w0));
        break;
      }
      case ScenarioKind::square_nested: {
        const int cx = iparam(c, "cx"), cy = iparam(c, "cy");
        atoms.push_back(square_diamond(bath, cx, cy, iparam(c, "mu_outer"), g, w0));
        atoms.push_back(square_diamond(bath, cx, cy, iparam(c, "mu_inner"), g, w0));
        break;
      }
      case ScenarioKind::lieb_pair: {
        const int cx = iparam(c, "cx"), cy = iparam(c, "cy"), len = iparam(c, "string_length");
        atoms.push_back(lieb_string_atom(bath, cx, cy, len, true, g, w0));
        atoms.push_back(lieb_string_atom(bath, cx + iparam(c, "shift"), cy, len, true, g, w0));
        break;
      }
      case ScenarioKind::lieb_mismatched: {
        // the vertical string crosses the horizontal one at a node of both states
        const int cx = iparam(c, "cx"), cy = iparam(c, "cy"), len = iparam(c, "string_length");
        atoms.push_back(lieb_string_atom(bath, cx, cy, len, true, g, w0));
        atoms.push_back(lieb_string_atom(bath, cx + 2, cy - 2, len, false, g, w0));
        break;
      }
      case ScenarioKind::custom:
        break;
    }
    sys.ensemble.validate(bath);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::invalid_geometry || e.kind() == ErrorKind::index_error)
      config_error(std::string("geometry does not fit the lattice: ") + e.what());
    throw;
  }
  return sys;
}

RunReport run_scenario(const ScenarioConfig& c, const std::string& output_dir) {
  validate_config(c);
  const fs::path root(output_dir);
  fs::create_directories(root);
  RunReport report;
  Json j;
  j["schema"] = 1;
  j["config"] = to_json(c);

  auto collect = [&](const PointResult& p, const std::string& prefix, Json& into) {
    Json files = Json::array();
    for (const auto& f : p.files) {
      files.push_back(prefix + f);
      report.files.push_back(prefix + f);
    }
    Json heads = Json::array();
    for (const auto& h : p.headlines) heads.push_back(headline_json(h));
    into["files"] = files;
    into["headlines"] = heads;
    into["results"] = p.results;
    into["warnings"] = p.warnings;
  };

  if (!c.sweep) {
    const PointResult p = run_point(c, root);
    collect(p, "", j);
    report.headlines = p.headlines;
  } else {
    const auto& values = c.sweep->values;
    std::vector<std::future<PointResult>> jobs;
    std::vector<std::string> dirs;
    for (std::size_t i = 0; i < values.size(); ++i) {
      ScenarioConfig point = c;
      point.sweep.reset();
      point.params[c.sweep->parameter] = values[i];
      char name[32];
      std::snprintf(name, sizeof name, "point_%03zu", i);
      dirs.push_back(name);
      jobs.push_back(std::async(std::launch::async, [point, dir = root / name] { return run_point(point, dir); }));
    }
    Json points = Json::array();
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      const PointResult p = jobs[i].get();
      Json entry{{"value", values[i]}, {"directory", dirs[i]}};
      collect(p, dirs[i] + "/", entry);
      points.push_back(entry);
      for (Headline h : p.headlines) {
        h.name = c.sweep->parameter + "=" + format_number(values[i]) + ":" + h.name;
        report.headlines.push_back(h);
      }
    }
    j["sweep"] = Json{{"parameter", c.sweep->parameter}, {"points", points}};
  }
  j["expectations_met"] = report.expectations_met();
  report.json = j;
  std::ofstream out(root / "report.json");
  if (!out) throw Error(ErrorKind::resource_error, "cannot write report.json");
  out << j.dump(2) << '\n';
  report.files.push_back("report.json");
  return report;
}

}  // namespace gla
