#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "gla/scenario.hpp"

using namespace gla;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gla-test-" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::invalid_argument;
}

bool config_error_mentions(const ScenarioConfig& c, const std::string& text) {
  try {
    validate_config(c);
  } catch (const Error& e) {
    return e.kind() == ErrorKind::config_error && std::string(e.what()).find(text) != std::string::npos;
  }
  return false;
}

ScenarioConfig small_custom() {
  ScenarioConfig c = default_config(ScenarioKind::custom);
  c.lattice.size = {61};
  c.atoms = {AtomConfig{0.0, {{{28, 0, 0}, 0.05}, {{30, 0, 0}, 0.05}}},
             AtomConfig{0.0, {{{29, 0, 0}, 0.05}, {{31, 0, 0}, 0.05}}}};
  c.outputs = {OutputKind::bound_states, OutputKind::rates, OutputKind::dfh_report, OutputKind::lindblad,
               OutputKind::exact_evolution, OutputKind::self_energy, OutputKind::ldos, OutputKind::vds};
  c.window.points = 21;
  c.time = {10.0, 20};
  return c;
}

}  // namespace

TEST_CASE("names round-trip") {
  for (auto k : all_scenarios()) CHECK(scenario_from_string(to_string(k)) == k);
  for (int i = 0; i < 8; ++i) CHECK(output_from_string(to_string(static_cast<OutputKind>(i))) == static_cast<OutputKind>(i));
  CHECK(kind_of([] { scenario_from_string("nope"); }) == ErrorKind::config_error);
}

TEST_CASE("every config survives serialization") {
  for (auto k : all_scenarios()) {
    ScenarioConfig c = default_config(k);
    if (k == ScenarioKind::custom) c = small_custom();
    CHECK(config_from_json(Json::parse(to_json(c).dump())) == c);
    c.sweep = SweepConfig{"initial_atom", {0, 1}};
    c.backend = Backend::finite_spectral;
    CHECK(config_from_json(Json::parse(to_json(c).dump())) == c);
  }
}

TEST_CASE("partial configs take scenario defaults") {
  const auto c = config_from_json(Json::parse(R"({"schema": 1, "scenario": "square_nested", "params": {"g": 0.1}})"));
  ScenarioConfig expected = default_config(ScenarioKind::square_nested);
  expected.params["g"] = 0.1;
  CHECK(c == expected);
}

TEST_CASE("malformed configs are config errors") {
  auto parse = [](const char* text) { return [text] { config_from_json(Json::parse(text)); }; };
  CHECK(kind_of(parse(R"({"scenario": "lieb_pair"})")) == ErrorKind::config_error);
  CHECK(kind_of(parse(R"({"schema": 2, "scenario": "lieb_pair"})")) == ErrorKind::config_error);
  CHECK(kind_of(parse(R"({"schema": 1, "scenario": "lieb_pair", "colour": 1})")) == ErrorKind::config_error);
  CHECK(kind_of(parse(R"({"schema": 1, "scenario": "lieb_pair", "params": {"mu": 3}})")) == ErrorKind::config_error);
  CHECK(kind_of(parse(R"({"schema": 1, "scenario": "lieb_pair", "params": {"g": "big"}})")) == ErrorKind::config_error);
  CHECK(kind_of(parse(R"({"schema": 1, "lattice": {"kind": "hexagon"}})")) == ErrorKind::config_error);
  CHECK(kind_of(parse(R"({"schema": 1, "outputs": ["movie"]})")) == ErrorKind::config_error);
  CHECK(kind_of([] { load_config("/nonexistent/config.json"); }) == ErrorKind::config_error);
}

TEST_CASE("overrides address dotted keys and bare parameters") {
  ScenarioConfig c = default_config(ScenarioKind::waveguide_braided);
  apply_override(c, "g=0.2");
  apply_override(c, "params.theta=0.5");
  apply_override(c, "lattice.size=[501]");
  apply_override(c, "backend=analytic");
  apply_override(c, "sweep={\"parameter\": \"g\", \"values\": [0.1, 0.2]}");
  CHECK(c.params.at("g") == 0.2);
  CHECK(c.params.at("theta") == 0.5);
  CHECK(c.lattice.size == std::vector<int>{501});
  CHECK(c.backend == Backend::analytic_chain);
  REQUIRE(c.sweep.has_value());
  CHECK(c.sweep->values.size() == 2);
  CHECK(kind_of([&] { apply_override(c, "novalue"); }) == ErrorKind::config_error);
  CHECK(kind_of([&] { apply_override(c, "params.nope=1"); }) == ErrorKind::config_error);
}

TEST_CASE("geometric rules are enforced with the rule named") {
  auto with = [](ScenarioKind k, const std::string& key, double v) {
    ScenarioConfig c = default_config(k);
    c.params[key] = v;
    return c;
  };
  for (auto k : all_scenarios())
    if (k != ScenarioKind::custom) CHECK_NOTHROW(validate_config(default_config(k)));
  CHECK(config_error_mentions(with(ScenarioKind::waveguide_braided, "x22", 2), "0 < x21 < d < x22"));
  CHECK(config_error_mentions(with(ScenarioKind::waveguide_serial, "x21", 1), "d < x21 < x22"));
  CHECK(config_error_mentions(with(ScenarioKind::waveguide_nested, "x22", 7), "x21 < x22 < d"));
  CHECK(config_error_mentions(with(ScenarioKind::lieb_pair, "string_length", 7), "size law"));
  CHECK(config_error_mentions(with(ScenarioKind::lieb_mismatched, "string_length", 9), "size law"));
  CHECK(config_error_mentions(with(ScenarioKind::square_braided, "shift", 6), "odd shift"));
  CHECK(config_error_mentions(with(ScenarioKind::square_braided, "mu", 4), "odd"));
  CHECK(config_error_mentions(with(ScenarioKind::square_nested, "mu_inner", 7), "mu_inner < mu_outer"));
  CHECK(config_error_mentions(with(ScenarioKind::graphene3, "g", -0.1), "positive"));
  CHECK(config_error_mentions(with(ScenarioKind::graphene3, "cx", 1.5), "integer"));
  CHECK(config_error_mentions(with(ScenarioKind::graphene3, "initial_atom", 2), "initial_atom"));
  CHECK(config_error_mentions(with(ScenarioKind::waveguide_serial, "origin", 1998), "fit"));

  ScenarioConfig c = default_config(ScenarioKind::graphene3);
  c.backend = Backend::analytic_chain;
  CHECK(config_error_mentions(c, "chain only"));
  c = default_config(ScenarioKind::graphene3);
  c.backend = Backend::bloch_sum;
  CHECK(config_error_mentions(c, "periodic"));
  c = default_config(ScenarioKind::graphene3);
  c.lattice.kind = LatticeKind::square;
  CHECK(config_error_mentions(c, "graphene lattice"));
  c = default_config(ScenarioKind::lieb_pair);
  c.sweep = SweepConfig{"string_length", {5, 11, 7}};
  CHECK(config_error_mentions(c, "size law"));
  c.sweep = SweepConfig{"nope", {1}};
  CHECK(config_error_mentions(c, "sweep parameter"));
  CHECK(config_error_mentions(default_config(ScenarioKind::custom), "list their atoms"));
}

TEST_CASE("geometry that leaves the lattice is a config error") {
  ScenarioConfig c = default_config(ScenarioKind::graphene4);
  c.params["cx"] = 30;
  CHECK(kind_of([&] { build_system(c); }) == ErrorKind::config_error);
}

TEST_CASE("systems are built to the scenario geometry") {
  const auto sys = build_system(default_config(ScenarioKind::waveguide_nested));
  REQUIRE(sys.ensemble.size() == 2);
  CHECK(sys.ensemble.atoms[0].couplings[0].site == 1000);
  CHECK(sys.ensemble.atoms[0].couplings[1].site == 1006);
  CHECK(sys.ensemble.atoms[1].couplings[0].site == 1001);
  CHECK(sys.ensemble.atoms[1].couplings[1].site == 1003);
  CHECK(std::abs(sys.ensemble.atoms[0].couplings[0].g - 0.05) < 1e-15);
  const auto chain = build_system(default_config(ScenarioKind::graphene_chain));
  CHECK(chain.ensemble.size() == 4);
}

TEST_CASE("a custom run writes every requested artifact and is deterministic") {
  const ScenarioConfig c = small_custom();
  const auto a = scratch("custom-a"), b = scratch("custom-b");
  const RunReport ra = run_scenario(c, a.string());
  run_scenario(c, b.string());
  for (const char* f : {"bound_states.csv", "rates.csv", "dfh_report.csv", "lindblad.csv", "exact_evolution.csv",
                        "self_energy.csv", "ldos.csv", "vds.csv", "vds_amplitudes.csv", "report.json"}) {
    CHECK(fs::exists(a / f));
    if (std::string(f).ends_with(".csv")) CHECK(slurp(a / f) == slurp(b / f));
  }
  const Json report = Json::parse(slurp(a / "report.json"));
  CHECK(config_from_json(report.at("config")) == c);
  CHECK(report.at("results").at("dfh_report").at("is_dfh") == true);
  for (const auto& h : report.at("headlines")) CHECK(h.at("provenance") == "computed-only");
  CHECK(ra.expectations_met());
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("sweeps write one directory per point") {
  ScenarioConfig c = small_custom();
  c.outputs = {OutputKind::rates};
  c.sweep = SweepConfig{"initial_atom", {0, 1}};
  const auto dir = scratch("sweep");
  const RunReport r = run_scenario(c, dir.string());
  CHECK(fs::exists(dir / "point_000" / "rates.csv"));
  CHECK(fs::exists(dir / "point_001" / "rates.csv"));
  CHECK(r.json.at("sweep").at("points").size() == 2);
  CHECK(slurp(dir / "point_000" / "rates.csv") == slurp(dir / "point_001" / "rates.csv"));
  fs::remove_all(dir);
}

TEST_CASE("published expectations attach only to the published geometry") {
  ScenarioConfig c = default_config(ScenarioKind::lieb_mismatched);
  c.outputs = {OutputKind::dfh_report};
  const auto dir = scratch("lieb-mismatched");
  const RunReport r = run_scenario(c, dir.string());
  bool saw = false;
  for (const auto& h : r.headlines)
    if (h.name == "K12") {
      saw = true;
      CHECK(h.has_expectation());
      CHECK(h.pass());
    }
  CHECK(saw);
  CHECK(r.expectations_met());
  c.params["omega0"] = -0.5;
  const RunReport shifted = run_scenario(c, dir.string());
  for (const auto& h : shifted.headlines) CHECK(!h.has_expectation());
  fs::remove_all(dir);
}
