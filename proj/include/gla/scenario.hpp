#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gla/bath.hpp"
#include "gla/emitters.hpp"
#include "gla/greens.hpp"

namespace gla {

using Json = nlohmann::ordered_json;

enum class ScenarioKind {
  graphene3,
  graphene4,
  graphene_chain,
  waveguide_serial,
  waveguide_braided,
  waveguide_nested,
  square_braided,
  square_nested,
  lieb_pair,
  lieb_mismatched,
  custom,
};

const char* to_string(ScenarioKind k);
ScenarioKind scenario_from_string(const std::string& name);
const std::vector<ScenarioKind>& all_scenarios();

enum class OutputKind { self_energy, ldos, bound_states, vds, rates, dfh_report, lindblad, exact_evolution };

const char* to_string(OutputKind k);
OutputKind output_from_string(const std::string& name);

struct LatticeConfig {
  LatticeKind kind = LatticeKind::chain;
  std::vector<int> size;
  double J = 1.0;
  double omega_c = 0.0;
  Boundary boundary = Boundary::open;
  bool operator==(const LatticeConfig&) const = default;
};

struct CouplingConfig {
  SiteLabel site;
  double g = 0.0;
  bool operator==(const CouplingConfig&) const = default;
};

struct AtomConfig {
  double omega0 = 0.0;
  std::vector<CouplingConfig> couplings;
  bool operator==(const AtomConfig&) const = default;
};

struct SweepConfig {
  std::string parameter;
  std::vector<double> values;
  bool operator==(const SweepConfig&) const = default;
};

struct WindowConfig {
  double omega_min = -3.5;
  double omega_max = 3.5;
  int points = 281;
  bool operator==(const WindowConfig&) const = default;
};

struct TimeConfig {
  double t_max = 200.0;
  int steps = 200;
  bool operator==(const TimeConfig&) const = default;
};

struct ScenarioConfig {
  int schema = 1;
  ScenarioKind scenario = ScenarioKind::custom;
  LatticeConfig lattice;
  Backend backend = Backend::finite_spectral;
  std::map<std::string, double> params;  // scenario geometry and strengths
  std::vector<AtomConfig> atoms;         // custom scenario only
  std::optional<SweepConfig> sweep;
  std::vector<OutputKind> outputs;
  WindowConfig window;
  TimeConfig time;
  bool operator==(const ScenarioConfig&) const = default;
};

ScenarioConfig default_config(ScenarioKind kind);
Json to_json(const ScenarioConfig& c);
// Missing fields take the scenario defaults; unknown fields are config errors.
ScenarioConfig config_from_json(const Json& j);
ScenarioConfig load_config(const std::string& path);
// "key=value" with dotted keys, e.g. params.g=0.1 or lattice.size=[41,41]; the value is JSON
// when it parses as JSON and a string otherwise.
void apply_override(ScenarioConfig& c, const std::string& assignment);
// Geometric rules of the scenario, checked before anything is built.
void validate_config(const ScenarioConfig& c);

struct ScenarioSystem {
  BathGraph bath;
  EmitterEnsemble ensemble;
};

ScenarioSystem build_system(const ScenarioConfig& c);

struct Headline {
  std::string name;
  double value = 0.0;
  std::optional<double> expected;  // set when a published value applies
  double tolerance = 0.0;          // absolute
  std::string note;

  bool has_expectation() const { return expected.has_value(); }
  bool pass() const;
};

struct RunReport {
  Json json;
  std::vector<std::string> files;
  std::vector<Headline> headlines;

  bool expectations_met() const;
};

// Deterministic: the same config writes byte-identical CSV files into `output_dir`.
RunReport run_scenario(const ScenarioConfig& c, const std::string& output_dir);

}  // namespace gla
