#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "gla/bath.hpp"
#include "gla/regression.hpp"
#include "gla/scenario.hpp"

using namespace gla;

namespace {

enum Exit { ok = 0, other = 1, config = 2, convergence = 3, regression = 4 };

void print_report(const RunReport& r, const std::string& dir) {
  for (const auto& h : r.headlines) {
    std::printf("%-40s %.10g", h.name.c_str(), h.value);
    if (h.expected) std::printf("  expected %.10g +- %.3g  %s", *h.expected, h.tolerance, h.pass() ? "ok" : "MISMATCH");
    std::printf("\n");
  }
  std::printf("report: %s/report.json\n", dir.c_str());
}

int run_config(ScenarioConfig cfg, const std::vector<std::string>& overrides, const std::string& out) {
  for (const auto& o : overrides) apply_override(cfg, o);
  const RunReport r = run_scenario(cfg, out);
  print_report(r, out);
  return Exit::ok;
}

int write_bands(const std::string& lattice, const std::string& out, int resolution, double J, double omega_c) {
  BlochSpec spec;
  switch (lattice_from_string(lattice)) {
    case LatticeKind::chain: spec = chain_spec(J, omega_c); break;
    case LatticeKind::graphene: spec = graphene_spec(J, omega_c); break;
    case LatticeKind::square: spec = square_spec(J, omega_c); break;
    case LatticeKind::lieb_nnn: spec = lieb_nnn_spec(J); break;
    case LatticeKind::custom: throw Error(ErrorKind::config_error, "custom lattices have no band structure");
  }
  const BandStructure bs = spec.dimension == 1 ? band_structure(spec, resolution, 1) : band_structure(spec, resolution);
  std::ofstream f(out);
  if (!f) throw Error(ErrorKind::resource_error, "cannot write " + out);
  f << "k1,k2";
  for (int b = 0; b < bs.band_count(); ++b) f << ",band" << b;
  f << '\n';
  char buf[64];
  for (std::size_t i = 0; i < bs.k_grid.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g", bs.k_grid[i][0], bs.k_grid[i][1]);
    f << buf;
    for (int b = 0; b < bs.band_count(); ++b) {
      std::snprintf(buf, sizeof buf, ",%.17g", bs.energies(i, b));
      f << buf;
    }
    f << '\n';
  }
  std::printf("%d bands on %zu k points: [%g, %g] -> %s\n", bs.band_count(), bs.k_grid.size(), bs.min_energy(),
              bs.max_energy(), out.c_str());
  return Exit::ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Giant atoms in structured photonic lattices"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "gla-out", scenario_name, lattice, bands_out;
  std::vector<std::string> overrides;
  std::vector<int> rows;
  double im_tol_scale = 1.0, J = 1.0, omega_c = 0.0;
  int resolution = 96;

  auto* run = app.add_subcommand("run", "Run a scenario from a JSON config");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("--set", overrides, "override key=value (dotted keys)");
  run->add_option("--out", out_dir, "output directory");

  auto* scen = app.add_subcommand("scenario", "Run a named scenario with its defaults");
  scen->add_option("name", scenario_name, "scenario name")->required();
  scen->add_option("--set", overrides, "override key=value (dotted keys)");
  scen->add_option("--out", out_dir, "output directory");

  auto* list = app.add_subcommand("list", "List scenarios and print a default config");
  list->add_option("name", scenario_name, "scenario whose default config is printed");

  auto* regress = app.add_subcommand("regress", "Run the regression table");
  regress->add_option("--im-tol-scale", im_tol_scale, "multiply the Im tolerances of bound-state certification");
  regress->add_option("--row", rows, "run only these rows");

  auto* bands = app.add_subcommand("bands", "Write a Bloch band structure");
  bands->add_option("lattice", lattice, "chain, graphene, square or lieb")->required();
  bands->add_option("--out", bands_out, "CSV path")->required();
  bands->add_option("--resolution", resolution, "k points per direction")->check(CLI::PositiveNumber);
  bands->add_option("--J", J, "hopping rate");
  bands->add_option("--omega-c", omega_c, "cavity frequency");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const ScenarioConfig cfg = load_config(config_path);
      return run_config(cfg, overrides, out_dir);
    }
    if (*scen) return run_config(default_config(scenario_from_string(scenario_name)), overrides, out_dir);
    if (*list) {
      if (scenario_name.empty()) {
        for (auto k : all_scenarios()) std::printf("%s\n", to_string(k));
      } else {
        std::printf("%s\n", to_json(default_config(scenario_from_string(scenario_name))).dump(2).c_str());
      }
      return Exit::ok;
    }
    if (*regress) {
      RegressionOptions opts;
      opts.im_tol_scale = im_tol_scale;
      const auto table = run_regression(opts, rows);
      std::cout << format_regression_table(table);
      for (const auto& r : table)
        if (r.status != RowStatus::pass) return Exit::regression;
      return Exit::ok;
    }
    if (*bands) return write_bands(lattice, bands_out, resolution, J, omega_c);
  } catch (const Error& e) {
    std::cerr << "gla: " << e.what() << '\n';
    if (e.kind() == ErrorKind::config_error || e.kind() == ErrorKind::invalid_geometry) return Exit::config;
    if (e.kind() == ErrorKind::convergence) return Exit::convergence;
    return Exit::other;
  } catch (const std::exception& e) {
    std::cerr << "gla: " << e.what() << '\n';
    return Exit::other;
  }
  return Exit::other;
}
