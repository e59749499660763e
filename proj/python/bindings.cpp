#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gla/boundstates.hpp"
#include "gla/dynamics.hpp"
#include "gla/geometry.hpp"
#include "gla/regression.hpp"
#include "gla/scenario.hpp"

namespace py = pybind11;
using namespace gla;

namespace {

Boundary boundary_arg(const std::string& s) { return boundary_from_string(s); }

py::dict vds_dict(const VDS& v) {
  py::dict d;
  d["energy"] = v.energy;
  d["psi"] = v.psi_vds;
  d["coupling_overlap"] = v.coupling_overlap;
  d["eta"] = v.eta;
  d["theta"] = v.theta;
  d["excited_weight"] = v.excited_weight();
  d["degenerate"] = v.degenerate;
  d["localized"] = v.localization.localized;
  d["check_residuals"] = v.check_residuals;
  return d;
}

py::object bs_dict(const std::optional<BoundState>& bs) {
  if (!bs) return py::none();
  py::dict d;
  d["omega"] = bs->omega_bs;
  d["photon"] = bs->photon_amplitudes;
  d["atom_fraction"] = bs->atom_fraction;
  d["residual"] = bs->residual;
  d["classification"] = to_string(bs->classification);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Giant atoms in structured photonic lattices";

  py::register_exception<Error>(m, "GlaError");

  py::class_<BathGraph>(m, "Bath")
      .def_property_readonly("n_sites", &BathGraph::n_sites)
      .def_property_readonly("kind", [](const BathGraph& b) { return to_string(b.kind); })
      .def("index", [](const BathGraph& b, int a, int bb, int sub) { return b.index({a, bb, sub}); },
           py::arg("a"), py::arg("b") = 0, py::arg("sub") = 0)
      .def("label", [](const BathGraph& b, int i) {
        const auto& l = b.labels.at(i);
        return py::make_tuple(l.a, l.b, l.sub);
      })
      .def("hamiltonian", [](const BathGraph& b) { return hamiltonian_matrix(b); });

  m.def("chain", [](int n, double J, double omega_c, const std::string& bc) { return build_chain(n, J, omega_c, boundary_arg(bc)); },
        py::arg("length"), py::arg("J") = 1.0, py::arg("omega_c") = 0.0, py::arg("boundary") = "open");
  m.def("graphene", [](int a, int b, double J, double omega_c, const std::string& bc) {
          return build_graphene(a, b, J, omega_c, boundary_arg(bc));
        },
        py::arg("cells_a"), py::arg("cells_b"), py::arg("J") = 1.0, py::arg("omega_c") = 0.0, py::arg("boundary") = "open");
  m.def("square", [](int a, int b, double J, double omega_c, const std::string& bc) {
          return build_square(a, b, J, omega_c, boundary_arg(bc));
        },
        py::arg("side_a"), py::arg("side_b"), py::arg("J") = 1.0, py::arg("omega_c") = 0.0, py::arg("boundary") = "open");
  m.def("lieb", [](int a, int b, double J, const std::string& bc) { return build_lieb_nnn(a, b, J, boundary_arg(bc)); },
        py::arg("cells_a"), py::arg("cells_b"), py::arg("J") = 1.0, py::arg("boundary") = "open");

  py::class_<GiantAtom>(m, "Atom")
      .def(py::init([](double omega0, const std::vector<std::pair<int, cplx>>& couplings) {
             GiantAtom a{omega0, {}};
             for (const auto& [s, g] : couplings) a.couplings.push_back({s, g});
             return a;
           }),
           py::arg("omega0"), py::arg("couplings"))
      .def_readwrite("omega0", &GiantAtom::omega0)
      .def_property_readonly("couplings", [](const GiantAtom& a) {
        std::vector<std::pair<int, cplx>> out;
        for (const auto& c : a.couplings) out.emplace_back(c.site, c.g);
        return out;
      })
      .def_property_readonly("gbar", [](const GiantAtom& a) { return effective_strength(a); });

  m.def("graphene_three_point", &graphene_three_point, py::arg("bath"), py::arg("ca"), py::arg("cb"),
        py::arg("vds_sub"), py::arg("g"), py::arg("omega0"));
  m.def("graphene_four_point", &graphene_four_point, py::arg("bath"), py::arg("ca"), py::arg("cb"), py::arg("g"),
        py::arg("omega0"));
  m.def("lieb_string_atom", &lieb_string_atom, py::arg("bath"), py::arg("start_a"), py::arg("start_b"),
        py::arg("string_length"), py::arg("horizontal"), py::arg("g"), py::arg("omega0"));
  m.def("square_diamond", &square_diamond, py::arg("bath"), py::arg("cx"), py::arg("cy"), py::arg("mu"), py::arg("g"),
        py::arg("omega0"));
  m.def("chain_atom", &chain_atom, py::arg("bath"), py::arg("positions"), py::arg("g"), py::arg("omega0"));
  m.def("chain_pair_atom", &chain_pair_atom, py::arg("bath"), py::arg("first"), py::arg("second"), py::arg("gbar"),
        py::arg("theta"), py::arg("omega0"));

  py::class_<BathResolvent>(m, "Resolvent")
      .def_static("finite", [](const BathGraph& b) { return BathResolvent::finite(b); })
      .def_static("analytic_chain", [](const BathGraph& b) { return BathResolvent::analytic_chain(b); })
      .def("bands", &BathResolvent::band_intervals)
      .def("in_gap", &BathResolvent::in_gap)
      .def("self_energy", [](const BathResolvent& r, const GiantAtom& a, double omega) {
        const double g = effective_strength(a);
        return g * g * self_energy(a, r, ResolventQuery::richardson(omega, 0.0, r.preferred_backend())).value;
      });

  m.def("vds_search", [](const GiantAtom& a, const BathGraph& b) {
    py::list out;
    for (const auto& v : vds_search(a, b)) out.append(vds_dict(v));
    return out;
  });
  m.def("weak_coupling_bs", [](const GiantAtom& a, const BathResolvent& r) { return bs_dict(weak_coupling_bs(a, r)); });
  m.def("ingap_bound_states", [](const GiantAtom& a, const BathResolvent& r, double reach) {
    py::list out;
    for (const auto& [lo, hi] : gap_windows(r, reach))
      if (auto bs = find_ingap_bs(a, r, lo, hi)) out.append(bs_dict(bs));
    return out;
  }, py::arg("atom"), py::arg("resolvent"), py::arg("reach") = 20.0);

  m.def("rates", [](const std::vector<GiantAtom>& atoms, const BathResolvent& r) {
    const auto rates = rates_green(EmitterEnsemble{atoms}, r);
    return py::make_tuple(rates.K, rates.gamma);
  }, "Coherent couplings K and collective dissipation gamma at the atoms' common frequency.");
  m.def("dfh_check", [](const std::vector<GiantAtom>& atoms, const BathResolvent& r) {
    const EmitterEnsemble ens{atoms};
    const auto rep = dfh_check(rates_green(ens, r), ens, r);
    py::dict d;
    d["is_dfh"] = rep.is_dfh;
    d["dfh_tol"] = rep.dfh_tol;
    d["max_gamma_eigenvalue"] = rep.max_gamma_eigenvalue;
    d["zero_interaction_pairs"] = rep.zero_interaction_pairs;
    d["per_atom_bs_exists"] = rep.per_atom_bs_exists;
    if (std::all_of(rep.per_atom_bs_exists.begin(), rep.per_atom_bs_exists.end(), [](bool b) { return b; }))
      d["K_bound_states"] = heff_from_bs(ens, rep.bound_states).K;
    return d;
  });
  m.def("braided_rates_closed_form", [](double theta, double k0, int d, int x21, double gbar, double J) {
    const auto r = braided_rates_closed_form(theta, k0, d, x21, gbar, J);
    return py::make_tuple(r.K12, r.gamma12, r.gamma11);
  }, py::arg("theta"), py::arg("k0"), py::arg("d"), py::arg("x21"), py::arg("gbar"), py::arg("J") = 1.0);

  m.def("default_config_json", [](const std::string& name) {
    return to_json(default_config(scenario_from_string(name))).dump();
  });
  m.def("run_scenario_json", [](const std::string& config, const std::string& out_dir) {
    const auto cfg = config_from_json(Json::parse(config));
    py::gil_scoped_release release;
    return run_scenario(cfg, out_dir).json.dump();
  });
  m.def("scenarios", [] {
    std::vector<std::string> out;
    for (auto k : all_scenarios()) out.push_back(to_string(k));
    return out;
  });
  m.def("regression_row", [](int id, double im_tol_scale) {
    RegressionRow row;
    {
      py::gil_scoped_release release;
      row = run_regression_row(id, RegressionOptions{im_tol_scale});
    }
    py::dict d;
    d["id"] = row.id;
    d["title"] = row.title;
    d["status"] = to_string(row.status);
    d["detail"] = row.detail;
    d["seconds"] = row.seconds;
    return d;
  }, py::arg("id"), py::arg("im_tol_scale") = 1.0);
}
