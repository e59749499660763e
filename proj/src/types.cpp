#include "gla/types.hpp"

#include <cmath>

namespace gla {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_geometry: return "invalid-geometry";
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::index_error: return "index-error";
    case ErrorKind::resource_error: return "resource-error";
    case ErrorKind::spec_error: return "spec-error";
    case ErrorKind::regularization_required: return "regularization-required";
    case ErrorKind::out_of_band: return "out-of-band";
    case ErrorKind::pole_proximity: return "pole-proximity";
    case ErrorKind::degenerate_emitter: return "degenerate-emitter";
    case ErrorKind::not_a_gap: return "not-a-gap";
    case ErrorKind::convergence: return "convergence-error";
    case ErrorKind::stale_root: return "stale-root";
    case ErrorKind::unsupported_configuration: return "unsupported-configuration";
    case ErrorKind::not_decoherence_free: return "not-decoherence-free";
    case ErrorKind::invalid_state: return "invalid-state";
    case ErrorKind::config_error: return "config-error";
  }
  return "error";
}

VectorXc SparseState::dense(int n_sites) const {
  VectorXc v = VectorXc::Zero(n_sites);
  for (std::size_t i = 0; i < sites.size(); ++i) v(sites[i]) += amps[i];
  return v;
}

double SparseState::norm() const {
  double s = 0.0;
  for (const auto& a : amps) s += std::norm(a);
  return std::sqrt(s);
}

}  // namespace gla
