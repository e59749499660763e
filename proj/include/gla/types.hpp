#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace gla {

using cplx = std::complex<double>;
using VectorXc = Eigen::VectorXcd;
using MatrixXc = Eigen::MatrixXcd;

constexpr double kPi = 3.14159265358979323846;
constexpr cplx kI{0.0, 1.0};

enum class ErrorKind {
  invalid_geometry,
  invalid_argument,
  index_error,
  resource_error,
  spec_error,
  regularization_required,
  out_of_band,
  pole_proximity,
  degenerate_emitter,
  not_a_gap,
  convergence,
  stale_root,
  unsupported_configuration,
  not_decoherence_free,
  invalid_state,
  config_error,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Sparse single-photon amplitude list over bath sites.
struct SparseState {
  std::vector<int> sites;
  std::vector<cplx> amps;

  std::size_t size() const { return sites.size(); }
  VectorXc dense(int n_sites) const;
  double norm() const;
};

}  // namespace gla
