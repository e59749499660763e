#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gla/tolerances.hpp"
#include "gla/types.hpp"

namespace gla {

enum class Boundary { open, periodic };

const char* to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

enum class LatticeKind { chain, graphene, square, lieb_nnn, custom };

const char* to_string(LatticeKind k);
LatticeKind lattice_from_string(const std::string& s);

// Cell vector (a, b) plus sublattice index. 1D lattices use b = 0.
struct SiteLabel {
  int a = 0;
  int b = 0;
  int sub = 0;
  bool operator==(const SiteLabel& o) const { return a == o.a && b == o.b && sub == o.sub; }
};

// Bond between two distinct sites; the matrix element (to, from) is conj(amp).
struct Hopping {
  int from = 0;
  int to = 0;
  cplx amp;
};

// Hopping inside a Bloch description: <R, from| H |R + offset, to> = amp.
struct BlochHopping {
  int from = 0;
  int to = 0;
  std::array<int, 2> offset{0, 0};
  cplx amp;
};

struct BlochSpec {
  int dimension = 1;
  std::vector<std::array<double, 2>> bravais;
  int sublattice_count = 1;
  std::vector<BlochHopping> hoppings;
  std::vector<double> onsite;

  // h(k) with k in lattice coordinates (phase k . offset).
  MatrixXc bloch_matrix(double k1, double k2) const;
  void validate() const;
};

struct BathGraph {
  std::vector<SiteLabel> labels;
  std::vector<double> frequencies;
  std::vector<Hopping> hoppings;
  Boundary boundary = Boundary::open;

  // Provenance of builder-made lattices. Kept so the Bloch and analytic
  // resolvent paths can map sites back to cells.
  LatticeKind kind = LatticeKind::custom;
  std::array<int, 2> cells{0, 0};
  double hopping_scale = 1.0;
  double omega_c = 0.0;
  std::optional<BlochSpec> bloch;

  int n_sites() const { return static_cast<int>(labels.size()); }
  // Index of a labelled site, or -1 when absent (vacancies, open edges).
  int find(const SiteLabel& label) const;
  int index(const SiteLabel& label) const;  // throws index_error when absent
  void validate() const;
};

// Generic constructor: merges repeated bonds by summing amplitudes
// (a wrapped periodic bond can coincide with a direct one on small lattices).
BathGraph make_bath(std::vector<SiteLabel> labels, std::vector<double> frequencies,
                    const std::vector<Hopping>& bonds, Boundary boundary);

BathGraph tile(const BlochSpec& spec, int cells_a, int cells_b, Boundary boundary);

BlochSpec chain_spec(double J, double omega_c);
BlochSpec graphene_spec(double J, double omega_c);
BlochSpec square_spec(double J, double omega_c);
BlochSpec lieb_nnn_spec(double J);

// Chain and square use -J bonds; graphene and the Lieb lattice use +J.
BathGraph build_chain(int length, double J, double omega_c, Boundary boundary);
BathGraph build_graphene(int cells_a, int cells_b, double J, double omega_c, Boundary boundary);
BathGraph build_square(int side_a, int side_b, double J, double omega_c, Boundary boundary);
BathGraph build_lieb_nnn(int cells_a, int cells_b, double J, Boundary boundary);

// Lieb sublattice indices: A at the cell corner, B on the horizontal bond, C on the vertical.
enum LiebSub : int { lieb_a = 0, lieb_b = 1, lieb_c = 2 };
enum GrapheneSub : int { graphene_a = 0, graphene_b = 1 };

MatrixXc hamiltonian_matrix(const BathGraph& bath);
Eigen::MatrixXd hamiltonian_real(const BathGraph& bath);  // requires real hoppings
bool has_real_hoppings(const BathGraph& bath);
VectorXc apply_hamiltonian(const BathGraph& bath, const VectorXc& v);

struct BandStructure {
  std::vector<std::array<double, 2>> k_grid;
  std::array<int, 2> resolution{0, 0};
  Eigen::MatrixXd energies;                 // (k index, band)
  std::vector<MatrixXc> bloch_vectors;      // per k: columns are bands
  int band_count() const { return static_cast<int>(energies.cols()); }
  double min_energy() const { return energies.minCoeff(); }
  double max_energy() const { return energies.maxCoeff(); }
  // Largest energy step between neighbouring grid points, per band.
  double sampling_spacing() const;
};

// Uniform grid k_i = 2 pi m_i / resolution_i over the first Brillouin zone.
BandStructure band_structure(const BlochSpec& spec, int k_resolution);
BandStructure band_structure(const BlochSpec& spec, int res_a, int res_b);

BathGraph apply_vacancy(const BathGraph& bath, int site);

struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;  // ascending
  MatrixXc eigenvectors;        // columns, orthonormal
  int size() const { return static_cast<int>(eigenvalues.size()); }
  double span() const { return size() ? eigenvalues(size() - 1) - eigenvalues(0) : 0.0; }
  double level_spacing() const { return size() > 1 ? span() / (size() - 1) : 0.0; }
};

SpectralDecomposition diagonalize(const BathGraph& bath,
                                  std::size_t dense_limit = tol::dense_limit);
// Eigendecomposition of an arbitrary Hermitian matrix (real path when possible).
SpectralDecomposition diagonalize_hermitian(const MatrixXc& h);

// Coordinate-list export: row, col, re, im.
std::string hamiltonian_csv(const BathGraph& bath);

// Sites whose coordination is below the maximum found in the lattice.
std::vector<int> boundary_sites(const BathGraph& bath);
// Hop distance from the nearest boundary site (large when no boundary exists).
std::vector<int> boundary_distance(const BathGraph& bath);
std::vector<std::vector<int>> adjacency(const BathGraph& bath);

}  // namespace gla
