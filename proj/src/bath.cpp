#include "gla/bath.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <deque>
#include <map>
#include <sstream>
#include <tuple>

#include <Eigen/Eigenvalues>

namespace gla {

const char* to_string(Boundary b) { return b == Boundary::open ? "open" : "periodic"; }

Boundary boundary_from_string(const std::string& s) {
  if (s == "open") return Boundary::open;
  if (s == "periodic") return Boundary::periodic;
  throw Error(ErrorKind::invalid_argument, "unknown boundary '" + s + "'");
}

const char* to_string(LatticeKind k) {
  switch (k) {
    case LatticeKind::chain: return "chain";
    case LatticeKind::graphene: return "graphene";
    case LatticeKind::square: return "square";
    case LatticeKind::lieb_nnn: return "lieb";
    case LatticeKind::custom: return "custom";
  }
  return "custom";
}

LatticeKind lattice_from_string(const std::string& s) {
  if (s == "chain") return LatticeKind::chain;
  if (s == "graphene") return LatticeKind::graphene;
  if (s == "square") return LatticeKind::square;
  if (s == "lieb" || s == "lieb_nnn") return LatticeKind::lieb_nnn;
  if (s == "custom") return LatticeKind::custom;
  throw Error(ErrorKind::invalid_argument, "unknown lattice '" + s + "'");
}

MatrixXc BlochSpec::bloch_matrix(double k1, double k2) const {
  MatrixXc h = MatrixXc::Zero(sublattice_count, sublattice_count);
  for (int s = 0; s < sublattice_count; ++s) h(s, s) = onsite.empty() ? 0.0 : onsite[s];
  for (const auto& hop : hoppings) {
    const cplx term = hop.amp * std::exp(kI * (k1 * hop.offset[0] + k2 * hop.offset[1]));
    h(hop.from, hop.to) += term;
    h(hop.to, hop.from) += std::conj(term);
  }
  return h;
}

void BlochSpec::validate() const {
  if (dimension != 1 && dimension != 2)
    throw Error(ErrorKind::spec_error, "dimension must be 1 or 2");
  if (sublattice_count < 1) throw Error(ErrorKind::spec_error, "no sublattices");
  if (!onsite.empty() && static_cast<int>(onsite.size()) != sublattice_count)
    throw Error(ErrorKind::spec_error, "onsite list does not match sublattice count");
  for (const auto& hop : hoppings) {
    if (hop.from < 0 || hop.to < 0 || hop.from >= sublattice_count || hop.to >= sublattice_count)
      throw Error(ErrorKind::spec_error, "hopping references a missing sublattice");
    if (hop.from == hop.to && hop.offset[0] == 0 && hop.offset[1] == 0)
      throw Error(ErrorKind::spec_error, "self-hopping inside the unit cell");
    if (dimension == 1 && hop.offset[1] != 0)
      throw Error(ErrorKind::spec_error, "1D spec with a second-axis offset");
  }
  const int samples = 7;
  for (int i = 0; i < samples; ++i) {
    for (int j = 0; j < (dimension == 2 ? samples : 1); ++j) {
      const double k1 = 2.0 * kPi * (i + 0.37) / samples;
      const double k2 = dimension == 2 ? 2.0 * kPi * (j + 0.21) / samples : 0.0;
      const MatrixXc h = bloch_matrix(k1, k2);
      if ((h - h.adjoint()).cwiseAbs().maxCoeff() > tol::hermitian)
        throw Error(ErrorKind::spec_error, "Bloch Hamiltonian is not Hermitian");
    }
  }
}

int BathGraph::find(const SiteLabel& label) const {
  if (kind != LatticeKind::custom && labels.size() ==
      static_cast<std::size_t>(cells[0]) * std::max(cells[1], 1) * (bloch ? bloch->sublattice_count : 1)) {
    const int subl = bloch ? bloch->sublattice_count : 1;
    if (label.a < 0 || label.a >= cells[0] || label.b < 0 || label.b >= std::max(cells[1], 1) ||
        label.sub < 0 || label.sub >= subl)
      return -1;
    const int idx = (label.b * cells[0] + label.a) * subl + label.sub;
    if (labels[idx] == label) return idx;
  }
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return static_cast<int>(i);
  return -1;
}

int BathGraph::index(const SiteLabel& label) const {
  const int i = find(label);
  if (i < 0) {
    std::ostringstream os;
    os << "no site at cell (" << label.a << ", " << label.b << ") sublattice " << label.sub;
    throw Error(ErrorKind::index_error, os.str());
  }
  return i;
}

void BathGraph::validate() const {
  const int n = n_sites();
  if (static_cast<int>(frequencies.size()) != n)
    throw Error(ErrorKind::invalid_geometry, "frequency list does not match site count");
  std::map<std::pair<int, int>, int> seen;
  for (const auto& h : hoppings) {
    if (h.from < 0 || h.to < 0 || h.from >= n || h.to >= n)
      throw Error(ErrorKind::index_error, "hopping references a missing site");
    if (h.from == h.to) throw Error(ErrorKind::invalid_geometry, "self-hopping");
    const auto key = std::minmax(h.from, h.to);
    if (seen.count(key)) throw Error(ErrorKind::invalid_geometry, "duplicate hopping pair");
    seen[key] = 1;
  }
}

BathGraph make_bath(std::vector<SiteLabel> labels, std::vector<double> frequencies,
                    const std::vector<Hopping>& bonds, Boundary boundary) {
  BathGraph g;
  g.labels = std::move(labels);
  g.frequencies = std::move(frequencies);
  g.boundary = boundary;
  const int n = g.n_sites();
  if (n < 1) throw Error(ErrorKind::invalid_geometry, "empty bath");
  if (static_cast<int>(g.frequencies.size()) != n)
    throw Error(ErrorKind::invalid_geometry, "frequency list does not match site count");
  std::map<std::pair<int, int>, cplx> merged;
  for (const auto& b : bonds) {
    if (b.from < 0 || b.to < 0 || b.from >= n || b.to >= n)
      throw Error(ErrorKind::index_error, "bond references a missing site");
    if (b.from == b.to) throw Error(ErrorKind::invalid_geometry, "self-hopping");
    if (b.from < b.to)
      merged[{b.from, b.to}] += b.amp;
    else
      merged[{b.to, b.from}] += std::conj(b.amp);
  }
  g.hoppings.reserve(merged.size());
  for (const auto& [key, amp] : merged)
    if (amp != cplx(0.0)) g.hoppings.push_back({key.first, key.second, amp});
  return g;
}

BathGraph tile(const BlochSpec& spec, int cells_a, int cells_b, Boundary boundary) {
  spec.validate();
  if (spec.dimension == 1) cells_b = 1;
  const int subl = spec.sublattice_count;
  auto site = [&](int a, int b, int s) { return (b * cells_a + a) * subl + s; };
  std::vector<SiteLabel> labels;
  std::vector<double> freqs;
  labels.reserve(static_cast<std::size_t>(cells_a) * cells_b * subl);
  for (int b = 0; b < cells_b; ++b)
    for (int a = 0; a < cells_a; ++a)
      for (int s = 0; s < subl; ++s) {
        labels.push_back({a, b, s});
        freqs.push_back(spec.onsite.empty() ? 0.0 : spec.onsite[s]);
      }
  std::vector<Hopping> bonds;
  for (int b = 0; b < cells_b; ++b)
    for (int a = 0; a < cells_a; ++a)
      for (const auto& hop : spec.hoppings) {
        int ta = a + hop.offset[0];
        int tb = b + hop.offset[1];
        if (boundary == Boundary::periodic) {
          ta = ((ta % cells_a) + cells_a) % cells_a;
          tb = ((tb % cells_b) + cells_b) % cells_b;
        } else if (ta < 0 || ta >= cells_a || tb < 0 || tb >= cells_b) {
          continue;
        }
        const int i = site(a, b, hop.from);
        const int j = site(ta, tb, hop.to);
        if (i == j) throw Error(ErrorKind::invalid_geometry, "lattice too small: bond wraps onto itself");
        bonds.push_back({i, j, hop.amp});
      }
  BathGraph g = make_bath(std::move(labels), std::move(freqs), bonds, boundary);
  g.cells = {cells_a, spec.dimension == 1 ? 1 : cells_b};
  g.bloch = spec;
  return g;
}

BlochSpec chain_spec(double J, double omega_c) {
  BlochSpec s;
  s.dimension = 1;
  s.bravais = {{1.0, 0.0}};
  s.sublattice_count = 1;
  s.onsite = {omega_c};
  s.hoppings = {{0, 0, {1, 0}, cplx(-J)}};
  return s;
}

BlochSpec graphene_spec(double J, double omega_c) {
  BlochSpec s;
  s.dimension = 2;
  s.bravais = {{1.5, std::sqrt(3.0) / 2.0}, {1.5, -std::sqrt(3.0) / 2.0}};
  s.sublattice_count = 2;
  s.onsite = {omega_c, omega_c};
  s.hoppings = {{graphene_a, graphene_b, {0, 0}, cplx(J)},
                {graphene_a, graphene_b, {-1, 0}, cplx(J)},
                {graphene_a, graphene_b, {0, -1}, cplx(J)}};
  return s;
}

BlochSpec square_spec(double J, double omega_c) {
  BlochSpec s;
  s.dimension = 2;
  s.bravais = {{1.0, 0.0}, {0.0, 1.0}};
  s.sublattice_count = 1;
  s.onsite = {omega_c};
  s.hoppings = {{0, 0, {1, 0}, cplx(-J)}, {0, 0, {0, 1}, cplx(-J)}};
  return s;
}

BlochSpec lieb_nnn_spec(double J) {
  BlochSpec s;
  s.dimension = 2;
  s.bravais = {{1.0, 0.0}, {0.0, 1.0}};
  s.sublattice_count = 3;
  s.onsite = {0.0, 0.0, 0.0};
  const cplx t(J);
  s.hoppings = {
      {lieb_a, lieb_b, {0, 0}, t},  {lieb_a, lieb_b, {-1, 0}, t},
      {lieb_a, lieb_c, {0, 0}, t},  {lieb_a, lieb_c, {0, -1}, t},
      {lieb_b, lieb_c, {0, 0}, t},  {lieb_b, lieb_c, {1, 0}, t},
      {lieb_b, lieb_c, {0, -1}, t}, {lieb_b, lieb_c, {1, -1}, t},
  };
  return s;
}

namespace {

void require_positive(double J) {
  if (!(J > 0.0)) throw Error(ErrorKind::invalid_argument, "hopping scale J must be positive");
}

BathGraph finish(BathGraph g, LatticeKind kind, double J, double omega_c) {
  g.kind = kind;
  g.hopping_scale = J;
  g.omega_c = omega_c;
  return g;
}

}  // namespace

BathGraph build_chain(int length, double J, double omega_c, Boundary boundary) {
  if (length < 2) throw Error(ErrorKind::invalid_geometry, "chain length must be at least 2");
  require_positive(J);
  return finish(tile(chain_spec(J, omega_c), length, 1, boundary), LatticeKind::chain, J, omega_c);
}

BathGraph build_graphene(int cells_a, int cells_b, double J, double omega_c, Boundary boundary) {
  if (cells_a < 2 || cells_b < 2)
    throw Error(ErrorKind::invalid_geometry, "graphene needs at least 2x2 cells");
  require_positive(J);
  return finish(tile(graphene_spec(J, omega_c), cells_a, cells_b, boundary), LatticeKind::graphene,
                J, omega_c);
}

BathGraph build_square(int side_a, int side_b, double J, double omega_c, Boundary boundary) {
  if (side_a < 2 || side_b < 2)
    throw Error(ErrorKind::invalid_geometry, "square lattice needs at least 2x2 sites");
  require_positive(J);
  return finish(tile(square_spec(J, omega_c), side_a, side_b, boundary), LatticeKind::square, J,
                omega_c);
}

BathGraph build_lieb_nnn(int cells_a, int cells_b, double J, Boundary boundary) {
  if (cells_a < 2 || cells_b < 2)
    throw Error(ErrorKind::invalid_geometry, "Lieb lattice needs at least 2x2 cells");
  require_positive(J);
  return finish(tile(lieb_nnn_spec(J), cells_a, cells_b, boundary), LatticeKind::lieb_nnn, J, 0.0);
}

MatrixXc hamiltonian_matrix(const BathGraph& bath) {
  const int n = bath.n_sites();
  MatrixXc h = MatrixXc::Zero(n, n);
  for (int i = 0; i < n; ++i) h(i, i) = bath.frequencies[i];
  for (const auto& b : bath.hoppings) {
    h(b.from, b.to) = b.amp;
    h(b.to, b.from) = std::conj(b.amp);
  }
  return h;
}

bool has_real_hoppings(const BathGraph& bath) {
  return std::all_of(bath.hoppings.begin(), bath.hoppings.end(),
                     [](const Hopping& h) { return h.amp.imag() == 0.0; });
}

Eigen::MatrixXd hamiltonian_real(const BathGraph& bath) {
  if (!has_real_hoppings(bath))
    throw Error(ErrorKind::invalid_argument, "bath has complex hoppings");
  const int n = bath.n_sites();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) h(i, i) = bath.frequencies[i];
  for (const auto& b : bath.hoppings) {
    h(b.from, b.to) = b.amp.real();
    h(b.to, b.from) = b.amp.real();
  }
  return h;
}

VectorXc apply_hamiltonian(const BathGraph& bath, const VectorXc& v) {
  const int n = bath.n_sites();
  VectorXc out(n);
  for (int i = 0; i < n; ++i) out(i) = bath.frequencies[i] * v(i);
  for (const auto& b : bath.hoppings) {
    out(b.from) += b.amp * v(b.to);
    out(b.to) += std::conj(b.amp) * v(b.from);
  }
  return out;
}

double BandStructure::sampling_spacing() const {
  const int ra = resolution[0];
  const int rb = std::max(resolution[1], 1);
  double worst = 0.0;
  for (int band = 0; band < band_count(); ++band)
    for (int j = 0; j < rb; ++j)
      for (int i = 0; i < ra; ++i) {
        const double e = energies(j * ra + i, band);
        worst = std::max(worst, std::abs(e - energies(j * ra + (i + 1) % ra, band)));
        if (rb > 1) worst = std::max(worst, std::abs(e - energies(((j + 1) % rb) * ra + i, band)));
      }
  return worst;
}

BandStructure band_structure(const BlochSpec& spec, int k_resolution) {
  return band_structure(spec, k_resolution, spec.dimension == 2 ? k_resolution : 1);
}

BandStructure band_structure(const BlochSpec& spec, int res_a, int res_b) {
  spec.validate();
  if (spec.dimension == 1) res_b = 1;
  if (res_a < 2 || (spec.dimension == 2 && res_b < 2))
    throw Error(ErrorKind::invalid_argument, "k resolution must be at least 2 per dimension");
  BandStructure bs;
  bs.resolution = {res_a, res_b};
  const int nk = res_a * res_b;
  const int nb = spec.sublattice_count;
  bs.energies.resize(nk, nb);
  bs.k_grid.reserve(nk);
  bs.bloch_vectors.reserve(nk);
  Eigen::SelfAdjointEigenSolver<MatrixXc> es;
  for (int j = 0; j < res_b; ++j)
    for (int i = 0; i < res_a; ++i) {
      const double k1 = 2.0 * kPi * i / res_a;
      const double k2 = spec.dimension == 2 ? 2.0 * kPi * j / res_b : 0.0;
      es.compute(spec.bloch_matrix(k1, k2));
      bs.k_grid.push_back({k1, k2});
      bs.energies.row(j * res_a + i) = es.eigenvalues().transpose();
      bs.bloch_vectors.push_back(es.eigenvectors());
    }
  return bs;
}

BathGraph apply_vacancy(const BathGraph& bath, int site) {
  const int n = bath.n_sites();
  if (site < 0 || site >= n) throw Error(ErrorKind::index_error, "vacancy site does not exist");
  BathGraph g = bath;
  g.labels.erase(g.labels.begin() + site);
  g.frequencies.erase(g.frequencies.begin() + site);
  g.hoppings.clear();
  auto shift = [site](int i) { return i > site ? i - 1 : i; };
  for (const auto& h : bath.hoppings)
    if (h.from != site && h.to != site) g.hoppings.push_back({shift(h.from), shift(h.to), h.amp});
  return g;
}

namespace {

bool is_path_graph(const BathGraph& bath) {
  return std::all_of(bath.hoppings.begin(), bath.hoppings.end(), [](const Hopping& h) {
    return h.amp.imag() == 0.0 && std::abs(h.from - h.to) == 1;
  });
}

}  // namespace

SpectralDecomposition diagonalize_hermitian(const MatrixXc& h) {
  SpectralDecomposition sd;
  if (h.rows() == 0) return sd;
  if (h.imag().cwiseAbs().maxCoeff() == 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.real());
    sd.eigenvalues = es.eigenvalues();
    sd.eigenvectors = es.eigenvectors().cast<cplx>();
  } else {
    Eigen::SelfAdjointEigenSolver<MatrixXc> es(h);
    sd.eigenvalues = es.eigenvalues();
    sd.eigenvectors = es.eigenvectors();
  }
  return sd;
}

SpectralDecomposition diagonalize(const BathGraph& bath, std::size_t dense_limit) {
  const int n = bath.n_sites();
  if (static_cast<std::size_t>(n) > dense_limit) {
    std::ostringstream os;
    os << n << " sites exceed the dense limit of " << dense_limit
       << "; use the Bloch path or the analytic chain resolvent";
    throw Error(ErrorKind::resource_error, os.str());
  }
  SpectralDecomposition sd;
  if (n == 1) {
    sd.eigenvalues = Eigen::VectorXd::Constant(1, bath.frequencies[0]);
    sd.eigenvectors = MatrixXc::Identity(1, 1);
    return sd;
  }
  if (is_path_graph(bath)) {
    Eigen::VectorXd diag(n), sub = Eigen::VectorXd::Zero(n - 1);
    for (int i = 0; i < n; ++i) diag(i) = bath.frequencies[i];
    for (const auto& h : bath.hoppings) sub(std::min(h.from, h.to)) = h.amp.real();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    sd.eigenvalues = es.eigenvalues();
    sd.eigenvectors = es.eigenvectors().cast<cplx>();
    return sd;
  }
  if (has_real_hoppings(bath)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hamiltonian_real(bath));
    sd.eigenvalues = es.eigenvalues();
    sd.eigenvectors = es.eigenvectors().cast<cplx>();
    return sd;
  }
  return diagonalize_hermitian(hamiltonian_matrix(bath));
}

std::string hamiltonian_csv(const BathGraph& bath) {
  std::ostringstream os;
  os.precision(17);
  os << "row,col,re,im\n";
  std::vector<std::tuple<int, int, cplx>> entries;
  for (int i = 0; i < bath.n_sites(); ++i)
    if (bath.frequencies[i] != 0.0) entries.emplace_back(i, i, cplx(bath.frequencies[i]));
  for (const auto& h : bath.hoppings) {
    entries.emplace_back(h.from, h.to, h.amp);
    entries.emplace_back(h.to, h.from, std::conj(h.amp));
  }
  std::sort(entries.begin(), entries.end(), [](const auto& x, const auto& y) {
    return std::tie(std::get<0>(x), std::get<1>(x)) < std::tie(std::get<0>(y), std::get<1>(y));
  });
  for (const auto& [r, c, v] : entries) os << r << ',' << c << ',' << v.real() << ',' << v.imag() << '\n';
  return os.str();
}

std::vector<std::vector<int>> adjacency(const BathGraph& bath) {
  std::vector<std::vector<int>> adj(bath.n_sites());
  for (const auto& h : bath.hoppings) {
    adj[h.from].push_back(h.to);
    adj[h.to].push_back(h.from);
  }
  return adj;
}

std::vector<int> boundary_sites(const BathGraph& bath) {
  const auto adj = adjacency(bath);
  std::map<int, std::size_t> max_coord;
  for (int i = 0; i < bath.n_sites(); ++i) {
    auto& m = max_coord[bath.labels[i].sub];
    m = std::max(m, adj[i].size());
  }
  std::vector<int> out;
  for (int i = 0; i < bath.n_sites(); ++i)
    if (adj[i].size() < max_coord[bath.labels[i].sub]) out.push_back(i);
  return out;
}

std::vector<int> boundary_distance(const BathGraph& bath) {
  const auto adj = adjacency(bath);
  std::vector<int> dist(bath.n_sites(), INT_MAX);
  std::deque<int> queue;
  for (int s : boundary_sites(bath)) {
    dist[s] = 0;
    queue.push_back(s);
  }
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int v : adj[u])
      if (dist[v] == INT_MAX) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
  }
  return dist;
}

}  // namespace gla
