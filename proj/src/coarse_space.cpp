#include "twogrid/coarse_space.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

#include "twogrid/error.hpp"
#include "twogrid/parallel.hpp"

namespace twogrid {

std::string to_string(CoarseKind kind) {
  switch (kind) {
    case CoarseKind::RT0: return "RT0";
    case CoarseKind::MsFEM: return "MsFEM";
    case CoarseKind::GMsFEM: return "GMsFEM";
  }
  return "?";
}

CoarseKind parse_coarse_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (lower == "rt0") return CoarseKind::RT0;
  if (lower == "msfem") return CoarseKind::MsFEM;
  if (lower == "gmsfem") return CoarseKind::GMsFEM;
  throw ConfigError("unknown coarse space '" + std::string(name) + "' (expected rt0, msfem or gmsfem)");
}

std::vector<int> CoarseBasis::face_offsets() const {
  std::vector<int> offsets(modes_per_face.size() + 1, 0);
  for (std::size_t i = 0; i < modes_per_face.size(); ++i) offsets[i + 1] = offsets[i] + modes_per_face[i];
  return offsets;
}

namespace {

SparseMatrix block_indicators(const Grid& grid) {
  std::vector<Triplet> entries;
  entries.reserve(grid.num_cells());
  for (int c = 0; c < grid.num_cells(); ++c) entries.emplace_back(c, grid.block_of_cell(c), 1.0);
  SparseMatrix P(grid.num_cells(), grid.num_blocks());
  P.setFromTriplets(entries.begin(), entries.end());
  return P;
}

std::vector<int> neighborhood_cells(const Grid& grid, const CoarseFace& face) {
  std::vector<int> cells = grid.block_cells(face.lower_block);
  const std::vector<int> upper = grid.block_cells(face.upper_block);
  cells.insert(cells.end(), upper.begin(), upper.end());
  return cells;
}

/// Appends the columns of `values` (rows indexed by `support`) starting at `first_col`.
void append_columns(std::vector<Triplet>& entries, const std::vector<int>& support, const DenseMatrix& values,
                    int first_col) {
  for (Eigen::Index j = 0; j < values.cols(); ++j)
    for (Eigen::Index i = 0; i < values.rows(); ++i)
      if (values(i, j) != 0.0) entries.emplace_back(support[i], first_col + static_cast<int>(j), values(i, j));
}

CoarseBasis assemble_basis(const Grid& grid, CoarseKind kind, const std::vector<SnapshotFamily>& families,
                           const std::vector<DenseMatrix>& coefficients) {
  CoarseBasis basis;
  basis.kind = kind;
  std::vector<Triplet> entries;
  int col = 0;
  for (std::size_t f = 0; f < families.size(); ++f) {
    const DenseMatrix columns = families[f].values * coefficients[f];
    append_columns(entries, families[f].support, columns, col);
    basis.modes_per_face.push_back(static_cast<int>(columns.cols()));
    col += static_cast<int>(columns.cols());
  }
  basis.velocity.resize(grid.num_faces(), col);
  basis.velocity.setFromTriplets(entries.begin(), entries.end());
  basis.pressure = block_indicators(grid);
  return basis;
}

} // namespace

SnapshotFamily solve_face_traces(const Grid& grid, const MixedOperators& ops,
                                 const std::vector<LocalNeumannSolver>& block_solvers, int face_id,
                                 const DenseMatrix& traces) {
  const CoarseFace& face = grid.coarse_faces().at(face_id);
  const std::vector<int>& gamma = face.fine_faces;
  if (traces.rows() != static_cast<Eigen::Index>(gamma.size()))
    throw ConfigError("trace matrix has wrong number of rows for coarse face " + std::to_string(face_id));

  auto solve_block = [&](int block) -> DenseMatrix {
    const LocalNeumannSolver& solver = block_solvers.at(block);
    const int nv = solver.num_velocity();
    const int np = solver.num_pressure();
    const SparseMatrix A_ig = submatrix(ops.A, solver.velocity_idx(), gamma);
    const SparseMatrix B_cg = submatrix(ops.B, solver.cells(), gamma);
    DenseMatrix rhs = DenseMatrix::Zero(solver.size(), traces.cols());
    rhs.topRows(nv) = -(A_ig * traces);
    rhs.middleRows(nv, np) = -(B_cg * traces);
    // The border multiplier turns the prescribed boundary flux into a
    // constant divergence over the block.
    return solver.solve(rhs).topRows(nv);
  };

  const DenseMatrix lower = solve_block(face.lower_block);
  const DenseMatrix upper = solve_block(face.upper_block);

  SnapshotFamily family;
  family.face = face_id;
  const auto& lower_idx = block_solvers[face.lower_block].velocity_idx();
  const auto& upper_idx = block_solvers[face.upper_block].velocity_idx();
  family.support.reserve(lower_idx.size() + gamma.size() + upper_idx.size());
  family.support.insert(family.support.end(), lower_idx.begin(), lower_idx.end());
  family.support.insert(family.support.end(), gamma.begin(), gamma.end());
  family.support.insert(family.support.end(), upper_idx.begin(), upper_idx.end());
  family.values.resize(static_cast<Eigen::Index>(family.support.size()), traces.cols());
  family.values.topRows(lower.rows()) = lower;
  family.values.middleRows(lower.rows(), traces.rows()) = traces;
  family.values.bottomRows(upper.rows()) = upper;
  family.trace_rows.resize(gamma.size());
  for (std::size_t l = 0; l < gamma.size(); ++l) family.trace_rows[l] = static_cast<int>(lower.rows() + l);
  return family;
}

SnapshotFamily snapshot_face(const Grid& grid, const MixedOperators& ops,
                             const std::vector<LocalNeumannSolver>& block_solvers, int face) {
  const auto J = static_cast<Eigen::Index>(grid.coarse_faces().at(face).fine_faces.size());
  return solve_face_traces(grid, ops, block_solvers, face, DenseMatrix::Identity(J, J));
}

DenseMatrix face_bilinear_a(const Grid& grid, const PermeabilityField& field, int face_id) {
  const CoarseFace& face = grid.coarse_faces().at(face_id);
  const auto J = static_cast<Eigen::Index>(face.fine_faces.size());
  const double measure = grid.face_measure(face.axis);
  DenseMatrix a = DenseMatrix::Zero(J, J);
  for (Eigen::Index l = 0; l < J; ++l) {
    const int f = face.fine_faces[l];
    const double k1 = field.effective(grid.face_lower_cell(f));
    const double k2 = field.effective(grid.face_upper_cell(f));
    const double harmonic = 2.0 / (1.0 / k1 + 1.0 / k2);
    a(l, l) = measure / harmonic;
  }
  return a;
}

DenseMatrix face_bilinear_s(const Grid& grid, const MixedOperators& ops, const SnapshotFamily& snapshots) {
  const CoarseFace& face = grid.coarse_faces().at(snapshots.face);
  const DenseMatrix& V = snapshots.values;
  const SparseMatrix A_local = submatrix(ops.A, snapshots.support, snapshots.support);
  const std::vector<int> cells = neighborhood_cells(grid, face);
  const SparseMatrix B_local = submatrix(ops.B, cells, snapshots.support);
  const DenseMatrix AV = A_local * V;
  const DenseMatrix BV = B_local * V;
  DenseMatrix s = V.transpose() * AV + (BV.transpose() * BV) / grid.cell_volume();
  s /= grid.H(face.axis);
  return 0.5 * (s + s.transpose());
}

SpectralSelection select_modes(int face, const EigenPairs& pairs, double tol) {
  SpectralSelection sel;
  sel.face = face;
  sel.eigenvalues = pairs.values;
  sel.eigenvectors = pairs.vectors;
  int count = 0;
  while (count < pairs.values.size() && pairs.values[count] <= tol) ++count;
  sel.selected = std::max(1, count);
  return sel;
}

CoarseBasis build_rt0_space(const Grid& grid) {
  CoarseBasis basis;
  basis.kind = CoarseKind::RT0;
  std::vector<Triplet> entries;
  for (const CoarseFace& face : grid.coarse_faces()) {
    const int a = face.axis;
    const int r = grid.ratio(a);
    for (int f0 : face.fine_faces) {
      const Coords p0 = grid.face_position(f0);
      // Linear normal-velocity profile: 1 on the coarse face, 0 on the far
      // faces of both blocks.
      for (int t = -(r - 1); t <= r - 1; ++t) {
        Coords p = p0;
        p[a] += t;
        entries.emplace_back(grid.face_index(a, p), face.id, 1.0 - std::abs(t) / static_cast<double>(r));
      }
    }
    basis.modes_per_face.push_back(1);
  }
  basis.velocity.resize(grid.num_faces(), grid.num_coarse_faces());
  basis.velocity.setFromTriplets(entries.begin(), entries.end());
  basis.pressure = block_indicators(grid);
  return basis;
}

CoarseBasis build_msfem_space(const Grid& grid, const MixedOperators& ops,
                              const std::vector<LocalNeumannSolver>& block_solvers, int threads) {
  const int nf = grid.num_coarse_faces();
  std::vector<SnapshotFamily> families(nf);
  parallel_for(nf, threads, [&](int f) {
    const auto J = static_cast<Eigen::Index>(grid.coarse_faces()[f].fine_faces.size());
    families[f] = solve_face_traces(grid, ops, block_solvers, f, DenseMatrix::Ones(J, 1));
  });
  std::vector<DenseMatrix> identity(nf, DenseMatrix::Identity(1, 1));
  return assemble_basis(grid, CoarseKind::MsFEM, families, identity);
}

CoarseBasis build_gmsfem_space(const Grid& grid, const PermeabilityField& field, const MixedOperators& ops,
                               const std::vector<LocalNeumannSolver>& block_solvers,
                               const CoarseBuildOptions& options) {
  if (!(options.tol > 0.0)) throw ConfigError("eigenvalue tolerance must be positive");
  const int nf = grid.num_coarse_faces();
  std::vector<SnapshotFamily> families(nf);
  std::vector<SpectralSelection> spectra(nf);
  std::vector<DenseMatrix> coefficients(nf);
  parallel_for(nf, options.threads, [&](int f) {
    families[f] = snapshot_face(grid, ops, block_solvers, f);
    const DenseMatrix a = face_bilinear_a(grid, field, f);
    const DenseMatrix s = face_bilinear_s(grid, ops, families[f]);
    spectra[f] = select_modes(f, generalized_symmetric_eig(a, s), options.tol);
    coefficients[f] = spectra[f].eigenvectors.leftCols(spectra[f].selected);
  });
  CoarseBasis basis = assemble_basis(grid, CoarseKind::GMsFEM, families, coefficients);
  basis.spectra = std::move(spectra);
  return basis;
}

CoarseBasis build_coarse_space(CoarseKind kind, const Grid& grid, const PermeabilityField& field,
                               const MixedOperators& ops, const CoarseBuildOptions& options,
                               const std::vector<LocalNeumannSolver>* block_solvers) {
  if (kind == CoarseKind::RT0) return build_rt0_space(grid);
  std::vector<LocalNeumannSolver> owned;
  if (block_solvers == nullptr) {
    owned = build_block_solvers(grid, ops, options.threads);
    block_solvers = &owned;
  }
  if (kind == CoarseKind::MsFEM) return build_msfem_space(grid, ops, *block_solvers, options.threads);
  return build_gmsfem_space(grid, field, ops, *block_solvers, options);
}

namespace {

SaddleFactorization factor_coarse(const SparseMatrix& A_H, const SparseMatrix& B_H) {
  try {
    return SaddleFactorization::bordered(A_H, B_H);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("coarse operator is rank deficient (dependent basis columns?): ") + e.what());
  }
}

} // namespace

CoarseOperator::CoarseOperator(const CoarseBasis& basis, const MixedOperators& ops)
    : A_(SparseMatrix(basis.velocity.transpose()) * (ops.A * basis.velocity)),
      B_(SparseMatrix(basis.pressure.transpose()) * (ops.B * basis.velocity)),
      factor_(factor_coarse(A_, B_)) {}

} // namespace twogrid
