#pragma once

#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "twogrid/grid.hpp"
#include "twogrid/local_solver.hpp"
#include "twogrid/mixed_fem.hpp"
#include "twogrid/sparse_linalg.hpp"

namespace twogrid {

enum class CoarseKind { RT0, MsFEM, GMsFEM };

std::string to_string(CoarseKind kind);
/// Accepts "rt0", "msfem", "gmsfem" (case-insensitive).
CoarseKind parse_coarse_kind(std::string_view name);

/// Local Neumann solutions on the neighborhood of one coarse face, one per
/// fine face of the coarse face (unit normal trace there, zero elsewhere on
/// the neighborhood boundary, constant divergence in each block).
struct SnapshotFamily {
  int face = 0;
  /// Global velocity DOFs carrying the snapshots: lower-block interior
  /// faces, the coarse face's fine faces, upper-block interior faces.
  std::vector<int> support;
  /// support.size() x J, one column per snapshot.
  DenseMatrix values;
  /// Positions of the coarse face's fine faces inside `support`.
  std::vector<int> trace_rows;
};

struct SpectralSelection {
  int face = 0;
  Vector eigenvalues;       // ascending
  int selected = 0;
  DenseMatrix eigenvectors; // J x J, snapshot coordinates, S-orthonormal
};

/// Coarse velocity/pressure space as fine-grid prolongations.
struct CoarseBasis {
  CoarseKind kind = CoarseKind::RT0;
  SparseMatrix velocity;  // n_velocity x velocity_dim
  SparseMatrix pressure;  // n_pressure x num_blocks, block indicators
  std::vector<int> modes_per_face;
  std::vector<SpectralSelection> spectra;  // GMsFEM only

  int velocity_dim() const { return static_cast<int>(velocity.cols()); }
  int pressure_dim() const { return static_cast<int>(pressure.cols()); }
  int dim() const { return velocity_dim() + pressure_dim(); }
  /// First column of each face's modes.
  std::vector<int> face_offsets() const;
};

/// Solves the two block problems of a coarse face for arbitrary traces
/// (J x k matrix of normal velocities on the face's fine faces).
SnapshotFamily solve_face_traces(const Grid& grid, const MixedOperators& ops,
                                 const std::vector<LocalNeumannSolver>& block_solvers, int face,
                                 const DenseMatrix& traces);

SnapshotFamily snapshot_face(const Grid& grid, const MixedOperators& ops,
                             const std::vector<LocalNeumannSolver>& block_solvers, int face);

/// Diagonal face form: |e_l| / kappa_face(e_l), harmonic mean of the two cells.
DenseMatrix face_bilinear_a(const Grid& grid, const PermeabilityField& field, int face);

/// (1/H) (V^T A V + (BV)^T diag(1/|cell|) (BV)) over the face neighborhood,
/// H = coarse block extent along the face axis.
DenseMatrix face_bilinear_s(const Grid& grid, const MixedOperators& ops, const SnapshotFamily& snapshots);

/// Keeps every eigenvalue <= tol, at least one.
SpectralSelection select_modes(int face, const EigenPairs& pairs, double tol);

struct CoarseBuildOptions {
  double tol = 10.0;  // GMsFEM eigenvalue tolerance
  int threads = 1;
};

CoarseBasis build_rt0_space(const Grid& grid);
CoarseBasis build_msfem_space(const Grid& grid, const MixedOperators& ops,
                              const std::vector<LocalNeumannSolver>& block_solvers, int threads = 1);
CoarseBasis build_gmsfem_space(const Grid& grid, const PermeabilityField& field, const MixedOperators& ops,
                               const std::vector<LocalNeumannSolver>& block_solvers,
                               const CoarseBuildOptions& options = {});

/// Dispatches on kind; builds the block solvers when `block_solvers` is null.
CoarseBasis build_coarse_space(CoarseKind kind, const Grid& grid, const PermeabilityField& field,
                               const MixedOperators& ops, const CoarseBuildOptions& options = {},
                               const std::vector<LocalNeumannSolver>* block_solvers = nullptr);

/// Galerkin coarse saddle L_H = R [A B^T; B 0] R^T, bordered by the coarse
/// mean-pressure constraint and factorized.
class CoarseOperator {
public:
  CoarseOperator(const CoarseBasis& basis, const MixedOperators& ops);

  const SparseMatrix& A() const { return A_; }
  const SparseMatrix& B() const { return B_; }
  int velocity_dim() const { return static_cast<int>(A_.rows()); }
  int pressure_dim() const { return static_cast<int>(B_.rows()); }
  /// Bordered system [y; q; mu] for rhs [g; h; 0].
  Vector solve(const Vector& rhs) const { return factor_.solve(rhs); }

private:
  SparseMatrix A_;
  SparseMatrix B_;
  SaddleFactorization factor_;
};

} // namespace twogrid
