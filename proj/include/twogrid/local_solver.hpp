#pragma once

#include <vector>

#include "twogrid/grid.hpp"
#include "twogrid/mixed_fem.hpp"
#include "twogrid/sparse_linalg.hpp"

namespace twogrid {

/// Factorized bordered Neumann saddle problem on a set of fine cells
/// (zero normal flux on the set boundary, mean pressure fixed by a border).
class LocalNeumannSolver {
public:
  LocalNeumannSolver(const Grid& grid, const MixedOperators& ops, std::vector<int> cells);

  const std::vector<int>& cells() const { return saddle_.pressure_idx; }
  const std::vector<int>& velocity_idx() const { return saddle_.velocity_idx; }
  const LocalSaddle& saddle() const { return saddle_; }
  int num_velocity() const { return saddle_.num_velocity(); }
  int num_pressure() const { return saddle_.num_pressure(); }
  /// Length of the bordered system: velocity + pressure + 1.
  int size() const { return num_velocity() + num_pressure() + 1; }

  /// Solves with a bordered right-hand side [g; h; 0] (columns allowed).
  Vector solve(const Vector& rhs) const { return factor_.solve(rhs); }
  DenseMatrix solve(const DenseMatrix& rhs) const { return factor_.solve(rhs); }

  /// Velocity part of the solve with rhs [r restricted to the local faces; 0; 0].
  Vector solve_velocity(const Vector& global_residual) const;

private:
  LocalSaddle saddle_;
  SaddleFactorization factor_;
};

/// One factorized solver per coarse block (no oversampling).
std::vector<LocalNeumannSolver> build_block_solvers(const Grid& grid, const MixedOperators& ops,
                                                    int threads = 1);

} // namespace twogrid
