#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "twogrid/coarse_space.hpp"
#include "twogrid/grid.hpp"
#include "twogrid/local_solver.hpp"
#include "twogrid/mixed_fem.hpp"
#include "twogrid/sparse_linalg.hpp"

namespace twogrid {

using LocalSolverSet = std::vector<LocalNeumannSolver>;

struct TwoGridSettings {
  double eta = 0.2;
  int pre_smooth = 1;
  int post_smooth = 1;
  /// Fine-cell layers added around each coarse block for the smoother.
  int overlap = 2;
  /// false: smooth on the plain blocks K_i instead of K_i^+.
  bool oversampled_smoother = true;
  int threads = 1;
};

struct SolverSettings {
  TwoGridSettings two_grid;
  double rel_tol = 1e-7;
  int max_iter = 1000;
  bool recover_pressure = false;
};

/// Factorized smoother problems on the (oversampled) coarse blocks.
std::shared_ptr<const LocalSolverSet> build_smoother_solvers(const Grid& grid, const MixedOperators& ops,
                                                             const TwoGridSettings& settings);

/// Additive damped local smoother plus Galerkin coarse correction, combined
/// as a two-grid cycle with residual updates between stages. Every output
/// lies in the kernel of B.
class TwoGridPreconditioner {
public:
  TwoGridPreconditioner(const Grid& grid, const MixedOperators& ops, const CoarseBasis& basis,
                        TwoGridSettings settings = {}, std::shared_ptr<const LocalSolverSet> smoothers = nullptr,
                        std::shared_ptr<const CoarseOperator> coarse = nullptr);

  /// sum_i eta * E_i solve(L_i^+, [r|_i; 0; 0]).velocity
  Vector smooth(const Vector& residual) const;
  /// R_H^T L_H^{-1} R_H r with zero coarse divergence data.
  Vector coarse_correct(const Vector& residual) const;
  /// Pre-smoothing, coarse correction, post-smoothing.
  Vector apply(const Vector& residual) const;

  const TwoGridSettings& settings() const { return settings_; }
  const CoarseOperator& coarse() const { return *coarse_; }
  std::shared_ptr<const CoarseOperator> coarse_ptr() const { return coarse_; }
  std::shared_ptr<const LocalSolverSet> smoothers() const { return smoothers_; }

private:
  TwoGridSettings settings_;
  SparseMatrix A_;
  SparseMatrix prolongation_;
  std::shared_ptr<const CoarseOperator> coarse_;
  std::shared_ptr<const LocalSolverSet> smoothers_;
};

struct PreprocessResult {
  Vector velocity;         // v-bar with B v-bar = F
  Vector coarse_velocity;  // v-bar_H
  double coarse_residual = 0.0;
  std::vector<double> block_correction_norms;
  double divergence_residual = 0.0;  // ||B v-bar - F||_inf
};

/// Particular solution of B v = F from one coarse saddle solve followed by
/// independent zero-flux block corrections.
PreprocessResult preprocess(const MixedOperators& ops, const CoarseBasis& basis,
                            const CoarseOperator& coarse, const LocalSolverSet& block_solvers, const Vector& F,
                            int threads = 1);

struct PressureRecovery {
  Vector pressure;           // zero mean
  double consistency = 0.0;  // ||A v + B^T p|| / ||A v||
  bool consistent = true;    // consistency <= 1e-5
};

/// Least-squares pressure from A v + B^T p = 0: (B B^T) p = -B A v, mean zero.
PressureRecovery recover_pressure(const MixedOperators& ops, const Vector& velocity);

struct SolveResult {
  Vector velocity;
  Vector particular;
  std::optional<PressureRecovery> pressure;
  PcgReport report;
  PreprocessResult preprocess;
  double divergence_residual = 0.0;  // ||B v - F||_inf
  double setup_seconds = 0.0;
};

/// Everything that depends on A, built once: block solvers, smoothers,
/// coarse operator, preconditioner.
class DarcySolver {
public:
  DarcySolver(const Grid& grid, const MixedOperators& ops, const CoarseBasis& basis, SolverSettings settings = {},
              std::shared_ptr<const LocalSolverSet> block_solvers = nullptr,
              std::shared_ptr<const LocalSolverSet> smoothers = nullptr);

  /// Preprocess, PCG on the divergence-free correction, sum.
  SolveResult solve(const Vector& F) const;

  const TwoGridPreconditioner& preconditioner() const { return *preconditioner_; }
  std::shared_ptr<const LocalSolverSet> block_solvers() const { return block_solvers_; }
  double setup_seconds() const { return setup_seconds_; }

private:
  const Grid* grid_;
  const MixedOperators* ops_;
  const CoarseBasis* basis_;
  SolverSettings settings_;
  std::shared_ptr<const LocalSolverSet> block_solvers_;
  std::unique_ptr<TwoGridPreconditioner> preconditioner_;
  double setup_seconds_ = 0.0;
};

/// Convenience: DarcySolver(grid, ops, basis, settings).solve(ops.F).
SolveResult solve(const Grid& grid, const MixedOperators& ops, const CoarseBasis& basis,
                  const SolverSettings& settings = {});

} // namespace twogrid
