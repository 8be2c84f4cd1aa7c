#pragma once

#include <span>
#include <utility>
#include <vector>

#include "twogrid/grid.hpp"
#include "twogrid/sparse_linalg.hpp"

namespace twogrid {

/// Cell-wise scalar permeability with an optional cell-wise mobility
/// multiplier. The Darcy coefficient is (kappa * mobility)^{-1}.
struct PermeabilityField {
  std::vector<double> kappa;
  std::vector<double> mobility;  // empty means 1

  PermeabilityField() = default;
  explicit PermeabilityField(std::vector<double> values) : kappa(std::move(values)) {}
  static PermeabilityField constant(int num_cells, double value = 1.0) {
    return PermeabilityField(std::vector<double>(num_cells, value));
  }

  double effective(int cell) const { return mobility.empty() ? kappa[cell] : kappa[cell] * mobility[cell]; }
  /// Throws ConfigError on a length mismatch or a non-positive value.
  void validate(int num_cells) const;
};

struct MixedOperators {
  SparseMatrix A;  // n_velocity x n_velocity
  SparseMatrix B;  // n_pressure x n_velocity
  Vector F;        // n_pressure
};

struct PointSource {
  int cell = 0;
  double rate = 0.0;
};

/// RT0 velocity mass matrix with exact integration of (kappa*mobility)^{-1}.
SparseMatrix assemble_velocity_mass(const Grid& grid, const PermeabilityField& field);

/// +|face| on a cell's high side, -|face| on its low side.
SparseMatrix assemble_divergence(const Grid& grid);

/// F_i = f_i * |cell| plus point-source rates. Throws ConfigError when the
/// sum is not zero within 1e-12 * ||F||_1 (pure Neumann compatibility).
Vector assemble_source(const Grid& grid, std::span<const double> cell_values,
                       std::span<const PointSource> point_sources = {});

MixedOperators assemble_mixed(const Grid& grid, const PermeabilityField& field, Vector source);

/// [A B^T 0; B 0 1; 0 1^T 0]: the last row/column fixes the mean pressure.
SparseMatrix bordered_saddle(const SparseMatrix& A, const SparseMatrix& B);

/// Saddle system on a sub-grid, pure submatrix extraction of the global one.
struct LocalSaddle {
  std::vector<int> velocity_idx;
  std::vector<int> pressure_idx;
  SparseMatrix A;
  SparseMatrix B;

  int num_velocity() const { return static_cast<int>(velocity_idx.size()); }
  int num_pressure() const { return static_cast<int>(pressure_idx.size()); }
  SparseMatrix bordered() const { return bordered_saddle(A, B); }
};

LocalSaddle extract_local_saddle(const MixedOperators& ops, std::vector<int> velocity_idx,
                                 std::vector<int> pressure_idx);

/// (A v + B^T p, B v)
std::pair<Vector, Vector> apply_saddle(const MixedOperators& ops, const Vector& v, const Vector& p);

} // namespace twogrid
