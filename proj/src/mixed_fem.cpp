#include "twogrid/mixed_fem.hpp"

#include <cmath>
#include <string>

#include "twogrid/error.hpp"

namespace twogrid {

void PermeabilityField::validate(int num_cells) const {
  if (static_cast<int>(kappa.size()) != num_cells)
    throw ConfigError("permeability has " + std::to_string(kappa.size()) + " values, grid has " +
                      std::to_string(num_cells) + " cells");
  if (!mobility.empty() && static_cast<int>(mobility.size()) != num_cells)
    throw ConfigError("mobility has " + std::to_string(mobility.size()) + " values, grid has " +
                      std::to_string(num_cells) + " cells");
  for (int i = 0; i < num_cells; ++i) {
    const double v = effective(i);
    if (!(v > 0.0) || !std::isfinite(v))
      throw ConfigError("non-positive permeability*mobility " + std::to_string(v) + " at cell " + std::to_string(i));
  }
}

SparseMatrix assemble_velocity_mass(const Grid& grid, const PermeabilityField& field) {
  field.validate(grid.num_cells());
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(grid.num_cells()) * grid.dim() * 4);
  const double vol = grid.cell_volume();
  for (int c = 0; c < grid.num_cells(); ++c) {
    const double w = vol / field.effective(c);
    for (int a = 0; a < grid.dim(); ++a) {
      // Normal-velocity DOFs: the two same-axis faces couple with the
      // 1D linear-hat mass matrix (w/6) [2 1; 1 2].
      const int lo = grid.cell_face(c, a, 0);
      const int hi = grid.cell_face(c, a, 1);
      if (lo >= 0) entries.emplace_back(lo, lo, w / 3.0);
      if (hi >= 0) entries.emplace_back(hi, hi, w / 3.0);
      if (lo >= 0 && hi >= 0) {
        entries.emplace_back(lo, hi, w / 6.0);
        entries.emplace_back(hi, lo, w / 6.0);
      }
    }
  }
  SparseMatrix A(grid.num_faces(), grid.num_faces());
  A.setFromTriplets(entries.begin(), entries.end());
  return A;
}

SparseMatrix assemble_divergence(const Grid& grid) {
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(grid.num_cells()) * grid.dim() * 2);
  for (int c = 0; c < grid.num_cells(); ++c) {
    for (int a = 0; a < grid.dim(); ++a) {
      const double m = grid.face_measure(a);
      const int lo = grid.cell_face(c, a, 0);
      const int hi = grid.cell_face(c, a, 1);
      if (lo >= 0) entries.emplace_back(c, lo, -m);
      if (hi >= 0) entries.emplace_back(c, hi, m);
    }
  }
  SparseMatrix B(grid.num_cells(), grid.num_faces());
  B.setFromTriplets(entries.begin(), entries.end());
  return B;
}

Vector assemble_source(const Grid& grid, std::span<const double> cell_values,
                       std::span<const PointSource> point_sources) {
  Vector F = Vector::Zero(grid.num_cells());
  if (!cell_values.empty()) {
    if (static_cast<int>(cell_values.size()) != grid.num_cells())
      throw ConfigError("source has " + std::to_string(cell_values.size()) + " values, grid has " +
                        std::to_string(grid.num_cells()) + " cells");
    for (int c = 0; c < grid.num_cells(); ++c) F[c] = cell_values[c] * grid.cell_volume();
  }
  for (const PointSource& s : point_sources) {
    if (s.cell < 0 || s.cell >= grid.num_cells())
      throw ConfigError("point source at invalid cell " + std::to_string(s.cell));
    F[s.cell] += s.rate;
  }
  const double total = F.sum();
  if (std::abs(total) > 1e-12 * F.lpNorm<1>())
    throw ConfigError("source is not balanced: sum = " + std::to_string(total) +
                      " (pure Neumann problem needs zero net source)");
  return F;
}

MixedOperators assemble_mixed(const Grid& grid, const PermeabilityField& field, Vector source) {
  if (source.size() != grid.num_cells()) throw ConfigError("source vector length does not match the grid");
  return {assemble_velocity_mass(grid, field), assemble_divergence(grid), std::move(source)};
}

SparseMatrix bordered_saddle(const SparseMatrix& A, const SparseMatrix& B) {
  const int nv = static_cast<int>(A.rows());
  const int np = static_cast<int>(B.rows());
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(A.nonZeros() + 2 * B.nonZeros() + 2 * np));
  for (int i = 0; i < nv; ++i)
    for (SparseMatrix::InnerIterator it(A, i); it; ++it) entries.emplace_back(i, it.col(), it.value());
  for (int i = 0; i < np; ++i)
    for (SparseMatrix::InnerIterator it(B, i); it; ++it) {
      entries.emplace_back(nv + i, it.col(), it.value());
      entries.emplace_back(it.col(), nv + i, it.value());
    }
  const int border = nv + np;
  for (int i = 0; i < np; ++i) {
    entries.emplace_back(nv + i, border, 1.0);
    entries.emplace_back(border, nv + i, 1.0);
  }
  SparseMatrix M(border + 1, border + 1);
  M.setFromTriplets(entries.begin(), entries.end());
  return M;
}

LocalSaddle extract_local_saddle(const MixedOperators& ops, std::vector<int> velocity_idx,
                                 std::vector<int> pressure_idx) {
  LocalSaddle local;
  local.A = submatrix(ops.A, velocity_idx, velocity_idx);
  local.B = submatrix(ops.B, pressure_idx, velocity_idx);
  local.velocity_idx = std::move(velocity_idx);
  local.pressure_idx = std::move(pressure_idx);
  return local;
}

std::pair<Vector, Vector> apply_saddle(const MixedOperators& ops, const Vector& v, const Vector& p) {
  if (v.size() != ops.A.cols() || p.size() != ops.B.rows())
    throw ConfigError("apply_saddle: size mismatch");
  Vector top = ops.A * v;
  top.noalias() += ops.B.transpose() * p;
  Vector bottom = ops.B * v;
  return {std::move(top), std::move(bottom)};
}

} // namespace twogrid
