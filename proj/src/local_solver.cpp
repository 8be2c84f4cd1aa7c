#include "twogrid/local_solver.hpp"

#include <optional>

#include "twogrid/parallel.hpp"

namespace twogrid {

namespace {

LocalSaddle make_saddle(const Grid& grid, const MixedOperators& ops, std::vector<int> cells) {
  std::vector<int> faces = grid.velocity_dofs_interior_to(cells);
  return extract_local_saddle(ops, std::move(faces), std::move(cells));
}

} // namespace

LocalNeumannSolver::LocalNeumannSolver(const Grid& grid, const MixedOperators& ops, std::vector<int> cells)
    : saddle_(make_saddle(grid, ops, std::move(cells))), factor_(SaddleFactorization::bordered(saddle_.A, saddle_.B)) {}

Vector LocalNeumannSolver::solve_velocity(const Vector& global_residual) const {
  const int nv = num_velocity();
  Vector rhs = Vector::Zero(size());
  for (int i = 0; i < nv; ++i) rhs[i] = global_residual[saddle_.velocity_idx[i]];
  return factor_.solve(rhs).head(nv);
}

std::vector<LocalNeumannSolver> build_block_solvers(const Grid& grid, const MixedOperators& ops, int threads) {
  std::vector<std::optional<LocalNeumannSolver>> slots(grid.num_blocks());
  parallel_for(grid.num_blocks(), threads,
               [&](int b) { slots[b].emplace(grid, ops, grid.block_cells(b)); });
  std::vector<LocalNeumannSolver> solvers;
  solvers.reserve(slots.size());
  for (auto& s : slots) solvers.push_back(std::move(*s));
  return solvers;
}

} // namespace twogrid
