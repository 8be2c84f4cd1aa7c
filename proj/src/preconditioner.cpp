#include "twogrid/preconditioner.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <string>

#include "twogrid/error.hpp"
#include "twogrid/parallel.hpp"

namespace twogrid {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::shared_ptr<const LocalSolverSet> share(LocalSolverSet&& solvers) {
  return std::make_shared<const LocalSolverSet>(std::move(solvers));
}

} // namespace

std::shared_ptr<const LocalSolverSet> build_smoother_solvers(const Grid& grid, const MixedOperators& ops,
                                                             const TwoGridSettings& settings) {
  const int layers = settings.oversampled_smoother ? settings.overlap : 0;
  std::vector<std::optional<LocalNeumannSolver>> slots(grid.num_blocks());
  parallel_for(grid.num_blocks(), settings.threads,
               [&](int b) { slots[b].emplace(grid, ops, grid.oversample(b, layers)); });
  LocalSolverSet solvers;
  solvers.reserve(slots.size());
  for (auto& s : slots) solvers.push_back(std::move(*s));
  return share(std::move(solvers));
}

TwoGridPreconditioner::TwoGridPreconditioner(const Grid& grid, const MixedOperators& ops, const CoarseBasis& basis,
                                             TwoGridSettings settings, std::shared_ptr<const LocalSolverSet> smoothers,
                                             std::shared_ptr<const CoarseOperator> coarse)
    : settings_(settings), A_(ops.A), prolongation_(basis.velocity), coarse_(std::move(coarse)),
      smoothers_(std::move(smoothers)) {
  if (!(settings_.eta > 0.0)) throw ConfigError("smoother damping eta must be positive");
  if (settings_.pre_smooth < 0 || settings_.post_smooth < 0)
    throw ConfigError("smoothing step counts must be non-negative");
  if (!smoothers_) smoothers_ = build_smoother_solvers(grid, ops, settings_);
  if (!coarse_) coarse_ = std::make_shared<const CoarseOperator>(basis, ops);
}

Vector TwoGridPreconditioner::smooth(const Vector& residual) const {
  const auto& solvers = *smoothers_;
  const int n = static_cast<int>(solvers.size());
  std::vector<Vector> local(n);
  parallel_for(n, settings_.threads, [&](int i) { local[i] = solvers[i].solve_velocity(residual); });
  // Fixed block order keeps the sum bitwise reproducible for any thread count.
  Vector z = Vector::Zero(residual.size());
  for (int i = 0; i < n; ++i) {
    const auto& idx = solvers[i].velocity_idx();
    for (std::size_t k = 0; k < idx.size(); ++k) z[idx[k]] += settings_.eta * local[i][static_cast<Eigen::Index>(k)];
  }
  return z;
}

Vector TwoGridPreconditioner::coarse_correct(const Vector& residual) const {
  const int nv = coarse_->velocity_dim();
  const int np = coarse_->pressure_dim();
  Vector rhs = Vector::Zero(nv + np + 1);
  rhs.head(nv) = prolongation_.transpose() * residual;
  const Vector sol = coarse_->solve(rhs);
  return prolongation_ * sol.head(nv);
}

Vector TwoGridPreconditioner::apply(const Vector& residual) const {
  Vector z = Vector::Zero(residual.size());
  for (int k = 0; k < settings_.pre_smooth; ++k) z += smooth(residual - A_ * z);
  z += coarse_correct(residual - A_ * z);
  for (int k = 0; k < settings_.post_smooth; ++k) z += smooth(residual - A_ * z);
  return z;
}

PreprocessResult preprocess(const MixedOperators& ops, const CoarseBasis& basis,
                            const CoarseOperator& coarse, const LocalSolverSet& block_solvers, const Vector& F,
                            int threads) {
  const int nv = coarse.velocity_dim();
  const int np = coarse.pressure_dim();
  PreprocessResult result;

  Vector rhs = Vector::Zero(nv + np + 1);
  const Vector coarse_source = basis.pressure.transpose() * F;
  rhs.segment(nv, np) = coarse_source;
  const Vector coarse_sol = coarse.solve(rhs);
  const Vector y = coarse_sol.head(nv);
  result.coarse_velocity = basis.velocity * y;
  result.coarse_residual = (coarse.B() * y - coarse_source).lpNorm<Eigen::Infinity>();

  const Vector Av = ops.A * result.coarse_velocity;
  const Vector defect = F - ops.B * result.coarse_velocity;

  // The coarse weak solve matches the source's mean on every block; the
  // block problems below rely on that.
  const double scale = std::max(1.0, F.lpNorm<1>());
  const Vector block_defect = basis.pressure.transpose() * defect;
  for (int b = 0; b < static_cast<int>(block_defect.size()); ++b)
    if (std::abs(block_defect[b]) > 1e-10 * scale)
      throw NumericalError("preprocess: block " + std::to_string(b) + " has non-zero mean divergence defect " +
                           std::to_string(block_defect[b]) + " (coarse pressure space not block-constant?)");

  const int nb = static_cast<int>(block_solvers.size());
  std::vector<Vector> corrections(nb);
  parallel_for(nb, threads, [&](int b) {
    const LocalNeumannSolver& solver = block_solvers[b];
    const int lv = solver.num_velocity();
    const int lp = solver.num_pressure();
    Vector local_rhs = Vector::Zero(solver.size());
    for (int i = 0; i < lv; ++i) local_rhs[i] = -Av[solver.velocity_idx()[i]];
    for (int i = 0; i < lp; ++i) local_rhs[lv + i] = defect[solver.cells()[i]];
    corrections[b] = solver.solve(local_rhs).head(lv);
  });

  result.velocity = result.coarse_velocity;
  result.block_correction_norms.resize(nb);
  for (int b = 0; b < nb; ++b) {
    const auto& idx = block_solvers[b].velocity_idx();
    for (std::size_t k = 0; k < idx.size(); ++k) result.velocity[idx[k]] += corrections[b][static_cast<Eigen::Index>(k)];
    result.block_correction_norms[b] = corrections[b].norm();
  }
  result.divergence_residual = (ops.B * result.velocity - F).lpNorm<Eigen::Infinity>();
  return result;
}

namespace {

/// Mean-zero solution of (B B^T) p = rhs by Jacobi-preconditioned CG.
Vector solve_gradient_system(const MixedOperators& ops, Vector rhs, double rel_tol) {
  const SparseMatrix BBt = ops.B * SparseMatrix(ops.B.transpose());
  const Vector diag = BBt.diagonal();
  rhs.array() -= rhs.mean();
  Vector p = Vector::Zero(rhs.size());
  if (rhs.norm() == 0.0) return p;
  PcgSettings settings;
  settings.rel_tol = rel_tol;
  settings.max_iter = std::max<int>(100, 4 * static_cast<int>(rhs.size()));
  pcg([&](const Vector& x, Vector& y) { y = BBt * x; },
      [&](const Vector& r, Vector& z) {
        z = r.cwiseQuotient(diag);
        z.array() -= z.mean();
      },
      rhs, p, settings);
  p.array() -= p.mean();
  return p;
}

} // namespace

PressureRecovery recover_pressure(const MixedOperators& ops, const Vector& velocity) {
  const Vector Av = ops.A * velocity;
  PressureRecovery out;
  out.pressure = solve_gradient_system(ops, -(ops.B * Av), 1e-12);
  const double ref = Av.norm();
  const Vector consistency = Av + ops.B.transpose() * out.pressure;
  out.consistency = ref > 0.0 ? consistency.norm() / ref : consistency.norm();
  out.consistent = out.consistency <= 1e-5;
  return out;
}

DarcySolver::DarcySolver(const Grid& grid, const MixedOperators& ops, const CoarseBasis& basis,
                         SolverSettings settings, std::shared_ptr<const LocalSolverSet> block_solvers,
                         std::shared_ptr<const LocalSolverSet> smoothers)
    : grid_(&grid), ops_(&ops), basis_(&basis), settings_(settings), block_solvers_(std::move(block_solvers)) {
  const auto start = std::chrono::steady_clock::now();
  const int threads = settings_.two_grid.threads;
  if (!block_solvers_) block_solvers_ = share(build_block_solvers(grid, ops, threads));
  const bool plain_blocks = !settings_.two_grid.oversampled_smoother || settings_.two_grid.overlap == 0;
  if (!smoothers && plain_blocks) smoothers = block_solvers_;
  preconditioner_ = std::make_unique<TwoGridPreconditioner>(grid, ops, basis, settings_.two_grid, std::move(smoothers));
  setup_seconds_ = seconds_since(start);
}

SolveResult DarcySolver::solve(const Vector& F) const {
  const MixedOperators& ops = *ops_;
  SolveResult result;
  result.setup_seconds = setup_seconds_;
  result.preprocess = preprocess(ops, *basis_, preconditioner_->coarse(), *block_solvers_, F,
                                 settings_.two_grid.threads);
  result.particular = result.preprocess.velocity;

  // Only the action of the right-hand side on ker B matters. Removing its
  // l2 gradient component (B^T p) keeps the residual recurrence free of the
  // cancellation that otherwise floors the preconditioned norm near 1e-7.
  Vector rhs = -(ops.A * result.particular);
  rhs -= ops.B.transpose() * solve_gradient_system(ops, ops.B * rhs, 1e-12);
  Vector correction = Vector::Zero(rhs.size());
  PcgSettings pcg_settings;
  pcg_settings.rel_tol = settings_.rel_tol;
  pcg_settings.max_iter = settings_.max_iter;
  pcg_settings.norm = ResidualNorm::Preconditioned;
  try {
    result.report = pcg([&](const Vector& x, Vector& y) { y = ops.A * x; },
                        [&](const Vector& r, Vector& z) { z = preconditioner_->apply(r); }, rhs, correction,
                        pcg_settings);
  } catch (const NumericalError& e) {
    const double leak = (ops.B * correction).lpNorm<Eigen::Infinity>();
    throw NumericalError(std::string(e.what()) + "; iterate divergence ||B x||_inf = " + std::to_string(leak));
  }
  result.velocity = result.particular + correction;
  result.divergence_residual = (ops.B * result.velocity - F).lpNorm<Eigen::Infinity>();
  if (settings_.recover_pressure) result.pressure = recover_pressure(ops, result.velocity);
  return result;
}

SolveResult solve(const Grid& grid, const MixedOperators& ops, const CoarseBasis& basis,
                  const SolverSettings& settings) {
  DarcySolver solver(grid, ops, basis, settings);
  return solver.solve(ops.F);
}

} // namespace twogrid
