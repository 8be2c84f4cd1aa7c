#include "twogrid/two_phase.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>

#include <Eigen/SparseLU>

#include "twogrid/error.hpp"
#include "twogrid/parallel.hpp"

namespace twogrid {

double FluidModel::krw(double s) const { return std::pow(s, exponent_w); }
double FluidModel::kro(double s) const { return std::pow(1.0 - s, exponent_o); }
double FluidModel::dkrw(double s) const { return exponent_w * std::pow(s, exponent_w - 1.0); }
double FluidModel::dkro(double s) const { return -exponent_o * std::pow(1.0 - s, exponent_o - 1.0); }

void FluidModel::validate() const {
  if (!(mu_w > 0.0) || !(mu_o > 0.0)) throw ConfigError("viscosities must be positive");
  if (!(exponent_w >= 1.0) || !(exponent_o >= 1.0))
    throw ConfigError("relative permeability exponents must be >= 1");
}

namespace {

double clamp_saturation(double s, int* clamped) {
  if (clamped && (s < -1e-12 || s > 1.0 + 1e-12)) ++*clamped;
  return std::clamp(s, 0.0, 1.0);
}

} // namespace

double total_mobility(const FluidModel& fluid, double s, int* clamped) {
  s = clamp_saturation(s, clamped);
  return fluid.krw(s) / fluid.mu_w + fluid.kro(s) / fluid.mu_o;
}

std::vector<double> total_mobility(const FluidModel& fluid, std::span<const double> s, int* clamped) {
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = total_mobility(fluid, s[i], clamped);
  return out;
}

FractionalFlow fractional_flow(const FluidModel& fluid, double s) {
  s = std::clamp(s, 0.0, 1.0);
  const double w = fluid.krw(s) / fluid.mu_w;
  const double o = fluid.kro(s) / fluid.mu_o;
  const double dw = fluid.dkrw(s) / fluid.mu_w;
  const double dox = fluid.dkro(s) / fluid.mu_o;
  const double lambda = w + o;
  return {w / lambda, (dw * o - w * dox) / (lambda * lambda)};
}

WellConfig WellConfig::five_spot(const Grid& grid, double total_rate) {
  const std::array<int, 3> n{grid.fine_cells(0), grid.fine_cells(1), grid.fine_cells(2)};
  const int nz = n[2];
  auto column = [&](int x, int y, double rate, WellConfig& out) {
    for (int z = 0; z < nz; ++z) out.wells.push_back({grid.cell_index({x, y, z}), rate / nz});
  };
  WellConfig out;
  const double corner = total_rate / 4.0;
  for (int y : {0, n[1] - 1})
    for (int x : {0, n[0] - 1}) column(x, y, corner, out);
  std::vector<int> xs = n[0] % 2 == 0 ? std::vector<int>{n[0] / 2 - 1, n[0] / 2} : std::vector<int>{n[0] / 2};
  std::vector<int> ys = n[1] % 2 == 0 ? std::vector<int>{n[1] / 2 - 1, n[1] / 2} : std::vector<int>{n[1] / 2};
  const double share = -total_rate / static_cast<double>(xs.size() * ys.size());
  for (int y : ys)
    for (int x : xs) column(x, y, share, out);
  return out;
}

void WellConfig::validate(const Grid& grid) const {
  double total = 0.0, scale = 0.0;
  for (const Well& w : wells) {
    if (w.cell < 0 || w.cell >= grid.num_cells()) throw ConfigError("well at invalid cell " + std::to_string(w.cell));
    total += w.rate;
    scale += std::abs(w.rate);
  }
  if (std::abs(total) > 1e-12 * std::max(1.0, scale))
    throw ConfigError("well rates do not balance: net rate " + std::to_string(total));
}

Vector WellConfig::rates(const Grid& grid) const {
  Vector q = Vector::Zero(grid.num_cells());
  for (const Well& w : wells) q[w.cell] += w.rate;
  return q;
}

std::vector<PointSource> WellConfig::point_sources() const {
  std::vector<PointSource> out;
  out.reserve(wells.size());
  for (const Well& w : wells) out.push_back({w.cell, w.rate});
  return out;
}

double WellConfig::water_cut(const FluidModel& fluid, std::span<const double> saturation) const {
  double water = 0.0, total = 0.0;
  for (const Well& w : wells) {
    if (w.rate >= 0.0) continue;
    water += fractional_flow(fluid, saturation[w.cell]).value * w.rate;
    total += w.rate;
  }
  return total == 0.0 ? 0.0 : water / total + 0.0;
}

TransportState TransportState::uniform(int num_cells, double saturation, double porosity) {
  TransportState s;
  s.saturation.assign(num_cells, saturation);
  s.porosity.assign(num_cells, porosity);
  return s;
}

void TransportState::validate(int num_cells) const {
  if (static_cast<int>(saturation.size()) != num_cells || static_cast<int>(porosity.size()) != num_cells)
    throw ConfigError("transport state size does not match the grid");
  for (int i = 0; i < num_cells; ++i) {
    if (!(porosity[i] > 0.0)) throw ConfigError("non-positive porosity at cell " + std::to_string(i));
    if (!(saturation[i] >= 0.0 && saturation[i] <= 1.0))
      throw ConfigError("saturation outside [0,1] at cell " + std::to_string(i));
  }
}

namespace {

PermeabilityField with_mobility(const PermeabilityField& field, const FluidModel& fluid,
                                const std::vector<double>& saturation, int* clamped) {
  PermeabilityField out(field.kappa);
  out.mobility = total_mobility(fluid, saturation, clamped);
  return out;
}

MixedOperators pressure_operators(const Grid& grid, const PermeabilityField& field, const WellConfig& wells) {
  const auto sources = wells.point_sources();
  return assemble_mixed(grid, field, assemble_source(grid, {}, sources));
}

} // namespace

PressureStepResult pressure_step(const Grid& grid, const PermeabilityField& field, const FluidModel& fluid,
                                 const TransportState& state, const CoarseBasis& basis, const WellConfig& wells,
                                 const SolverSettings& settings) {
  PressureStepResult out;
  const PermeabilityField mobile = with_mobility(field, fluid, state.saturation, &out.clamped_saturations);
  const MixedOperators ops = pressure_operators(grid, mobile, wells);
  try {
    DarcySolver solver(grid, ops, basis, settings);
    out.solve = solver.solve(ops.F);
  } catch (const NumericalError& e) {
    throw NumericalError("pressure step at t=" + std::to_string(state.time) + ": " + e.what());
  }
  out.velocity = out.solve.velocity;
  return out;
}

namespace {

struct FaceFlux {
  int face;
  int neighbor;     // -1 on the boundary
  double outflow;   // total volumetric flux leaving the cell through the face
};

/// Per-cell list of faces with their outward total flux.
std::vector<std::vector<FaceFlux>> cell_fluxes(const Grid& grid, const Vector& velocity) {
  std::vector<std::vector<FaceFlux>> out(grid.num_cells());
  for (int c = 0; c < grid.num_cells(); ++c) {
    for (int a = 0; a < grid.dim(); ++a) {
      const double m = grid.face_measure(a);
      for (int side : {0, 1}) {
        const int f = grid.cell_face(c, a, side);
        if (f < 0) continue;
        const int nb = side == 0 ? grid.face_lower_cell(f) : grid.face_upper_cell(f);
        const double sign = side == 0 ? -1.0 : 1.0;
        out[c].push_back({f, nb, sign * velocity[f] * m});
      }
    }
  }
  return out;
}

struct TransportProblem {
  const Grid& grid;
  const FluidModel& fluid;
  const std::vector<double>& s0;
  std::vector<double> coefficient;  // dt / (phi |cell|)
  Vector q;
  std::vector<std::vector<FaceFlux>> fluxes;
  int threads;

  /// Residual in saturation units and the Jacobian (column-major for LU).
  void evaluate(const std::vector<double>& s, Vector& residual,
                Eigen::SparseMatrix<double, Eigen::ColMajor, int>* jacobian) const {
    const int n = grid.num_cells();
    residual.resize(n);
    const int width = 2 * grid.dim() + 1;
    std::vector<Triplet> rows(static_cast<std::size_t>(n) * width, Triplet(0, 0, 0.0));
    parallel_for(n, threads, [&](int i) {
      const FractionalFlow fi = fractional_flow(fluid, s[i]);
      const double c = coefficient[i];
      const double qp = std::max(q[i], 0.0);
      const double qm = std::min(q[i], 0.0);
      double net = qp + fi.value * qm;
      double diag = -fi.derivative * qm;
      int k = 1;
      for (const FaceFlux& ff : fluxes[i]) {
        if (ff.outflow > 0.0) {
          net -= fi.value * ff.outflow;
          diag += fi.derivative * ff.outflow;
        } else if (ff.outflow < 0.0 && ff.neighbor >= 0) {
          const FractionalFlow fj = fractional_flow(fluid, s[ff.neighbor]);
          net -= fj.value * ff.outflow;
          rows[static_cast<std::size_t>(i) * width + k++] = Triplet(i, ff.neighbor, c * fj.derivative * ff.outflow);
        }
      }
      residual[i] = s[i] - s0[i] - c * net;
      rows[static_cast<std::size_t>(i) * width] = Triplet(i, i, 1.0 + c * diag);
    });
    if (jacobian) {
      jacobian->resize(n, n);
      jacobian->setFromTriplets(rows.begin(), rows.end());
      jacobian->makeCompressed();
    }
  }

  double mass_balance_error(const std::vector<double>& s, double dt) const {
    double stored = 0.0, wells = 0.0;
    for (int i = 0; i < grid.num_cells(); ++i) {
      stored += dt / coefficient[i] * (s[i] - s0[i]);
      wells += std::max(q[i], 0.0) + fractional_flow(fluid, s[i]).value * std::min(q[i], 0.0);
    }
    return std::abs(stored - dt * wells);
  }
};

struct NewtonOutcome {
  std::vector<double> saturation;
  int iterations = 0;
  double residual = 0.0;
};

/// Residual with components on an active bound that push outward ignored.
double projected_residual(const std::vector<double>& s, const Vector& r) {
  double worst = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((s[i] <= 0.0 && r[i] > 0.0) || (s[i] >= 1.0 && r[i] < 0.0)) continue;
    worst = std::max(worst, std::abs(r[i]));
  }
  return worst;
}

std::optional<NewtonOutcome> newton(const TransportProblem& problem, const NewtonSettings& settings) {
  NewtonOutcome out;
  out.saturation = problem.s0;
  Vector residual;
  Eigen::SparseMatrix<double, Eigen::ColMajor, int> jacobian;
  Eigen::SparseLU<Eigen::SparseMatrix<double, Eigen::ColMajor, int>, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;
  for (int it = 0;; ++it) {
    problem.evaluate(out.saturation, residual, &jacobian);
    const double smax = *std::max_element(out.saturation.begin(), out.saturation.end());
    out.residual = projected_residual(out.saturation, residual);
    if (out.residual <= settings.tol * std::max(1.0, smax)) return out;
    if (it == settings.max_iter || !std::isfinite(out.residual)) return std::nullopt;
    if (!analyzed) {
      lu.analyzePattern(jacobian);
      analyzed = true;
    }
    lu.factorize(jacobian);
    if (lu.info() != Eigen::Success) return std::nullopt;
    const Vector delta = lu.solve(residual);
    for (std::size_t i = 0; i < out.saturation.size(); ++i)
      out.saturation[i] = std::clamp(
          out.saturation[i] - std::clamp(delta[static_cast<Eigen::Index>(i)], -settings.max_update, settings.max_update),
          0.0, 1.0);
    out.iterations = it + 1;
  }
}

TransportProblem make_problem(const Grid& grid, const FluidModel& fluid, const std::vector<double>& s0,
                              const std::vector<double>& porosity, const Vector& q,
                              const std::vector<std::vector<FaceFlux>>& fluxes, double dt, int threads) {
  TransportProblem p{grid, fluid, s0, {}, q, fluxes, threads};
  p.coefficient.resize(s0.size());
  for (std::size_t i = 0; i < s0.size(); ++i) p.coefficient[i] = dt / (porosity[i] * grid.cell_volume());
  return p;
}

void advance(const Grid& grid, const FluidModel& fluid, const std::vector<double>& porosity, const Vector& q,
             const std::vector<std::vector<FaceFlux>>& fluxes, const NewtonSettings& settings,
             std::vector<double>& s, double dt, int level, TransportStepResult& result) {
  const std::vector<double> s0 = s;
  const TransportProblem problem = make_problem(grid, fluid, s0, porosity, q, fluxes, dt, settings.threads);
  if (auto outcome = newton(problem, settings)) {
    s = std::move(outcome->saturation);
    result.newton_iterations += outcome->iterations;
    result.residual = outcome->residual;
    result.halvings = std::max(result.halvings, level);
    result.mass_balance_error += problem.mass_balance_error(s, dt);
    return;
  }
  if (level == settings.max_halvings)
    throw NumericalError("transport Newton did not converge in " + std::to_string(settings.max_iter) +
                         " iterations after " + std::to_string(level) + " time-step halvings");
  advance(grid, fluid, porosity, q, fluxes, settings, s, dt / 2, level + 1, result);
  advance(grid, fluid, porosity, q, fluxes, settings, s, dt / 2, level + 1, result);
}

} // namespace

TransportStepResult transport_step(const Grid& grid, const FluidModel& fluid, const TransportState& state,
                                   const Vector& velocity, const WellConfig& wells, double dt,
                                   const NewtonSettings& settings) {
  state.validate(grid.num_cells());
  if (velocity.size() != grid.num_faces()) throw ConfigError("velocity size does not match the grid");
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  TransportStepResult result;
  result.saturation = state.saturation;
  const Vector q = wells.rates(grid);
  const auto fluxes = cell_fluxes(grid, velocity);
  advance(grid, fluid, state.porosity, q, fluxes, settings, result.saturation, dt, 0, result);
  return result;
}

ImpesResult impes_run(const Grid& grid, const PermeabilityField& field, const ImpesConfig& config,
                      const StepObserver& observer) {
  config.fluid.validate();
  config.wells.validate(grid);
  field.validate(grid.num_cells());
  if (config.transport_steps < 0) throw ConfigError("transport step count must be non-negative");
  if (config.pressure_interval < 1) throw ConfigError("pressure interval must be at least 1");
  if (!(config.dt > 0.0)) throw ConfigError("time step must be positive");

  ImpesResult result;
  TransportState& state = result.final_state;
  state = TransportState::uniform(grid.num_cells(), config.initial_saturation, config.porosity);
  state.validate(grid.num_cells());

  auto build_basis = [&]() {
    const PermeabilityField mobile = with_mobility(field, config.fluid, state.saturation, nullptr);
    const MixedOperators ops = pressure_operators(grid, mobile, config.wells);
    return build_coarse_space(config.coarse_kind, grid, mobile, ops, config.coarse_options);
  };
  result.initial_basis = build_basis();
  CoarseBasis current = result.initial_basis;

  auto wants_checkpoint = [&](int step) {
    return std::find(config.checkpoints.begin(), config.checkpoints.end(), step) != config.checkpoints.end();
  };
  if (wants_checkpoint(0)) result.checkpoints.push_back({0, state.time, state.saturation});

  Vector velocity;
  int iterations = 0;
  for (int step = 0; step < config.transport_steps; ++step) {
    if (step % config.pressure_interval == 0) {
      if (config.rebuild_basis && step > 0) current = build_basis();
      PressureStepResult p = pressure_step(grid, field, config.fluid, state, current, config.wells, config.solver);
      velocity = std::move(p.velocity);
      iterations = p.solve.report.iterations;
      result.pressure_solves.push_back({step, state.time, p.solve.report, p.solve.divergence_residual});
    }
    TransportStepResult t;
    try {
      t = transport_step(grid, config.fluid, state, velocity, config.wells, config.dt, config.newton);
    } catch (const NumericalError& e) {
      throw NumericalError("transport step " + std::to_string(step + 1) + ": " + e.what());
    }
    state.saturation = std::move(t.saturation);
    state.time += config.dt;
    result.water_cut.push_back({step + 1, state.time, config.wells.water_cut(config.fluid, state.saturation),
                                iterations, t.mass_balance_error});
    if (wants_checkpoint(step + 1)) result.checkpoints.push_back({step + 1, state.time, state.saturation});
    if (observer) observer(step + 1, state);
  }
  return result;
}

} // namespace twogrid
