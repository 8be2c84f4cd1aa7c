#include "twogrid/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>

#include "twogrid/error.hpp"
#include "twogrid/synthetic.hpp"

namespace twogrid {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::array<int, 3> dims_of(const Grid& grid) { return {grid.fine_cells(0), grid.fine_cells(1), grid.fine_cells(2)}; }

std::string field_label(const ExperimentConfig& config) {
  switch (config.field.kind) {
  case FieldKind::Uniform: return "uniform";
  case FieldKind::Synthetic: return "synthetic-" + std::to_string(config.field.seed);
  case FieldKind::File: return config.field.path.filename().string();
  }
  return "";
}

std::string step_suffix(int step) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05d", step);
  return buf;
}

/// Block solvers and smoothers depend only on A, so every coarse kind on
/// the same field shares them.
struct SharedSetup {
  std::shared_ptr<const LocalSolverSet> blocks;
  std::shared_ptr<const LocalSolverSet> smoothers;
  double seconds = 0.0;
};

SharedSetup shared_setup(const Grid& grid, const MixedOperators& ops, const SolverSettings& settings) {
  const auto start = std::chrono::steady_clock::now();
  SharedSetup s;
  s.blocks = std::make_shared<const LocalSolverSet>(build_block_solvers(grid, ops, settings.two_grid.threads));
  const bool plain = !settings.two_grid.oversampled_smoother || settings.two_grid.overlap == 0;
  s.smoothers = plain ? s.blocks : build_smoother_solvers(grid, ops, settings.two_grid);
  s.seconds = seconds_since(start);
  return s;
}

RunRow run_row(const ExperimentConfig& config, const Grid& grid, const PermeabilityField& field,
               const MixedOperators& ops, const SharedSetup& shared, CoarseKind kind, double exponent,
               SolveResult* keep = nullptr, CoarseBasis* keep_basis = nullptr) {
  RunRow row;
  row.field = field_label(config);
  row.exponent = exponent;
  row.kind = kind;
  try {
    const auto start = std::chrono::steady_clock::now();
    CoarseBasis basis = build_coarse_space(kind, grid, field, ops, {config.tol, config.solver.two_grid.threads},
                                           shared.blocks.get());
    const double basis_seconds = seconds_since(start);
    DarcySolver solver(grid, ops, basis, config.solver, shared.blocks, shared.smoothers);
    SolveResult res = solver.solve(ops.F);
    row.dim = basis.dim();
    row.iterations = res.report.iterations;
    row.condition = res.report.condition_estimate;
    row.setup_seconds = shared.seconds + basis_seconds + solver.setup_seconds();
    row.solve_seconds = res.report.seconds;
    row.divergence_residual = res.divergence_residual;
    row.converged = res.report.converged;
    if (keep) *keep = std::move(res);
    if (keep_basis) *keep_basis = std::move(basis);
  } catch (const NumericalError& e) {
    throw NumericalError("run " + to_string(kind) + " at exponent " + format_number(exponent) + ": " + e.what());
  }
  return row;
}

MixedOperators darcy_operators(const Grid& grid, const PermeabilityField& field) {
  const auto sources = corner_sources(grid);
  return assemble_mixed(grid, field, assemble_source(grid, {}, sources));
}

} // namespace

void ExperimentConfig::validate() const {
  if (grid.empty() || grid.size() > 3) throw ConfigError("grid must have 1 to 3 axes");
  if (coarse.size() != grid.size()) throw ConfigError("coarse grid must have as many axes as the fine grid");
  (void)make_grid();
  if (!(tol > 0.0)) throw ConfigError("eigenvalue tolerance must be positive");
  if (kinds.empty()) throw ConfigError("at least one coarse space is required");
  if (exponents.empty()) throw ConfigError("contrast exponent list is empty");
  if (!(solver.rel_tol > 0.0) || solver.rel_tol >= 1.0) throw ConfigError("rtol must lie in (0, 1)");
  if (!(solver.two_grid.eta > 0.0)) throw ConfigError("eta must be positive");
  if (solver.two_grid.pre_smooth < 0 || solver.two_grid.post_smooth < 0)
    throw ConfigError("smoothing step counts must be non-negative");
  if (solver.two_grid.overlap < 0) throw ConfigError("overlap must be non-negative");
  if (solver.two_grid.threads < 1) throw ConfigError("threads must be at least 1");
  if (field.kind == FieldKind::File && field.path.empty()) throw ConfigError("field file path is empty");
  if (two_phase) {
    if (two_phase->steps < 0) throw ConfigError("two-phase steps must be non-negative");
    if (two_phase->pressure_interval < 1) throw ConfigError("pressure interval must be at least 1");
    if (!(two_phase->dt > 0.0)) throw ConfigError("two-phase dt must be positive");
    if (!(two_phase->porosity > 0.0)) throw ConfigError("porosity must be positive");
  }
}

Grid ExperimentConfig::make_grid() const { return Grid(grid, coarse); }

PermeabilityField make_field(const ExperimentConfig& config, const Grid& grid, double exponent) {
  const auto dims = dims_of(grid);
  switch (config.field.kind) {
  case FieldKind::Uniform: return PermeabilityField::constant(grid.num_cells());
  case FieldKind::Synthetic: return synth_field(config.field.seed, dims, channelized_spec(dims, exponent));
  case FieldKind::File: {
    RasterSpec spec = config.field.raster;
    if (spec.format == RasterFormat::Spe10) {
      if (spec.spe10.output_dims() != dims)
        throw ConfigError("SPE10 selection does not match the grid dimensions");
    } else {
      spec.dims = dims;
    }
    return read_permeability(config.field.path, spec);
  }
  }
  throw ConfigError("unknown field source");
}

std::vector<PointSource> corner_sources(const Grid& grid) {
  return {{0, 1.0}, {grid.num_cells() - 1, -1.0}};
}

CsvTable RunReport::table() const {
  CsvTable t;
  t.header = {"field", "exponent", "space", "dim", "iterations", "cond", "setup_s", "solve_s", "divergence", "converged"};
  for (const RunRow& r : rows)
    t.add_row({r.field, format_number(r.exponent), to_string(r.kind), std::to_string(r.dim),
               std::to_string(r.iterations), format_number(r.condition), format_number(r.setup_seconds),
               format_number(r.solve_seconds), format_number(r.divergence_residual), r.converged ? "1" : "0"});
  return t;
}

const RunRow* RunReport::find(CoarseKind kind, double exponent) const {
  for (const RunRow& r : rows)
    if (r.kind == kind && r.exponent == exponent) return &r;
  return nullptr;
}

RunReport run_robustness_sweep(const ExperimentConfig& config) {
  config.validate();
  const Grid grid = config.make_grid();
  RunReport report;
  for (double exponent : config.exponents) {
    const PermeabilityField field = make_field(config, grid, exponent);
    const MixedOperators ops = darcy_operators(grid, field);
    const SharedSetup shared = shared_setup(grid, ops, config.solver);
    for (CoarseKind kind : config.kinds)
      report.rows.push_back(run_row(config, grid, field, ops, shared, kind, exponent));
  }
  return report;
}

RunReport run_comparison(const ExperimentConfig& config) {
  config.validate();
  const Grid grid = config.make_grid();
  const double exponent = config.exponents.front();
  const PermeabilityField field = make_field(config, grid, exponent);
  const MixedOperators ops = darcy_operators(grid, field);
  const SharedSetup shared = shared_setup(grid, ops, config.solver);
  RunReport report;
  for (CoarseKind kind : {CoarseKind::RT0, CoarseKind::MsFEM, CoarseKind::GMsFEM})
    report.rows.push_back(run_row(config, grid, field, ops, shared, kind, exponent));
  return report;
}

TwoPhaseReport run_two_phase(const ExperimentConfig& config) {
  config.validate();
  if (!config.two_phase) throw ConfigError("two-phase settings are missing");
  const TwoPhaseBlock& tp = *config.two_phase;
  const Grid grid = config.make_grid();
  const PermeabilityField field = make_field(config, grid, config.exponents.front());

  ImpesConfig impes;
  impes.fluid.mu_w = tp.mu_w;
  impes.fluid.mu_o = tp.mu_o;
  impes.wells = WellConfig::five_spot(grid);
  impes.coarse_kind = config.kinds.front();
  impes.coarse_options = {config.tol, config.solver.two_grid.threads};
  impes.solver = config.solver;
  impes.newton.threads = config.solver.two_grid.threads;
  impes.transport_steps = tp.steps;
  impes.pressure_interval = tp.pressure_interval;
  impes.dt = tp.dt;
  impes.porosity = tp.porosity;
  impes.checkpoints = tp.checkpoints;
  impes.rebuild_basis = tp.rebuild_basis;

  TwoPhaseReport report;
  report.result = impes_run(grid, field, impes);
  std::filesystem::create_directories(config.output_dir);

  CsvTable cut;
  cut.header = {"step", "time", "water_cut", "pcg_iterations"};
  for (const WaterCutSample& s : report.result.water_cut)
    cut.add_row({std::to_string(s.step), format_number(s.time), format_number(s.water_cut),
                 std::to_string(s.pcg_iterations)});
  report.water_cut_csv = config.output_dir / "water_cut.csv";
  cut.write(report.water_cut_csv);

  CsvTable solves;
  solves.header = {"step", "time", "iterations", "cond", "solve_s", "divergence"};
  for (const PressureSolveRecord& r : report.result.pressure_solves)
    solves.add_row({std::to_string(r.step), format_number(r.time), std::to_string(r.report.iterations),
                    format_number(r.report.condition_estimate), format_number(r.report.seconds),
                    format_number(r.divergence_residual)});
  report.pressure_csv = config.output_dir / "pressure_solves.csv";
  solves.write(report.pressure_csv);

  for (const Checkpoint& c : report.result.checkpoints) {
    const auto path = config.output_dir / ("saturation_" + step_suffix(c.step) + ".vtk");
    const CellField s{"saturation", c.saturation};
    write_vtk(path, grid, std::span(&s, 1));
    report.checkpoint_files.push_back(path);
  }
  return report;
}

SingleSolveReport run_single_solve(const ExperimentConfig& config, bool write_output) {
  config.validate();
  const Grid grid = config.make_grid();
  const double exponent = config.exponents.front();
  const PermeabilityField field = make_field(config, grid, exponent);
  const MixedOperators ops = darcy_operators(grid, field);
  const SharedSetup shared = shared_setup(grid, ops, config.solver);
  SolverSettings settings = config.solver;
  settings.recover_pressure = true;
  ExperimentConfig with_pressure = config;
  with_pressure.solver = settings;
  SingleSolveReport report;
  report.row = run_row(with_pressure, grid, field, ops, shared, config.kinds.front(), exponent, &report.solve,
                       &report.basis);
  if (write_output) {
    std::filesystem::create_directories(config.output_dir);
    std::vector<CellField> scalars{{"kappa", field.kappa}};
    if (report.solve.pressure) {
      const Vector& p = report.solve.pressure->pressure;
      scalars.push_back({"pressure", std::vector<double>(p.data(), p.data() + p.size())});
    }
    const CellVectorField v = velocity_to_cells(grid, report.solve.velocity);
    write_vtk(config.output_dir / "solution.vtk", grid, scalars, std::span(&v, 1));
  }
  return report;
}

void write_basis_vtk(const std::filesystem::path& path, const Grid& grid, const CoarseBasis& basis,
                     const std::vector<int>& columns) {
  std::vector<CellVectorField> vectors;
  for (int c : columns) {
    if (c < 0 || c >= basis.velocity_dim())
      throw ConfigError("basis column " + std::to_string(c) + " out of range");
    const Vector column = basis.velocity.col(c);
    vectors.push_back(velocity_to_cells(grid, column, "basis_" + std::to_string(c)));
  }
  write_vtk(path, grid, {}, vectors);
}

} // namespace twogrid
