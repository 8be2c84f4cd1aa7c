#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "twogrid/coarse_space.hpp"
#include "twogrid/grid.hpp"
#include "twogrid/io.hpp"
#include "twogrid/mixed_fem.hpp"
#include "twogrid/preconditioner.hpp"
#include "twogrid/two_phase.hpp"

namespace twogrid {

enum class FieldKind { Uniform, Synthetic, File };

struct FieldSource {
  FieldKind kind = FieldKind::Synthetic;
  std::uint64_t seed = 1;
  std::filesystem::path path;
  RasterSpec raster;  // dims are taken from the grid for Text/Binary
};

struct TwoPhaseBlock {
  int steps = 200;
  int pressure_interval = 50;
  double dt = 0.005;
  double porosity = 0.2;
  double mu_w = 1.0;
  double mu_o = 5.0;
  std::vector<int> checkpoints;
  bool rebuild_basis = false;
};

struct ExperimentConfig {
  std::vector<int> grid{100, 100};
  std::vector<int> coarse{10, 10};
  FieldSource field;
  std::vector<CoarseKind> kinds{CoarseKind::GMsFEM};
  double tol = 10.0;
  std::vector<double> exponents{0.0};
  SolverSettings solver;
  std::optional<TwoPhaseBlock> two_phase;
  std::filesystem::path output_dir = ".";

  /// Throws ConfigError naming the offending setting.
  void validate() const;
  Grid make_grid() const;
};

/// Permeability for one contrast exponent (ignored by Uniform and File).
PermeabilityField make_field(const ExperimentConfig& config, const Grid& grid, double exponent);

/// +1 in the first cell, -1 in the last.
std::vector<PointSource> corner_sources(const Grid& grid);

struct RunRow {
  std::string field;
  double exponent = 0.0;
  CoarseKind kind = CoarseKind::RT0;
  int dim = 0;
  int iterations = 0;
  double condition = 0.0;
  double setup_seconds = 0.0;
  double solve_seconds = 0.0;
  double divergence_residual = 0.0;
  bool converged = false;
};

struct RunReport {
  std::vector<RunRow> rows;

  /// field,exponent,space,dim,iterations,cond,setup_s,solve_s,divergence,converged
  CsvTable table() const;
  /// First row matching kind and exponent, or nullptr.
  const RunRow* find(CoarseKind kind, double exponent) const;
};

/// One row per (exponent, kind) on the configured field with the corner source.
RunReport run_robustness_sweep(const ExperimentConfig& config);
/// All three coarse kinds on one field (first exponent) sharing block solvers and smoothers.
RunReport run_comparison(const ExperimentConfig& config);

struct TwoPhaseReport {
  ImpesResult result;
  std::filesystem::path water_cut_csv;
  std::filesystem::path pressure_csv;
  std::vector<std::filesystem::path> checkpoint_files;
};

/// Five-spot IMPES run; writes water_cut.csv, pressure_solves.csv and
/// saturation_<step>.vtk into output_dir.
TwoPhaseReport run_two_phase(const ExperimentConfig& config);

struct SingleSolveReport {
  RunRow row;
  SolveResult solve;
  CoarseBasis basis;
};

/// One Darcy solve with the first configured kind; writes solution.vtk
/// (kappa, pressure, velocity) into output_dir when `write_output`.
SingleSolveReport run_single_solve(const ExperimentConfig& config, bool write_output = true);

/// Cell-averaged components of selected coarse velocity basis columns.
void write_basis_vtk(const std::filesystem::path& path, const Grid& grid, const CoarseBasis& basis,
                     const std::vector<int>& columns);

} // namespace twogrid
