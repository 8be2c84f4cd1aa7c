#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "twogrid/coarse_space.hpp"
#include "twogrid/grid.hpp"
#include "twogrid/mixed_fem.hpp"
#include "twogrid/preconditioner.hpp"
#include "twogrid/sparse_linalg.hpp"

namespace twogrid {

/// Incompressible water/oil with Corey relative permeabilities
/// k_rw = s^nw, k_ro = (1-s)^no. Rates are volumetric (rho_w = 1).
struct FluidModel {
  double mu_w = 1.0;
  double mu_o = 5.0;
  double exponent_w = 2.0;
  double exponent_o = 2.0;

  double krw(double s) const;
  double kro(double s) const;
  double dkrw(double s) const;
  double dkro(double s) const;
  /// Throws ConfigError for non-positive viscosities or exponents < 1.
  void validate() const;
};

struct FractionalFlow {
  double value = 0.0;
  double derivative = 0.0;
};

/// k_rw/mu_w + k_ro/mu_o. Saturations outside [0,1] are clamped; the number
/// of clamped entries (beyond 1e-12) is added to *clamped when given.
double total_mobility(const FluidModel& fluid, double s, int* clamped = nullptr);
std::vector<double> total_mobility(const FluidModel& fluid, std::span<const double> s, int* clamped = nullptr);

/// f_w = (k_rw/mu_w) / lambda and its derivative in s.
FractionalFlow fractional_flow(const FluidModel& fluid, double s);

struct Well {
  int cell = 0;
  double rate = 0.0;  // > 0 injects water, < 0 produces
};

struct WellConfig {
  std::vector<Well> wells;

  /// Corner injectors (+total/4 each) and a producer (-total) in the middle
  /// of the x-y plane, all as vertical columns split evenly over the layers.
  /// On an even axis the producer is shared by the two central cells.
  static WellConfig five_spot(const Grid& grid, double total_rate = 1.0);

  /// Throws ConfigError on a bad cell id or unbalanced rates.
  void validate(const Grid& grid) const;
  /// Per-cell net rate q.
  Vector rates(const Grid& grid) const;
  std::vector<PointSource> point_sources() const;
  /// Water cut sum f_w(s) q / sum q over producers.
  double water_cut(const FluidModel& fluid, std::span<const double> saturation) const;
};

struct TransportState {
  std::vector<double> saturation;
  std::vector<double> porosity;
  double time = 0.0;

  static TransportState uniform(int num_cells, double saturation = 0.0, double porosity = 0.2);
  /// Throws ConfigError on size mismatch, porosity <= 0 or s outside [0,1].
  void validate(int num_cells) const;
};

struct PressureStepResult {
  Vector velocity;
  SolveResult solve;
  int clamped_saturations = 0;
};

/// Total velocity for the current saturation: A rebuilt with kappa*lambda(s),
/// coarse operator re-Galerkinized on the given (possibly frozen) basis.
PressureStepResult pressure_step(const Grid& grid, const PermeabilityField& field, const FluidModel& fluid,
                                 const TransportState& state, const CoarseBasis& basis, const WellConfig& wells,
                                 const SolverSettings& settings = {});

struct NewtonSettings {
  double tol = 1e-10;
  int max_iter = 25;
  int max_halvings = 4;
  /// Per-cell cap on the saturation change of one Newton update.
  double max_update = 0.2;
  int threads = 1;
};

struct TransportStepResult {
  std::vector<double> saturation;
  int newton_iterations = 0;  // summed over sub-steps
  int halvings = 0;           // deepest halving level used
  double residual = 0.0;      // last accepted Newton residual
  double mass_balance_error = 0.0;
};

/// Implicit upwind step s^{n+1} = s^n + dt/(phi|cell|) (q+ - sum_j F_ij(s) u_ij + f_w(s) q-).
/// On Newton failure the step is split into halves, at most max_halvings
/// times, before throwing NumericalError.
TransportStepResult transport_step(const Grid& grid, const FluidModel& fluid, const TransportState& state,
                                   const Vector& velocity, const WellConfig& wells, double dt,
                                   const NewtonSettings& settings = {});

struct ImpesConfig {
  FluidModel fluid;
  WellConfig wells;
  CoarseKind coarse_kind = CoarseKind::GMsFEM;
  CoarseBuildOptions coarse_options;
  SolverSettings solver;
  NewtonSettings newton;
  int transport_steps = 100;
  int pressure_interval = 10;
  double dt = 0.01;
  double initial_saturation = 0.0;
  double porosity = 0.2;
  /// Transport step indices (after the step) at which s is stored; 0 is the initial state.
  std::vector<int> checkpoints;
  /// Rebuild the coarse basis from the current mobility at every pressure solve.
  bool rebuild_basis = false;
};

struct PressureSolveRecord {
  int step = 0;  // transport step that follows the solve
  double time = 0.0;
  PcgReport report;
  double divergence_residual = 0.0;
};

struct WaterCutSample {
  int step = 0;
  double time = 0.0;
  double water_cut = 0.0;
  int pcg_iterations = 0;
  double mass_balance_error = 0.0;
};

struct Checkpoint {
  int step = 0;
  double time = 0.0;
  std::vector<double> saturation;
};

struct ImpesResult {
  TransportState final_state;
  std::vector<PressureSolveRecord> pressure_solves;
  std::vector<WaterCutSample> water_cut;
  std::vector<Checkpoint> checkpoints;
  CoarseBasis initial_basis;
};

/// Optional observer called after every transport step.
using StepObserver = std::function<void(int step, const TransportState&)>;

ImpesResult impes_run(const Grid& grid, const PermeabilityField& field, const ImpesConfig& config,
                      const StepObserver& observer = {});

} // namespace twogrid
