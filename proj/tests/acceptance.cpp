// Acceptance checks, one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "support.hpp"
#include "twogrid/experiments.hpp"
#include "twogrid/io.hpp"
#include "twogrid/local_solver.hpp"
#include "twogrid/preconditioner.hpp"
#include "twogrid/synthetic.hpp"
#include "twogrid/two_phase.hpp"

using namespace twogrid;
using namespace twogrid::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void report(const char* id, const std::function<void(Outcome&)>& check) {
  Outcome o;
  const auto start = Clock::now();
  try {
    check(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << " [exception: " << e.what() << "]";
  }
  std::printf("%s %s (%.1fs)%s\n", id, o.pass ? "PASS" : "FAIL", seconds_since(start), o.detail.str().c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

struct Case {
  std::vector<int> fine;
  std::vector<int> coarse;
};

const std::vector<Case> kSmallCases{{{24, 24}, {4, 4}}, {{24, 24}, {6, 6}}, {{18, 12}, {3, 2}}, {{8, 8, 8}, {2, 2, 2}}};
const CoarseKind kKinds[] = {CoarseKind::RT0, CoarseKind::MsFEM, CoarseKind::GMsFEM};

std::string case_name(const Case& c, CoarseKind kind) {
  std::string s;
  for (std::size_t a = 0; a < c.fine.size(); ++a) s += (a ? "x" : "") + std::to_string(c.fine[a]);
  s += "/";
  for (std::size_t a = 0; a < c.coarse.size(); ++a) s += (a ? "x" : "") + std::to_string(c.coarse[a]);
  return s + " " + to_string(kind);
}

void oracle_equivalence(Outcome& o) {
  double worst = 0.0;
  std::uint64_t seed = 100;
  for (const Case& c : kSmallCases) {
    Grid g(c.fine, c.coarse);
    std::mt19937_64 rng(seed++);
    const PermeabilityField field(random_kappa(g.num_cells(), 6.0, rng));
    const MixedOperators ops = corner_problem(g, field);
    const DenseSaddleSolution ref = dense_saddle_solve(ops);
    for (CoarseKind kind : kKinds) {
      SolverSettings settings;
      settings.rel_tol = 1e-10;
      const SolveResult r = solve(g, ops, build_coarse_space(kind, g, field, ops), settings);
      const double err = relative_error(r.velocity, ref.velocity);
      worst = std::max(worst, err);
      o.require(r.report.converged, case_name(c, kind) + " did not converge");
      o.require(err <= 1e-6, case_name(c, kind) + " error " + format_number(err));
    }
  }
  o.detail << " max relative velocity error " << format_number(worst);
}

void preprocessing_exactness(Outcome& o) {
  double worst = 0.0;
  int checked = 0;
  std::uint64_t seed = 200;
  for (const Case& c : kSmallCases) {
    Grid g(c.fine, c.coarse);
    std::mt19937_64 rng(seed++);
    const PermeabilityField field(random_kappa(g.num_cells(), 6.0, rng));
    const MixedOperators ops = corner_problem(g, field);
    const auto blocks = build_block_solvers(g, ops);
    for (CoarseKind kind : kKinds) {
      const CoarseBasis basis = build_coarse_space(kind, g, field, ops, {}, &blocks);
      const CoarseOperator coarse(basis, ops);
      for (int t = 0; t < 50; ++t) {
        const Vector F = random_balanced_source(g.num_cells(), rng);
        const PreprocessResult r = preprocess(ops, basis, coarse, blocks, F);
        const double res = (ops.B * r.velocity - F).cwiseAbs().maxCoeff();
        worst = std::max(worst, res);
        ++checked;
      }
    }
  }
  o.require(worst <= 1e-10, "residual " + format_number(worst));
  o.detail << " " << checked << " sources, max ||B v - F||_inf " << format_number(worst);
}

void subspace_and_spd(Outcome& o) {
  double worst_div = 0.0, worst_sym = 0.0, min_energy = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 300;
  for (const Case& c : {kSmallCases[0], kSmallCases[3]}) {
    Grid g(c.fine, c.coarse);
    std::mt19937_64 rng(seed++);
    const PermeabilityField field(random_kappa(g.num_cells(), 6.0, rng));
    const MixedOperators ops = corner_problem(g, field);
    const DivergenceFreeSampler divergence_free(ops);
    for (CoarseKind kind : kKinds) {
      TwoGridSettings settings;
      settings.pre_smooth = 1;
      settings.post_smooth = 1;
      const TwoGridPreconditioner prec(g, ops, build_coarse_space(kind, g, field, ops), settings);
      auto div = [&](const Vector& z) {
        return (ops.B * z).cwiseAbs().maxCoeff() / std::max(z.cwiseAbs().maxCoeff(), 1e-300);
      };
      for (int t = 0; t < 100; ++t) {
        const Vector r = random_vector(g.num_faces(), rng);
        worst_div = std::max({worst_div, div(prec.smooth(r)), div(prec.coarse_correct(r)), div(prec.apply(r))});
        const Vector x = divergence_free(rng);
        const Vector y = divergence_free(rng);
        const Vector mx = prec.apply(x);
        const Vector my = prec.apply(y);
        worst_sym = std::max(worst_sym, std::abs(y.dot(mx) - x.dot(my)) / (x.norm() * y.norm()));
        min_energy = std::min(min_energy, x.dot(mx) / x.squaredNorm());
      }
    }
  }
  o.require(worst_div <= 1e-10, "divergence " + format_number(worst_div));
  o.require(worst_sym <= 1e-9, "asymmetry " + format_number(worst_sym));
  o.require(min_energy > 0.0, "non-positive x^T M x");
  o.detail << " max ||Bz||/||z|| " << format_number(worst_div) << ", asymmetry " << format_number(worst_sym)
           << ", min x^T M x/|x|^2 " << format_number(min_energy);
}

void contrast_robustness(Outcome& o) {
  ExperimentConfig config;
  config.kinds = {CoarseKind::RT0, CoarseKind::MsFEM, CoarseKind::GMsFEM};
  config.exponents = {-6, -4, -2, 0, 2, 4, 6};
  const auto start = Clock::now();
  const RunReport r = run_robustness_sweep(config);
  const double elapsed = seconds_since(start);
  int gmin = std::numeric_limits<int>::max(), gmax = 0;
  std::ostringstream its;
  for (CoarseKind kind : config.kinds) {
    its << " " << to_string(kind) << ":";
    for (double e : config.exponents) {
      const RunRow* row = r.find(kind, e);
      its << " " << row->iterations;
      o.require(row->converged, to_string(kind) + " unconverged");
      if (kind == CoarseKind::GMsFEM) {
        gmin = std::min(gmin, row->iterations);
        gmax = std::max(gmax, row->iterations);
      }
    }
  }
  const int rt_low = r.find(CoarseKind::RT0, -6)->iterations;
  const int rt_mid = r.find(CoarseKind::RT0, 0)->iterations;
  o.require(gmax <= 1.5 * gmin, "GMsFEM spread " + std::to_string(gmax) + "/" + std::to_string(gmin));
  o.require(gmax <= 40, "GMsFEM above 40 iterations");
  o.require(rt_low >= 3 * rt_mid, "RT0 ratio " + std::to_string(rt_low) + "/" + std::to_string(rt_mid));
  o.require(elapsed < 300.0, "runtime " + format_number(elapsed) + "s");
  o.detail << " iterations" << its.str() << "; GMsFEM spread " << format_number(double(gmax) / gmin)
           << ", RT0 10^-6/10^0 ratio " << format_number(double(rt_low) / rt_mid);
}

void coarse_space_ordering(Outcome& o) {
  ExperimentConfig config;
  config.grid = {32, 32, 32};
  config.coarse = {4, 4, 4};
  config.exponents = {4.0};
  const RunReport r = run_comparison(config);
  const RunRow& rt = *r.find(CoarseKind::RT0, 4.0);
  const RunRow& ms = *r.find(CoarseKind::MsFEM, 4.0);
  const RunRow& gm = *r.find(CoarseKind::GMsFEM, 4.0);
  for (const RunRow* row : {&rt, &ms, &gm}) o.require(row->converged, to_string(row->kind) + " unconverged");
  o.require(gm.iterations < ms.iterations && ms.iterations <= rt.iterations, "iteration ordering");
  o.require(gm.condition < ms.condition && ms.condition <= rt.condition, "condition ordering");
  o.detail << " iterations GMsFEM/MsFEM/RT0 " << gm.iterations << "/" << ms.iterations << "/" << rt.iterations
           << ", cond " << format_number(gm.condition) << "/" << format_number(ms.condition) << "/"
           << format_number(rt.condition) << ", dims " << gm.dim << "/" << ms.dim << "/" << rt.dim;
}

void spectral_machinery(Outcome& o) {
  double worst_res = 0.0, worst_orth = 0.0;
  bool decay = true, nested = true;
  for (double exponent : {-4.0, 0.0, 4.0}) {
    Grid g({20, 20}, {4, 4});
    const PermeabilityField field = synth_field(5, {20, 20, 1}, channelized_spec({20, 20, 1}, exponent));
    const MixedOperators ops = corner_problem(g, field);
    const auto blocks = build_block_solvers(g, ops);
    for (int f = 0; f < g.num_coarse_faces(); ++f) {
      const SnapshotFamily fam = snapshot_face(g, ops, blocks, f);
      const DenseMatrix a = face_bilinear_a(g, field, f);
      const DenseMatrix s = face_bilinear_s(g, ops, fam);
      const EigenPairs e = generalized_symmetric_eig(a, s);
      const auto J = e.values.size();
      for (Eigen::Index k = 0; k < J; ++k) {
        const Vector x = e.vectors.col(k);
        worst_res = std::max(worst_res, (a * x - e.values[k] * (s * x)).norm());
        if (k > 0 && !(1.0 / e.values[k] <= 1.0 / e.values[k - 1])) decay = false;
      }
      if (!(e.values[0] > 0.0)) decay = false;
      worst_orth = std::max(worst_orth,
                            (e.vectors.transpose() * s * e.vectors - DenseMatrix::Identity(J, J)).cwiseAbs().maxCoeff());
      int prev = 0;
      for (double tol : {1.0, 10.0, 100.0, 1e4, std::numeric_limits<double>::infinity()}) {
        const int l = select_modes(f, e, tol).selected;
        if (l < prev) nested = false;
        prev = l;
      }
      if (prev != J) nested = false;
    }
  }
  Grid g({20, 20}, {5, 5});
  const PermeabilityField ones = PermeabilityField::constant(g.num_cells());
  const MixedOperators ops = corner_problem(g, ones);
  const auto blocks = build_block_solvers(g, ops);
  const CoarseBasis full = build_gmsfem_space(g, ones, ops, blocks, {std::numeric_limits<double>::infinity(), 1});
  double max_first = 0.0, min_second = std::numeric_limits<double>::infinity();
  for (const SpectralSelection& s : full.spectra) {
    max_first = std::max(max_first, s.eigenvalues[0]);
    min_second = std::min(min_second, s.eigenvalues[1]);
  }
  const double tol = max_first * (1.0 + 1e-9);
  const int dim = build_gmsfem_space(g, ones, ops, blocks, {tol, 1}).dim();
  const int expected = g.num_coarse_faces() + g.num_blocks();

  o.require(worst_res <= 1e-10, "eigen residual " + format_number(worst_res));
  o.require(worst_orth <= 1e-10, "S-orthonormality " + format_number(worst_orth));
  o.require(nested, "selection nesting");
  o.require(tol < min_second, "no gap between first and second eigenvalues");
  o.require(dim == expected, "uniform-field dim " + std::to_string(dim) + " != " + std::to_string(expected));
  o.require(decay, "inverse eigenvalue decay");
  o.detail << " max residual " << format_number(worst_res) << ", S-orthonormality " << format_number(worst_orth)
           << ", uniform dim " << dim << " = N_e + N = " << expected;
}

struct ImpesChecks {
  double balance = 0.0;
  double bounds = 0.0;
  double symmetry = 0.0;
};

double five_spot_asymmetry(const Grid& g, const std::vector<double>& s) {
  const int n = g.fine_cells(0);
  double worst = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double v = s[g.cell_index({i, j, 0})];
      worst = std::max({worst, std::abs(v - s[g.cell_index({n - 1 - i, j, 0})]),
                        std::abs(v - s[g.cell_index({i, n - 1 - j, 0})]), std::abs(v - s[g.cell_index({j, i, 0})])});
    }
  return worst;
}

ImpesResult checked_run(const Grid& g, const PermeabilityField& field, const ImpesConfig& config, ImpesChecks& checks) {
  const Vector q = config.wells.rates(g);
  std::vector<double> previous(g.num_cells(), config.initial_saturation);
  const auto observe = [&](int, const TransportState& s) {
    double stored = 0.0, wells = 0.0;
    for (int c = 0; c < g.num_cells(); ++c) {
      stored += s.porosity[c] * g.cell_volume() * (s.saturation[c] - previous[c]);
      wells += std::max(q[c], 0.0) + fractional_flow(config.fluid, s.saturation[c]).value * std::min(q[c], 0.0);
      checks.bounds = std::max({checks.bounds, -s.saturation[c], s.saturation[c] - 1.0});
    }
    checks.balance = std::max(checks.balance, std::abs(stored - config.dt * wells));
    previous = s.saturation;
  };
  return impes_run(g, field, config, observe);
}

void two_phase_properties(Outcome& o) {
  const auto start = Clock::now();
  Grid g({40, 40}, {4, 4});
  ImpesConfig config;
  config.wells = WellConfig::five_spot(g);
  config.transport_steps = 200;
  config.pressure_interval = 50;
  config.dt = 0.005;
  config.checkpoints = {0, 50, 100, 150, 200};
  config.solver.rel_tol = 1e-10;

  ImpesChecks uniform;
  const ImpesResult u = checked_run(g, PermeabilityField::constant(g.num_cells()), config, uniform);
  for (const Checkpoint& c : u.checkpoints) uniform.symmetry = std::max(uniform.symmetry, five_spot_asymmetry(g, c.saturation));
  bool monotone = true;
  for (std::size_t k = 1; k < u.water_cut.size(); ++k)
    if (u.water_cut[k].water_cut < u.water_cut[k - 1].water_cut) monotone = false;

  const PermeabilityField channels = synth_field(1, {40, 40, 1}, channelized_spec({40, 40, 1}, 3.0));
  config.solver.rel_tol = 1e-7;
  ImpesChecks frozen_checks, rebuilt_checks;
  const ImpesResult frozen = checked_run(g, channels, config, frozen_checks);
  config.rebuild_basis = true;
  const ImpesResult rebuilt = checked_run(g, channels, config, rebuilt_checks);
  int worst_gap = std::numeric_limits<int>::min();
  std::ostringstream its;
  for (std::size_t k = 0; k < frozen.pressure_solves.size(); ++k) {
    const int f = frozen.pressure_solves[k].report.iterations;
    const int r = rebuilt.pressure_solves[k].report.iterations;
    worst_gap = std::max(worst_gap, f - r);
    its << (k ? "," : "") << f << "/" << r;
  }
  const double elapsed = seconds_since(start);

  const double balance = std::max({uniform.balance, frozen_checks.balance, rebuilt_checks.balance});
  const double bounds = std::max({uniform.bounds, frozen_checks.bounds, rebuilt_checks.bounds});
  o.require(bounds <= 1e-9, "saturation bounds " + format_number(bounds));
  o.require(balance <= 1e-9, "mass balance " + format_number(balance));
  o.require(uniform.symmetry <= 1e-8, "symmetry " + format_number(uniform.symmetry));
  o.require(monotone, "water cut not monotone");
  o.require(worst_gap <= 5, "frozen basis costs " + std::to_string(worst_gap) + " extra iterations");
  o.require(elapsed < 600.0, "runtime " + format_number(elapsed) + "s");
  o.detail << " mass balance " << format_number(balance) << ", symmetry " << format_number(uniform.symmetry)
           << ", final water cut " << format_number(u.water_cut.back().water_cut)
           << ", frozen/rebuilt iterations " << its.str();
}

double sentinel(int component, int i, int j, int k) { return 1.0 + component * 1e7 + i + 100.0 * j + 1e5 * k; }

void full_scale_bookkeeping(Outcome& o) {
  const DofCounts spe = Grid({220, 60, 80}, {22, 6, 8}).count_dofs();
  const DofCounts cube = Grid({64, 64, 64}, {8, 8, 8}).count_dofs();
  o.require(spe.total() == 4188400 && spe.total() + 1 == 4188401, "SPE10 DOFs " + std::to_string(spe.total()));
  o.require(cube.velocity == 774144 && cube.pressure == 262144 && cube.total() == 1036288,
            "cube DOFs " + std::to_string(cube.total()));

  const fs::path dir = fs::temp_directory_path() / "twogrid_acceptance_spe10";
  fs::create_directories(dir);
  const std::array<int, 3> full{60, 220, 85};
  std::vector<std::vector<double>> comps(3);
  for (int c = 0; c < 3; ++c) {
    comps[c].reserve(60 * 220 * 85);
    for (int k = 0; k < 85; ++k)
      for (int j = 0; j < 220; ++j)
        for (int i = 0; i < 60; ++i) comps[c].push_back(sentinel(c, i, j, k));
  }
  write_spe10(dir / "spe_perm.dat", full, comps);

  long mismatches = 0;
  for (auto [component, first, count] : {std::array<int, 3>{0, 0, 80}, std::array<int, 3>{2, 80, 5}}) {
    RasterSpec spec;
    spec.format = RasterFormat::Spe10;
    spec.spe10 = {full, component, first, count, true};
    const auto dims = spec.spe10.output_dims();
    const std::vector<double> v = read_raster(dir / "spe_perm.dat", spec);
    for (int k = 0; k < count; ++k)
      for (int y = 0; y < dims[1]; ++y)
        for (int x = 0; x < dims[0]; ++x)
          if (v[x + static_cast<std::size_t>(dims[0]) * (y + dims[1] * k)] != sentinel(component, y, x, k + first))
            ++mismatches;
    if (component == 0) {
      o.require(dims == std::array<int, 3>{220, 60, 80}, "model grid dims");
      write_raster(dir / "model.bin", v, RasterFormat::Binary);
      RasterSpec bin;
      bin.format = RasterFormat::Binary;
      bin.dims = dims;
      o.require(read_raster(dir / "model.bin", bin) == v, "binary round trip");
    }
  }
  fs::remove_all(dir);
  o.require(mismatches == 0, std::to_string(mismatches) + " sentinel mismatches");
  o.detail << " DOFs 220x60x80 " << spe.total() << " (+1 constraint), 64^3 " << cube.total()
           << ", sentinel mismatches " << mismatches;
}

} // namespace

int main() {
  report("AC1", oracle_equivalence);
  report("AC2", preprocessing_exactness);
  report("AC3", subspace_and_spd);
  report("AC4", contrast_robustness);
  report("AC5", coarse_space_ordering);
  report("AC6", spectral_machinery);
  report("AC7", two_phase_properties);
  report("AC8", full_scale_bookkeeping);
  return failures == 0 ? 0 : 1;
}
