// Command-line driver for the Darcy and two-phase experiments.
//
//   twogrid-bench robustness --grid 100x100 --coarse 10x10 --space rt0,gmsfem --exponents=-6,-4,-2,0,2,4,6
//   twogrid-bench compare    --grid 32x32x32 --coarse 4x4x4 --exponents 4
//   twogrid-bench two-phase  --grid 40x40 --coarse 4x4 --field uniform --steps 200 --interval 50
//   twogrid-bench solve      --config run.cfg --out results/
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "twogrid/error.hpp"
#include "twogrid/experiments.hpp"

namespace {

using namespace twogrid;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<int> parse_dims(const std::string& text, const std::string& what) {
  std::vector<int> dims;
  for (const std::string& part : split(lower(text), 'x')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(part, &used);
      if (used != part.size() || v < 1) throw std::invalid_argument(part);
      dims.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError(what + " '" + text + "' is not of the form NxM[xK]");
    }
  }
  if (dims.empty() || dims.size() > 3) throw ConfigError(what + " '" + text + "' must have 1 to 3 axes");
  return dims;
}

std::array<int, 3> parse_dims3(const std::string& text, const std::string& what) {
  const auto d = parse_dims(text, what);
  std::array<int, 3> out{1, 1, 1};
  std::copy(d.begin(), d.end(), out.begin());
  return out;
}

template <class T, class Parse>
std::vector<T> parse_list(const std::vector<std::string>& items, const std::string& what, Parse parse) {
  std::vector<T> out;
  for (const std::string& item : items) {
    try {
      out.push_back(parse(item));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError(what + ": cannot parse '" + item + "'");
    }
  }
  return out;
}

struct Options {
  std::string grid = "100x100";
  std::string coarse = "10x10";
  std::vector<std::string> space{"gmsfem"};
  std::vector<std::string> exponents{"0"};
  std::string field = "synthetic";
  std::string field_file;
  std::string field_format = "text";
  std::string spe10_dims = "60x220x85";
  int spe10_component = 0;
  int spe10_first_layer = 5;
  int spe10_layers = 80;
  bool spe10_swap = false;
  double tol = 10.0;
  double eta = 0.2;
  int overlap = 2;
  int m1 = 1;
  int m2 = 1;
  bool plain_smoother = false;
  double rtol = 1e-7;
  int max_iter = 1000;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out = ".";

  int steps = 200;
  int interval = 50;
  double dt = 0.005;
  double porosity = 0.2;
  double mu_w = 1.0;
  double mu_o = 5.0;
  std::vector<std::string> checkpoints;
  bool rebuild_basis = false;

  std::vector<std::string> basis_columns;
};

void add_common(CLI::App& app, Options& o) {
  app.add_option("--grid", o.grid, "Fine cells per axis, e.g. 100x100");
  app.add_option("--coarse", o.coarse, "Coarse blocks per axis, e.g. 10x10");
  app.add_option("--space", o.space, "Coarse space(s): rt0, msfem, gmsfem (comma-separated)")->delimiter(',');
  app.add_option("--exponents", o.exponents, "Contrast exponents k (features get 10^k), comma-separated")
      ->delimiter(',');
  app.add_option("--field", o.field, "Permeability source: uniform, synthetic, file");
  app.add_option("--field-file", o.field_file, "Permeability raster for --field file");
  app.add_option("--field-format", o.field_format, "Raster layout: text, binary, spe10");
  app.add_option("--spe10-dims", o.spe10_dims, "Full SPE10 dimensions");
  app.add_option("--spe10-component", o.spe10_component, "0 = Kx, 1 = Ky, 2 = Kz");
  app.add_option("--spe10-first-layer", o.spe10_first_layer, "First SPE10 layer to keep");
  app.add_option("--spe10-layers", o.spe10_layers, "Number of SPE10 layers to keep");
  app.add_flag("--spe10-swap", o.spe10_swap, "Swap x and y of the SPE10 field");
  app.add_option("--tol", o.tol, "GMsFEM eigenvalue tolerance");
  app.add_option("--eta", o.eta, "Smoother damping");
  app.add_option("--overlap", o.overlap, "Oversampling layers of the smoother blocks");
  app.add_option("--m1", o.m1, "Pre-smoothing steps");
  app.add_option("--m2", o.m2, "Post-smoothing steps");
  app.add_flag("--plain-smoother", o.plain_smoother, "Smooth on the coarse blocks without oversampling");
  app.add_option("--rtol", o.rtol, "PCG relative tolerance");
  app.add_option("--max-iter", o.max_iter, "PCG iteration limit");
  app.add_option("--seed", o.seed, "Synthetic field seed");
  app.add_option("--threads", o.threads, "Worker threads");
  app.add_option("--out", o.out, "Output directory");
}

ExperimentConfig make_config(const Options& o) {
  ExperimentConfig c;
  c.grid = parse_dims(o.grid, "grid");
  c.coarse = parse_dims(o.coarse, "coarse grid");
  c.kinds = parse_list<CoarseKind>(o.space, "space", [](const std::string& s) { return parse_coarse_kind(s); });
  c.exponents = parse_list<double>(o.exponents, "exponents", [](const std::string& s) { return std::stod(s); });
  const std::string field = lower(o.field);
  if (field == "uniform") c.field.kind = FieldKind::Uniform;
  else if (field == "synthetic") c.field.kind = FieldKind::Synthetic;
  else if (field == "file") c.field.kind = FieldKind::File;
  else throw ConfigError("field must be uniform, synthetic or file, got '" + o.field + "'");
  c.field.seed = o.seed;
  c.field.path = o.field_file;
  const std::string format = lower(o.field_format);
  if (format == "text") c.field.raster.format = RasterFormat::Text;
  else if (format == "binary") c.field.raster.format = RasterFormat::Binary;
  else if (format == "spe10") c.field.raster.format = RasterFormat::Spe10;
  else throw ConfigError("field-format must be text, binary or spe10, got '" + o.field_format + "'");
  c.field.raster.spe10.dims = parse_dims3(o.spe10_dims, "spe10-dims");
  c.field.raster.spe10.component = o.spe10_component;
  c.field.raster.spe10.first_layer = o.spe10_first_layer;
  c.field.raster.spe10.num_layers = o.spe10_layers;
  c.field.raster.spe10.swap_xy = o.spe10_swap;
  c.tol = o.tol;
  c.solver.two_grid.eta = o.eta;
  c.solver.two_grid.overlap = o.overlap;
  c.solver.two_grid.pre_smooth = o.m1;
  c.solver.two_grid.post_smooth = o.m2;
  c.solver.two_grid.oversampled_smoother = !o.plain_smoother;
  c.solver.two_grid.threads = o.threads;
  c.solver.rel_tol = o.rtol;
  c.solver.max_iter = o.max_iter;
  c.output_dir = o.out;
  return c;
}

/// Writes and prints the report; false when some solve hit the iteration limit.
bool print_report(const RunReport& report, const std::filesystem::path& csv) {
  const CsvTable table = report.table();
  std::filesystem::create_directories(csv.parent_path().empty() ? "." : csv.parent_path());
  table.write(csv);
  std::cout << table.str() << "wrote " << csv.string() << '\n';
  bool ok = true;
  for (const RunRow& r : report.rows) {
    if (r.converged) continue;
    std::cerr << "numerical failure: PCG did not converge (" << to_string(r.kind) << ", exponent " << r.exponent
              << ", " << r.iterations << " iterations)\n";
    ok = false;
  }
  return ok;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-grid preconditioned mixed finite element experiments"};
  app.set_config("--config", "", "Read options from a 'key = value' file");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  Options o;
  add_common(app, o);
  app.fallthrough();

  auto* robustness = app.add_subcommand("robustness", "Iterations over a list of contrast exponents");
  auto* compare = app.add_subcommand("compare", "RT0, MsFEM and GMsFEM on one field");
  auto* solve = app.add_subcommand("solve", "One Darcy solve with VTK output");
  solve->add_option("--basis-columns", o.basis_columns, "Coarse velocity basis columns to export, comma-separated")
      ->delimiter(',');
  auto* two_phase = app.add_subcommand("two-phase", "Five-spot IMPES run");
  two_phase->add_option("--steps", o.steps, "Transport steps");
  two_phase->add_option("--interval", o.interval, "Transport steps per pressure solve");
  two_phase->add_option("--dt", o.dt, "Transport time step");
  two_phase->add_option("--porosity", o.porosity, "Porosity");
  two_phase->add_option("--mu-w", o.mu_w, "Water viscosity");
  two_phase->add_option("--mu-o", o.mu_o, "Oil viscosity");
  two_phase->add_option("--checkpoints", o.checkpoints, "Steps with saturation VTK output, comma-separated")
      ->delimiter(',');
  two_phase->add_flag("--rebuild-basis", o.rebuild_basis, "Rebuild the coarse basis at every pressure solve");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    ExperimentConfig config = make_config(o);
    if (robustness->parsed()) {
      if (!print_report(run_robustness_sweep(config), config.output_dir / "robustness.csv")) return kExitNumerical;
    } else if (compare->parsed()) {
      if (!print_report(run_comparison(config), config.output_dir / "comparison.csv")) return kExitNumerical;
    } else if (solve->parsed()) {
      const SingleSolveReport r = run_single_solve(config);
      RunReport report;
      report.rows.push_back(r.row);
      const bool ok = print_report(report, config.output_dir / "solve.csv");
      if (!o.basis_columns.empty()) {
        const auto columns = parse_list<int>(o.basis_columns, "basis-columns", [](const std::string& s) { return std::stoi(s); });
        write_basis_vtk(config.output_dir / "basis.vtk", config.make_grid(), r.basis, columns);
      }
      std::cout << "wrote " << (config.output_dir / "solution.vtk").string() << '\n';
      if (!ok) return kExitNumerical;
    } else if (two_phase->parsed()) {
      TwoPhaseBlock tp;
      tp.steps = o.steps;
      tp.pressure_interval = o.interval;
      tp.dt = o.dt;
      tp.porosity = o.porosity;
      tp.mu_w = o.mu_w;
      tp.mu_o = o.mu_o;
      tp.checkpoints = parse_list<int>(o.checkpoints, "checkpoints", [](const std::string& s) { return std::stoi(s); });
      tp.rebuild_basis = o.rebuild_basis;
      config.two_phase = tp;
      const TwoPhaseReport r = run_two_phase(config);
      for (const auto& s : r.result.pressure_solves)
        std::cout << "pressure solve before step " << s.step << ": " << s.report.iterations << " iterations\n";
      if (!r.result.water_cut.empty()) std::cout << "final water cut " << r.result.water_cut.back().water_cut << '\n';
      std::cout << "wrote " << r.water_cut_csv.string() << ", " << r.pressure_csv.string() << " and "
                << r.checkpoint_files.size() << " checkpoint file(s)\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
