#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "twogrid/coarse_space.hpp"
#include "twogrid/error.hpp"
#include "twogrid/experiments.hpp"
#include "twogrid/grid.hpp"
#include "twogrid/io.hpp"
#include "twogrid/mixed_fem.hpp"
#include "twogrid/preconditioner.hpp"
#include "twogrid/synthetic.hpp"
#include "twogrid/two_phase.hpp"

namespace py = pybind11;
using namespace twogrid;

namespace {

PermeabilityField field_from(const std::vector<double>& kappa, const std::vector<double>& mobility) {
  PermeabilityField f(kappa);
  f.mobility = mobility;
  return f;
}

std::vector<PointSource> sources_from(const std::vector<std::pair<int, double>>& pairs) {
  std::vector<PointSource> out;
  for (const auto& [cell, rate] : pairs) out.push_back({cell, rate});
  return out;
}

void bind_grid(py::module_& m) {
  py::class_<DofCounts>(m, "DofCounts")
      .def_readonly("velocity", &DofCounts::velocity)
      .def_readonly("pressure", &DofCounts::pressure)
      .def_property_readonly("total", &DofCounts::total)
      .def("__repr__", [](const DofCounts& d) {
        return "DofCounts(velocity=" + std::to_string(d.velocity) + ", pressure=" + std::to_string(d.pressure) + ")";
      });

  py::class_<Grid>(m, "Grid")
      .def(py::init<std::vector<int>, std::vector<int>, std::vector<double>>(), py::arg("fine"), py::arg("coarse"),
           py::arg("lengths") = std::vector<double>{})
      .def_property_readonly("dim", &Grid::dim)
      .def_property_readonly("num_cells", &Grid::num_cells)
      .def_property_readonly("num_faces", &Grid::num_faces)
      .def_property_readonly("num_blocks", &Grid::num_blocks)
      .def_property_readonly("num_coarse_faces", &Grid::num_coarse_faces)
      .def("fine_cells", &Grid::fine_cells, py::arg("axis"))
      .def("coarse_blocks", &Grid::coarse_blocks, py::arg("axis"))
      .def("count_dofs", &Grid::count_dofs)
      .def("cell_index", [](const Grid& g, int x, int y, int z) { return g.cell_index({x, y, z}); }, py::arg("x"),
           py::arg("y"), py::arg("z") = 0)
      .def("block_cells", &Grid::block_cells, py::arg("block"))
      .def("oversample", &Grid::oversample, py::arg("block"), py::arg("layers"))
      .def("velocity_dofs_interior_to",
           [](const Grid& g, const std::vector<int>& cells) { return g.velocity_dofs_interior_to(cells); });
}

void bind_fem(py::module_& m) {
  py::class_<MixedOperators>(m, "MixedOperators")
      .def_readonly("A", &MixedOperators::A)
      .def_readonly("B", &MixedOperators::B)
      .def_readonly("F", &MixedOperators::F);

  m.def(
      "assemble_source",
      [](const Grid& g, const std::vector<double>& cell_values, const std::vector<std::pair<int, double>>& points) {
        return assemble_source(g, cell_values, sources_from(points));
      },
      py::arg("grid"), py::arg("cell_values") = std::vector<double>{},
      py::arg("point_sources") = std::vector<std::pair<int, double>>{},
      "Cell source integrals plus point rates; raises ValueError when they do not sum to zero.");
  m.def(
      "assemble_mixed",
      [](const Grid& g, const std::vector<double>& kappa, const Vector& source, const std::vector<double>& mobility) {
        return assemble_mixed(g, field_from(kappa, mobility), source);
      },
      py::arg("grid"), py::arg("kappa"), py::arg("source"), py::arg("mobility") = std::vector<double>{});
  m.def("bordered_saddle", &bordered_saddle, py::arg("A"), py::arg("B"));
}

void bind_coarse(py::module_& m) {
  py::enum_<CoarseKind>(m, "CoarseKind")
      .value("RT0", CoarseKind::RT0)
      .value("MsFEM", CoarseKind::MsFEM)
      .value("GMsFEM", CoarseKind::GMsFEM);
  m.def("parse_coarse_kind", [](const std::string& s) { return parse_coarse_kind(s); });

  py::class_<CoarseBasis>(m, "CoarseBasis")
      .def_readonly("kind", &CoarseBasis::kind)
      .def_readonly("velocity", &CoarseBasis::velocity)
      .def_readonly("pressure", &CoarseBasis::pressure)
      .def_readonly("modes_per_face", &CoarseBasis::modes_per_face)
      .def_property_readonly("velocity_dim", &CoarseBasis::velocity_dim)
      .def_property_readonly("pressure_dim", &CoarseBasis::pressure_dim)
      .def_property_readonly("dim", &CoarseBasis::dim)
      .def_property_readonly("eigenvalues", [](const CoarseBasis& b) {
        std::vector<Vector> out;
        for (const auto& s : b.spectra) out.push_back(s.eigenvalues);
        return out;
      });

  m.def(
      "build_coarse_space",
      [](CoarseKind kind, const Grid& g, const std::vector<double>& kappa, const MixedOperators& ops, double tol,
         int threads, const std::vector<double>& mobility) {
        return build_coarse_space(kind, g, field_from(kappa, mobility), ops, {tol, threads});
      },
      py::arg("kind"), py::arg("grid"), py::arg("kappa"), py::arg("ops"), py::arg("tol") = 10.0,
      py::arg("threads") = 1, py::arg("mobility") = std::vector<double>{});
}

void bind_solver(py::module_& m) {
  py::class_<TwoGridSettings>(m, "TwoGridSettings")
      .def(py::init<>())
      .def_readwrite("eta", &TwoGridSettings::eta)
      .def_readwrite("pre_smooth", &TwoGridSettings::pre_smooth)
      .def_readwrite("post_smooth", &TwoGridSettings::post_smooth)
      .def_readwrite("overlap", &TwoGridSettings::overlap)
      .def_readwrite("oversampled_smoother", &TwoGridSettings::oversampled_smoother)
      .def_readwrite("threads", &TwoGridSettings::threads);

  py::class_<SolverSettings>(m, "SolverSettings")
      .def(py::init<>())
      .def_readwrite("two_grid", &SolverSettings::two_grid)
      .def_readwrite("rel_tol", &SolverSettings::rel_tol)
      .def_readwrite("max_iter", &SolverSettings::max_iter)
      .def_readwrite("recover_pressure", &SolverSettings::recover_pressure);

  py::class_<PcgReport>(m, "PcgReport")
      .def_readonly("iterations", &PcgReport::iterations)
      .def_readonly("converged", &PcgReport::converged)
      .def_readonly("residual_history", &PcgReport::residual_history)
      .def_readonly("condition_estimate", &PcgReport::condition_estimate)
      .def_readonly("seconds", &PcgReport::seconds);

  py::class_<SolveResult>(m, "SolveResult")
      .def_readonly("velocity", &SolveResult::velocity)
      .def_readonly("particular", &SolveResult::particular)
      .def_readonly("report", &SolveResult::report)
      .def_readonly("divergence_residual", &SolveResult::divergence_residual)
      .def_readonly("setup_seconds", &SolveResult::setup_seconds)
      .def_property_readonly("pressure", [](const SolveResult& r) -> py::object {
        if (!r.pressure) return py::none();
        return py::cast(r.pressure->pressure);
      });

  m.def(
      "solve",
      [](const Grid& g, const MixedOperators& ops, const CoarseBasis& basis, const SolverSettings& settings) {
        py::gil_scoped_release release;
        return solve(g, ops, basis, settings);
      },
      py::arg("grid"), py::arg("ops"), py::arg("basis"), py::arg("settings") = SolverSettings{},
      "Two-grid preconditioned CG on the divergence-free subspace after preprocessing.");

  // The preconditioner keeps references to grid, operators and basis.
  py::class_<TwoGridPreconditioner>(m, "TwoGridPreconditioner")
      .def(py::init<const Grid&, const MixedOperators&, const CoarseBasis&, TwoGridSettings>(), py::arg("grid"),
           py::arg("ops"), py::arg("basis"), py::arg("settings") = TwoGridSettings{}, py::keep_alive<1, 2>(),
           py::keep_alive<1, 3>(), py::keep_alive<1, 4>())
      .def("smooth", &TwoGridPreconditioner::smooth)
      .def("coarse_correct", &TwoGridPreconditioner::coarse_correct)
      .def("apply", &TwoGridPreconditioner::apply);
}

void bind_two_phase(py::module_& m) {
  py::class_<FluidModel>(m, "FluidModel")
      .def(py::init<>())
      .def_readwrite("mu_w", &FluidModel::mu_w)
      .def_readwrite("mu_o", &FluidModel::mu_o)
      .def_readwrite("exponent_w", &FluidModel::exponent_w)
      .def_readwrite("exponent_o", &FluidModel::exponent_o);
  m.def("total_mobility", [](const FluidModel& f, double s) { return total_mobility(f, s); });
  m.def("fractional_flow", [](const FluidModel& f, double s) {
    const FractionalFlow ff = fractional_flow(f, s);
    return std::make_pair(ff.value, ff.derivative);
  });

  py::class_<WellConfig>(m, "WellConfig")
      .def_static("five_spot", &WellConfig::five_spot, py::arg("grid"), py::arg("total_rate") = 1.0)
      .def_property_readonly("wells", [](const WellConfig& w) {
        std::vector<std::pair<int, double>> out;
        for (const Well& x : w.wells) out.emplace_back(x.cell, x.rate);
        return out;
      });

  py::class_<ImpesResult>(m, "ImpesResult")
      .def_property_readonly("saturation", [](const ImpesResult& r) { return r.final_state.saturation; })
      .def_property_readonly("water_cut", [](const ImpesResult& r) {
        std::vector<double> out;
        for (const auto& s : r.water_cut) out.push_back(s.water_cut);
        return out;
      })
      .def_property_readonly("mass_balance_errors", [](const ImpesResult& r) {
        std::vector<double> out;
        for (const auto& s : r.water_cut) out.push_back(s.mass_balance_error);
        return out;
      })
      .def_property_readonly("pressure_iterations", [](const ImpesResult& r) {
        std::vector<int> out;
        for (const auto& s : r.pressure_solves) out.push_back(s.report.iterations);
        return out;
      });

  m.def(
      "impes_run",
      [](const Grid& g, const std::vector<double>& kappa, int steps, int interval, double dt, CoarseKind kind,
         bool rebuild_basis) {
        ImpesConfig config;
        config.wells = WellConfig::five_spot(g);
        config.transport_steps = steps;
        config.pressure_interval = interval;
        config.dt = dt;
        config.coarse_kind = kind;
        config.rebuild_basis = rebuild_basis;
        py::gil_scoped_release release;
        return impes_run(g, PermeabilityField(kappa), config);
      },
      py::arg("grid"), py::arg("kappa"), py::arg("steps") = 100, py::arg("interval") = 10, py::arg("dt") = 0.005,
      py::arg("kind") = CoarseKind::GMsFEM, py::arg("rebuild_basis") = false,
      "Five-spot IMPES run with the default fluid.");
}

void bind_io(py::module_& m) {
  m.def(
      "channelized_field",
      [](const std::array<int, 3>& dims, double exponent, std::uint64_t seed) {
        return synth_field(seed, dims, channelized_spec(dims, exponent)).kappa;
      },
      py::arg("dims"), py::arg("exponent"), py::arg("seed") = 1);
  m.def(
      "read_text_raster",
      [](const std::filesystem::path& path, const std::array<int, 3>& dims) {
        RasterSpec spec;
        spec.dims = dims;
        return read_raster(path, spec);
      },
      py::arg("path"), py::arg("dims"));
  m.def(
      "write_text_raster",
      [](const std::filesystem::path& path, const std::vector<double>& values) {
        write_raster(path, values, RasterFormat::Text);
      },
      py::arg("path"), py::arg("values"));
}

} // namespace

PYBIND11_MODULE(_twogrid, m) {
  m.doc() = "Two-grid preconditioner for mixed RT0 Darcy problems with multiscale coarse spaces.";

  // Translators run newest first, so the base class goes in first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  bind_grid(m);
  bind_fem(m);
  bind_coarse(m);
  bind_solver(m);
  bind_two_phase(m);
  bind_io(m);
}
