#include "twogrid/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace twogrid {

namespace {

std::string quoted(const std::filesystem::path& path) { return "'" + path.string() + "'"; }

std::size_t product(const std::array<int, 3>& dims) {
  return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
}

void check_dims(const std::array<int, 3>& dims, const std::filesystem::path& path) {
  for (int n : dims)
    if (n < 1) throw ConfigError("raster " + quoted(path) + ": dimensions must be positive");
}

std::vector<double> read_text_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RasterError(RasterErrorKind::Unreadable, "cannot open raster " + quoted(path));
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    double v = 0.0;
    const char* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, v);
    if (ec != std::errc() || ptr != end)
      throw RasterError(RasterErrorKind::Malformed, "raster " + quoted(path) + ": value " +
                                                        std::to_string(values.size()) + " ('" + token +
                                                        "') is not a number");
    values.push_back(v);
  }
  if (in.bad()) throw RasterError(RasterErrorKind::Unreadable, "read error in raster " + quoted(path));
  return values;
}

std::vector<double> read_binary_values(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw RasterError(RasterErrorKind::Unreadable, "cannot open raster " + quoted(path));
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes % 8 != 0)
    throw RasterError(RasterErrorKind::SizeMismatch,
                      "raster " + quoted(path) + ": " + std::to_string(bytes) + " bytes is not a multiple of 8");
  in.seekg(0);
  std::vector<double> values(bytes / 8);
  std::vector<unsigned char> raw(bytes);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes)))
    throw RasterError(RasterErrorKind::Unreadable, "read error in raster " + quoted(path));
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | raw[8 * i + b];
    values[i] = std::bit_cast<double>(bits);
  }
  return values;
}

void check_count(const std::vector<double>& values, std::size_t expected, const std::filesystem::path& path) {
  if (values.size() != expected)
    throw RasterError(RasterErrorKind::SizeMismatch, "raster " + quoted(path) + " holds " +
                                                         std::to_string(values.size()) + " values, expected " +
                                                         std::to_string(expected));
}

void check_positive(const std::vector<double>& values, const std::filesystem::path& path) {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!(values[i] > 0.0) || !std::isfinite(values[i]))
      throw RasterError(RasterErrorKind::NonPositive, "raster " + quoted(path) + ": value " + std::to_string(i) +
                                                          " is " + format_number(values[i]) +
                                                          ", permeability must be positive");
}

std::vector<double> slice_spe10(const std::vector<double>& all, const Spe10Layout& layout,
                                const std::filesystem::path& path) {
  const auto& d = layout.dims;
  const std::size_t block = product(d);
  if (all.size() != block && all.size() != 3 * block)
    throw RasterError(RasterErrorKind::SizeMismatch, "SPE10 raster " + quoted(path) + " holds " +
                                                         std::to_string(all.size()) + " values, expected " +
                                                         std::to_string(3 * block) + " (or " +
                                                         std::to_string(block) + " for one component)");
  if (layout.component < 0 || layout.component > 2) throw ConfigError("SPE10 component must be 0, 1 or 2");
  if (all.size() == block && layout.component != 0)
    throw RasterError(RasterErrorKind::SizeMismatch,
                      "SPE10 raster " + quoted(path) + " holds a single component, cannot select component " +
                          std::to_string(layout.component));
  if (layout.first_layer < 0 || layout.num_layers < 1 || layout.first_layer + layout.num_layers > d[2])
    throw ConfigError("SPE10 layer range [" + std::to_string(layout.first_layer) + ", " +
                      std::to_string(layout.first_layer + layout.num_layers) + ") outside 0.." +
                      std::to_string(d[2]));
  const std::size_t offset = block * static_cast<std::size_t>(layout.component);
  const auto out_dims = layout.output_dims();
  std::vector<double> out(product(out_dims));
  for (int k = 0; k < layout.num_layers; ++k)
    for (int j = 0; j < d[1]; ++j)
      for (int i = 0; i < d[0]; ++i) {
        const std::size_t src =
            offset + static_cast<std::size_t>(i) + d[0] * (static_cast<std::size_t>(j) + d[1] * static_cast<std::size_t>(k + layout.first_layer));
        const int x = layout.swap_xy ? j : i;
        const int y = layout.swap_xy ? i : j;
        out[static_cast<std::size_t>(x) + out_dims[0] * (static_cast<std::size_t>(y) + out_dims[1] * k)] = all[src];
      }
  return out;
}

} // namespace

std::array<int, 3> Spe10Layout::output_dims() const {
  return swap_xy ? std::array<int, 3>{dims[1], dims[0], num_layers} : std::array<int, 3>{dims[0], dims[1], num_layers};
}

std::vector<double> read_raster(const std::filesystem::path& path, const RasterSpec& spec) {
  std::vector<double> values;
  switch (spec.format) {
  case RasterFormat::Text:
    check_dims(spec.dims, path);
    values = read_text_values(path);
    check_count(values, product(spec.dims), path);
    break;
  case RasterFormat::Binary:
    check_dims(spec.dims, path);
    values = read_binary_values(path);
    check_count(values, product(spec.dims), path);
    break;
  case RasterFormat::Spe10:
    check_dims(spec.spe10.dims, path);
    values = slice_spe10(read_text_values(path), spec.spe10, path);
    break;
  }
  check_positive(values, path);
  return values;
}

PermeabilityField read_permeability(const std::filesystem::path& path, const RasterSpec& spec) {
  return PermeabilityField(read_raster(path, spec));
}

void write_raster(const std::filesystem::path& path, std::span<const double> values, RasterFormat format) {
  if (format == RasterFormat::Spe10) throw ConfigError("write_raster: use write_spe10 for the SPE10 layout");
  if (format == RasterFormat::Text) {
    std::ofstream out(path);
    if (!out) throw RasterError(RasterErrorKind::Unreadable, "cannot write raster " + quoted(path));
    out << std::setprecision(17);
    for (double v : values) out << v << '\n';
    if (!out) throw RasterError(RasterErrorKind::Unreadable, "write error in raster " + quoted(path));
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RasterError(RasterErrorKind::Unreadable, "cannot write raster " + quoted(path));
  for (double v : values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    unsigned char bytes[8];
    for (int b = 0; b < 8; ++b, bits >>= 8) bytes[b] = static_cast<unsigned char>(bits & 0xffu);
    out.write(reinterpret_cast<const char*>(bytes), 8);
  }
  if (!out) throw RasterError(RasterErrorKind::Unreadable, "write error in raster " + quoted(path));
}

void write_spe10(const std::filesystem::path& path, const std::array<int, 3>& dims,
                 std::span<const std::vector<double>> components) {
  std::ofstream out(path);
  if (!out) throw RasterError(RasterErrorKind::Unreadable, "cannot write raster " + quoted(path));
  out << std::setprecision(17);
  for (const auto& c : components) {
    if (c.size() != product(dims)) throw ConfigError("write_spe10: component size does not match dims");
    // Six values per line, as in the distributed file.
    for (std::size_t i = 0; i < c.size(); ++i) out << c[i] << ((i % 6 == 5) ? '\n' : '\t');
    out << '\n';
  }
}

CellVectorField velocity_to_cells(const Grid& grid, const Vector& velocity, std::string name) {
  CellVectorField out{std::move(name), std::vector<std::array<double, 3>>(grid.num_cells(), {0.0, 0.0, 0.0})};
  for (int c = 0; c < grid.num_cells(); ++c)
    for (int a = 0; a < grid.dim(); ++a) {
      double sum = 0.0;
      for (int side : {0, 1}) {
        const int f = grid.cell_face(c, a, side);
        if (f >= 0) sum += velocity[f];
      }
      out.values[c][a] = 0.5 * sum;
    }
  return out;
}

void write_vtk(const std::filesystem::path& path, const Grid& grid, std::span<const CellField> scalars,
               std::span<const CellVectorField> vectors) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + quoted(path));
  out << "# vtk DataFile Version 3.0\n" << path.filename().string() << "\nASCII\nDATASET STRUCTURED_POINTS\n";
  out << "DIMENSIONS";
  for (int a = 0; a < 3; ++a) out << ' ' << (a < grid.dim() ? grid.fine_cells(a) + 1 : 1);
  out << "\nORIGIN 0 0 0\nSPACING";
  out << std::setprecision(17);
  for (int a = 0; a < 3; ++a) out << ' ' << grid.h(a);
  out << "\nCELL_DATA " << grid.num_cells() << '\n';
  for (const CellField& f : scalars) {
    if (static_cast<int>(f.values.size()) != grid.num_cells())
      throw ConfigError("VTK field '" + f.name + "' has the wrong length");
    out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : f.values) out << v << '\n';
  }
  for (const CellVectorField& f : vectors) {
    if (static_cast<int>(f.values.size()) != grid.num_cells())
      throw ConfigError("VTK field '" + f.name + "' has the wrong length");
    out << "VECTORS " << f.name << " double\n";
    for (const auto& v : f.values) out << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
  }
  if (!out) throw ConfigError("write error in " + quoted(path));
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header.size()) throw ConfigError("CSV row has " + std::to_string(row.size()) + " cells, header has " + std::to_string(header.size()));
  rows.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out.str();
}

void CsvTable::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + quoted(path));
  out << str();
  if (!out) throw ConfigError("write error in " + quoted(path));
}

std::string format_number(double value) {
  std::ostringstream out;
  out << std::setprecision(10) << value;
  return out.str();
}

} // namespace twogrid
