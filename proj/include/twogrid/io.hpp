#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "twogrid/error.hpp"
#include "twogrid/grid.hpp"
#include "twogrid/mixed_fem.hpp"
#include "twogrid/sparse_linalg.hpp"

namespace twogrid {

enum class RasterErrorKind { Unreadable, Malformed, SizeMismatch, NonPositive };

class RasterError : public ConfigError {
public:
  RasterError(RasterErrorKind kind, const std::string& what) : ConfigError(what), kind_(kind) {}
  RasterErrorKind kind() const { return kind_; }

private:
  RasterErrorKind kind_;
};

enum class RasterFormat {
  Text,    // whitespace-separated values, x fastest
  Binary,  // little-endian float64, x fastest
  Spe10,   // SPE10 text: Kx, Ky, Kz blocks, each nx*ny*nz with x fastest
};

struct Spe10Layout {
  std::array<int, 3> dims{60, 220, 85};
  int component = 0;  // 0 = Kx, 1 = Ky, 2 = Kz
  int first_layer = 0;
  int num_layers = 85;
  /// Transpose x and y so the long axis comes first (60x220 -> 220x60).
  bool swap_xy = false;

  /// Cell counts of the field produced by read_raster.
  std::array<int, 3> output_dims() const;
};

struct RasterSpec {
  RasterFormat format = RasterFormat::Text;
  /// Expected cell counts for Text/Binary.
  std::array<int, 3> dims{1, 1, 1};
  Spe10Layout spe10;
};

/// Cell values in x-fastest order. Each failure mode throws a RasterError
/// with its own kind and the file name in the message.
std::vector<double> read_raster(const std::filesystem::path& path, const RasterSpec& spec);
PermeabilityField read_permeability(const std::filesystem::path& path, const RasterSpec& spec);

/// Text or Binary only.
void write_raster(const std::filesystem::path& path, std::span<const double> values, RasterFormat format);
/// Writes a full SPE10-style file (all three components, `components` blocks).
void write_spe10(const std::filesystem::path& path, const std::array<int, 3>& dims,
                 std::span<const std::vector<double>> components);

struct CellField {
  std::string name;
  std::vector<double> values;  // one per cell
};

struct CellVectorField {
  std::string name;
  std::vector<std::array<double, 3>> values;
};

/// Cell averages of a face velocity per axis (boundary faces count as 0).
CellVectorField velocity_to_cells(const Grid& grid, const Vector& velocity, std::string name = "velocity");

/// VTK legacy ASCII STRUCTURED_POINTS with CELL_DATA.
void write_vtk(const std::filesystem::path& path, const Grid& grid, std::span<const CellField> scalars,
               std::span<const CellVectorField> vectors = {});

/// Minimal CSV table: header plus rows of already formatted cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
  void write(const std::filesystem::path& path) const;
  std::string str() const;
};

std::string format_number(double value);

} // namespace twogrid
