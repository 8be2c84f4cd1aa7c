#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace twogrid {

using Coords = std::array<int, 3>;

/// Interior face of the coarse skeleton shared by two coarse blocks.
///
/// The fixed normal points along +axis, i.e. from `lower_block` toward
/// `upper_block`, which is also the orientation of the fine velocity DOFs.
struct CoarseFace {
  int id = 0;
  int axis = 0;
  int lower_block = 0;
  int upper_block = 0;
  /// Fine faces on this coarse face, lexicographic over the orthogonal axes
  /// (lowest orthogonal axis fastest).
  std::vector<int> fine_faces;
};

struct DofCounts {
  std::int64_t velocity = 0;
  std::int64_t pressure = 0;
  std::int64_t total() const { return velocity + pressure; }
};

/// Structured fine/coarse Cartesian grid in 2D or 3D.
///
/// Cells are numbered x-fastest. Velocity DOFs are the interior fine faces,
/// numbered axis-major (all x-faces, then y, then z); within an axis the face
/// between cells (.., p-1, ..) and (.., p, ..) has position p along that axis
/// and the positions are numbered x-fastest. Boundary faces carry no DOF.
/// Unused axes of a 2D grid have extent 1.
class CartesianTwoScaleGrid {
public:
  CartesianTwoScaleGrid(std::vector<int> fine_cells_per_axis,
                        std::vector<int> coarse_blocks_per_axis,
                        std::vector<double> domain_lengths = {});

  int dim() const { return dim_; }
  int fine_cells(int axis) const { return n_[axis]; }
  int coarse_blocks(int axis) const { return c_[axis]; }
  /// Fine cells per coarse block along an axis.
  int ratio(int axis) const { return r_[axis]; }
  double length(int axis) const { return len_[axis]; }
  double h(int axis) const { return h_[axis]; }
  double H(int axis) const { return H_[axis]; }

  int num_cells() const { return num_cells_; }
  int num_faces() const { return num_faces_; }
  int num_blocks() const { return num_blocks_; }
  int num_faces_on_axis(int axis) const { return axis_face_count_[axis]; }
  DofCounts count_dofs() const;

  double cell_volume() const { return cell_volume_; }
  double face_measure(int axis) const { return face_measure_[axis]; }
  double block_volume() const { return block_volume_; }

  Coords cell_coords(int cell) const;
  int cell_index(const Coords& c) const { return c[0] + n_[0] * (c[1] + n_[1] * c[2]); }

  int face_axis(int face) const;
  /// Position of the face; position[axis] is in [1, n_axis - 1].
  Coords face_position(int face) const;
  int face_index(int axis, const Coords& position) const;
  int face_lower_cell(int face) const;
  int face_upper_cell(int face) const;
  /// Face on the low (side=0) or high (side=1) end of a cell along an axis;
  /// -1 on the domain boundary.
  int cell_face(int cell, int axis, int side) const;

  int block_of_cell(int cell) const;
  Coords block_coords(int block) const;
  int block_index(const Coords& c) const { return c[0] + c_[0] * (c[1] + c_[1] * c[2]); }
  /// Fine cells of a block in ascending order.
  std::vector<int> block_cells(int block) const;

  const std::vector<CoarseFace>& coarse_faces() const { return coarse_faces_; }
  int num_coarse_faces() const { return static_cast<int>(coarse_faces_.size()); }

  /// Block cells grown by `layers` fine cells in every axis direction,
  /// clipped at the boundary. Ascending cell order.
  std::vector<int> oversample(int block, int layers) const;

  /// Faces whose two adjacent cells both lie in `cells` (ascending).
  std::vector<int> velocity_dofs_interior_to(std::span<const int> cells) const;

private:
  int dim_ = 2;
  Coords n_{1, 1, 1};
  Coords c_{1, 1, 1};
  Coords r_{1, 1, 1};
  std::array<double, 3> len_{1.0, 1.0, 1.0};
  std::array<double, 3> h_{1.0, 1.0, 1.0};
  std::array<double, 3> H_{1.0, 1.0, 1.0};
  std::array<int, 3> axis_face_count_{0, 0, 0};
  std::array<int, 4> axis_face_offset_{0, 0, 0, 0};
  std::array<double, 3> face_measure_{0.0, 0.0, 0.0};
  int num_cells_ = 0;
  int num_faces_ = 0;
  int num_blocks_ = 0;
  double cell_volume_ = 0.0;
  double block_volume_ = 0.0;
  std::vector<CoarseFace> coarse_faces_;
};

using Grid = CartesianTwoScaleGrid;

} // namespace twogrid
