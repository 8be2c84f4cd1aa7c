#include "twogrid/grid.hpp"

#include <algorithm>
#include <string>

#include "twogrid/error.hpp"

namespace twogrid {

namespace {

const char* axis_name(int axis) {
  static constexpr const char* names[] = {"x", "y", "z"};
  return names[axis];
}

} // namespace

CartesianTwoScaleGrid::CartesianTwoScaleGrid(std::vector<int> fine_cells_per_axis,
                                             std::vector<int> coarse_blocks_per_axis,
                                             std::vector<double> domain_lengths) {
  dim_ = static_cast<int>(fine_cells_per_axis.size());
  if (dim_ != 2 && dim_ != 3)
    throw ConfigError("grid dimension must be 2 or 3, got " + std::to_string(dim_));
  if (static_cast<int>(coarse_blocks_per_axis.size()) != dim_)
    throw ConfigError("coarse block counts must have " + std::to_string(dim_) + " entries");
  if (domain_lengths.empty()) domain_lengths.assign(dim_, 1.0);
  if (static_cast<int>(domain_lengths.size()) != dim_)
    throw ConfigError("domain lengths must have " + std::to_string(dim_) + " entries");

  for (int a = 0; a < dim_; ++a) {
    const int n = fine_cells_per_axis[a];
    const int c = coarse_blocks_per_axis[a];
    if (n <= 0 || c <= 0 || !(domain_lengths[a] > 0.0))
      throw ConfigError(std::string("non-positive size on axis ") + axis_name(a));
    if (n % c != 0)
      throw ConfigError(std::string("fine cells on axis ") + axis_name(a) + " (" +
                        std::to_string(n) + ") not divisible by coarse blocks (" +
                        std::to_string(c) + ")");
    n_[a] = n;
    c_[a] = c;
    r_[a] = n / c;
    len_[a] = domain_lengths[a];
    h_[a] = len_[a] / n;
    H_[a] = len_[a] / c;
  }

  num_cells_ = n_[0] * n_[1] * n_[2];
  num_blocks_ = c_[0] * c_[1] * c_[2];
  cell_volume_ = 1.0;
  block_volume_ = 1.0;
  for (int a = 0; a < dim_; ++a) {
    cell_volume_ *= h_[a];
    block_volume_ *= H_[a];
  }

  axis_face_offset_[0] = 0;
  for (int a = 0; a < 3; ++a) {
    if (a < dim_) {
      Coords m = n_;
      m[a] -= 1;
      axis_face_count_[a] = m[0] * m[1] * m[2];
      face_measure_[a] = cell_volume_ / h_[a];
    }
    axis_face_offset_[a + 1] = axis_face_offset_[a] + axis_face_count_[a];
  }
  num_faces_ = axis_face_offset_[3];

  // Interior coarse faces, same axis-major ordering as the fine faces.
  for (int a = 0; a < dim_; ++a) {
    Coords m = c_;
    m[a] -= 1;
    for (int k = 0; k < m[2]; ++k)
      for (int j = 0; j < m[1]; ++j)
        for (int i = 0; i < m[0]; ++i) {
          Coords upper{i, j, k};
          upper[a] += 1;
          Coords lower = upper;
          lower[a] -= 1;
          CoarseFace face;
          face.id = static_cast<int>(coarse_faces_.size());
          face.axis = a;
          face.lower_block = block_index(lower);
          face.upper_block = block_index(upper);
          // Orthogonal axes in increasing order; the first one varies fastest.
          int o1 = (a == 0) ? 1 : 0;
          int o2 = (a == 2) ? 1 : 2;
          Coords p{};
          p[a] = upper[a] * r_[a];
          for (int t2 = 0; t2 < r_[o2]; ++t2)
            for (int t1 = 0; t1 < r_[o1]; ++t1) {
              p[o1] = upper[o1] * r_[o1] + t1;
              p[o2] = upper[o2] * r_[o2] + t2;
              face.fine_faces.push_back(face_index(a, p));
            }
          coarse_faces_.push_back(std::move(face));
        }
  }
}

DofCounts CartesianTwoScaleGrid::count_dofs() const {
  return {static_cast<std::int64_t>(num_faces_), static_cast<std::int64_t>(num_cells_)};
}

Coords CartesianTwoScaleGrid::cell_coords(int cell) const {
  return {cell % n_[0], (cell / n_[0]) % n_[1], cell / (n_[0] * n_[1])};
}

int CartesianTwoScaleGrid::face_axis(int face) const {
  if (face < axis_face_offset_[1]) return 0;
  if (face < axis_face_offset_[2]) return 1;
  return 2;
}

Coords CartesianTwoScaleGrid::face_position(int face) const {
  const int a = face_axis(face);
  int local = face - axis_face_offset_[a];
  Coords m = n_;
  m[a] -= 1;
  Coords p{local % m[0], (local / m[0]) % m[1], local / (m[0] * m[1])};
  p[a] += 1;
  return p;
}

int CartesianTwoScaleGrid::face_index(int axis, const Coords& position) const {
  Coords m = n_;
  m[axis] -= 1;
  Coords q = position;
  q[axis] -= 1;
  return axis_face_offset_[axis] + q[0] + m[0] * (q[1] + m[1] * q[2]);
}

int CartesianTwoScaleGrid::face_lower_cell(int face) const {
  const int a = face_axis(face);
  Coords p = face_position(face);
  p[a] -= 1;
  return cell_index(p);
}

int CartesianTwoScaleGrid::face_upper_cell(int face) const {
  return cell_index(face_position(face));
}

int CartesianTwoScaleGrid::cell_face(int cell, int axis, int side) const {
  if (axis >= dim_) return -1;
  Coords p = cell_coords(cell);
  p[axis] += side;
  if (p[axis] <= 0 || p[axis] >= n_[axis]) return -1;
  return face_index(axis, p);
}

int CartesianTwoScaleGrid::block_of_cell(int cell) const {
  const Coords p = cell_coords(cell);
  return block_index({p[0] / r_[0], p[1] / r_[1], p[2] / r_[2]});
}

Coords CartesianTwoScaleGrid::block_coords(int block) const {
  return {block % c_[0], (block / c_[0]) % c_[1], block / (c_[0] * c_[1])};
}

std::vector<int> CartesianTwoScaleGrid::block_cells(int block) const {
  return oversample(block, 0);
}

std::vector<int> CartesianTwoScaleGrid::oversample(int block, int layers) const {
  if (block < 0 || block >= num_blocks_)
    throw ConfigError("invalid coarse block id " + std::to_string(block));
  if (layers < 0) throw ConfigError("oversampling layers must be >= 0");
  const Coords b = block_coords(block);
  Coords lo{}, hi{};
  for (int a = 0; a < 3; ++a) {
    const int grow = a < dim_ ? layers : 0;
    lo[a] = std::max(0, b[a] * r_[a] - grow);
    hi[a] = std::min(n_[a], (b[a] + 1) * r_[a] + grow);
  }
  std::vector<int> cells;
  cells.reserve(static_cast<std::size_t>(hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]));
  for (int k = lo[2]; k < hi[2]; ++k)
    for (int j = lo[1]; j < hi[1]; ++j)
      for (int i = lo[0]; i < hi[0]; ++i) cells.push_back(cell_index({i, j, k}));
  return cells;
}

std::vector<int> CartesianTwoScaleGrid::velocity_dofs_interior_to(std::span<const int> cells) const {
  std::vector<char> inside(num_cells_, 0);
  for (int c : cells) inside[c] = 1;
  std::vector<int> faces;
  for (int c : cells) {
    for (int a = 0; a < dim_; ++a) {
      const int f = cell_face(c, a, 1);
      if (f >= 0 && inside[face_upper_cell(f)]) faces.push_back(f);
    }
  }
  std::sort(faces.begin(), faces.end());
  faces.erase(std::unique(faces.begin(), faces.end()), faces.end());
  return faces;
}

} // namespace twogrid
