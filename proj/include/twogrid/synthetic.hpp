#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "twogrid/mixed_fem.hpp"

namespace twogrid {

/// Half-open box of fine cells [lo, hi) per axis.
struct CellBox {
  std::array<int, 3> lo{0, 0, 0};
  std::array<int, 3> hi{1, 1, 1};
};

struct FieldSpec {
  /// Boxes set to 10^exponent; a channel is a box spanning one whole axis.
  std::vector<CellBox> features;
  /// Additional boxes of `inclusion_size` cells per axis placed uniformly at
  /// random from the seed.
  int random_inclusions = 0;
  int inclusion_size = 2;
  double exponent = 0.0;

  /// Box spanning the domain along `axis`, `width` cells thick starting at
  /// `offset` on every other used axis.
  static CellBox channel(const std::array<int, 3>& dims, int axis, int offset, int width);
};

/// Background 1, features 10^exponent. Throws ConfigError when a feature
/// leaves the domain. Identical seeds give identical fields.
PermeabilityField synth_field(std::uint64_t seed, const std::array<int, 3>& dims, const FieldSpec& spec);

/// Channels normal to y plus random inclusions scaled to `dims`; the default
/// field of the robustness and comparison experiments.
FieldSpec channelized_spec(const std::array<int, 3>& dims, double exponent);

} // namespace twogrid
