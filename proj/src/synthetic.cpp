#include "twogrid/synthetic.hpp"

#include <cmath>
#include <random>
#include <string>

#include "twogrid/error.hpp"

namespace twogrid {

CellBox FieldSpec::channel(const std::array<int, 3>& dims, int axis, int offset, int width) {
  CellBox box;
  for (int a = 0; a < 3; ++a) {
    if (a == axis || dims[a] == 1) {
      box.lo[a] = 0;
      box.hi[a] = dims[a];
    } else {
      box.lo[a] = offset;
      box.hi[a] = offset + width;
    }
  }
  return box;
}

namespace {

void paint(std::vector<double>& kappa, const std::array<int, 3>& dims, const CellBox& box, double value) {
  for (int z = box.lo[2]; z < box.hi[2]; ++z)
    for (int y = box.lo[1]; y < box.hi[1]; ++y)
      for (int x = box.lo[0]; x < box.hi[0]; ++x)
        kappa[static_cast<std::size_t>(x) + dims[0] * (static_cast<std::size_t>(y) + dims[1] * z)] = value;
}

} // namespace

PermeabilityField synth_field(std::uint64_t seed, const std::array<int, 3>& dims, const FieldSpec& spec) {
  for (int n : dims)
    if (n < 1) throw ConfigError("synthetic field dimensions must be positive");
  const std::size_t n = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  std::vector<double> kappa(n, 1.0);
  const double value = std::pow(10.0, spec.exponent);
  for (std::size_t i = 0; i < spec.features.size(); ++i) {
    const CellBox& b = spec.features[i];
    for (int a = 0; a < 3; ++a)
      if (b.lo[a] < 0 || b.hi[a] > dims[a] || b.lo[a] >= b.hi[a])
        throw ConfigError("synthetic feature " + std::to_string(i) + " lies outside the domain on axis " +
                          std::string(1, "xyz"[a]));
    paint(kappa, dims, b, value);
  }
  if (spec.random_inclusions > 0) {
    std::mt19937_64 rng(seed);
    for (int i = 0; i < spec.random_inclusions; ++i) {
      CellBox b;
      for (int a = 0; a < 3; ++a) {
        const int size = std::min(spec.inclusion_size, dims[a]);
        std::uniform_int_distribution<int> pick(0, dims[a] - size);
        b.lo[a] = pick(rng);
        b.hi[a] = b.lo[a] + size;
      }
      paint(kappa, dims, b, value);
    }
  }
  return PermeabilityField(std::move(kappa));
}

FieldSpec channelized_spec(const std::array<int, 3>& dims, double exponent) {
  FieldSpec spec;
  spec.exponent = exponent;
  const int ny = dims[1];
  const bool volume = dims[2] > 1;
  const int width = volume ? 2 : std::max(1, ny / 50);
  const int count = std::max(1, ny / (volume ? 8 : 10));
  // Sheets normal to y, one per ten cells at shifting offsets so they cut
  // through coarse blocks at different heights.
  for (int k = 0; k < count; ++k) {
    const int offset = std::min(ny - width, k * ny / count + 3 + (k * 7) % 5);
    CellBox sheet{{0, offset, 0}, {dims[0], offset + width, dims[2]}};
    spec.features.push_back(sheet);
  }
  spec.random_inclusions = std::max(1, dims[0] * dims[1] * dims[2] / (volume ? 110 : 500));
  spec.inclusion_size = volume ? std::max(2, dims[0] / 10) : std::max(1, dims[0] / 40);
  return spec;
}

} // namespace twogrid
