#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "twogrid/coarse_space.hpp"
#include "twogrid/grid.hpp"
#include "twogrid/mixed_fem.hpp"
#include "twogrid/sparse_linalg.hpp"

namespace twogrid::testing {

/// Velocity mass matrix by tensor Gauss quadrature of the RT0 shape
/// functions, independent of the closed-form cell block used by the library.
DenseMatrix quadrature_mass(const Grid& grid, const PermeabilityField& field);

struct DenseSaddleSolution {
  Vector velocity;
  Vector pressure;
  double multiplier = 0.0;
};

/// Dense LU of the full [A B^T 0; B 0 1; 0 1^T 0] system with rhs [0; F; 0].
DenseSaddleSolution dense_saddle_solve(const MixedOperators& ops);

/// Log-uniform kappa over `orders` decades.
std::vector<double> random_kappa(int n, double orders, std::mt19937_64& rng);

/// Cell values with zero sum, scaled to unit infinity norm.
Vector random_balanced_source(int n, std::mt19937_64& rng);

Vector random_vector(int n, std::mt19937_64& rng);

/// Random velocities with B v = 0: x - B^T (B B^T)^+ B x for Gaussian x.
class DivergenceFreeSampler {
public:
  explicit DivergenceFreeSampler(const MixedOperators& ops);
  Vector operator()(std::mt19937_64& rng) const;

private:
  DenseMatrix B_;
  Eigen::CompleteOrthogonalDecomposition<DenseMatrix> gram_;
};

/// Operators with a corner source/sink pair.
MixedOperators corner_problem(const Grid& grid, const PermeabilityField& field);

double relative_error(const Vector& x, const Vector& reference);

} // namespace twogrid::testing
