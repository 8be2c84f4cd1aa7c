#include "support.hpp"

#include <array>
#include <cmath>

namespace twogrid::testing {

namespace {

// Three-point Gauss-Legendre on [0, 1]: exact for the quadratic integrands.
constexpr std::array<double, 3> kNodes{0.5 - 0.3872983346207417, 0.5, 0.5 + 0.3872983346207417};
constexpr std::array<double, 3> kWeights{5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

} // namespace

DenseMatrix quadrature_mass(const Grid& grid, const PermeabilityField& field) {
  const int d = grid.dim();
  DenseMatrix A = DenseMatrix::Zero(grid.num_faces(), grid.num_faces());
  for (int c = 0; c < grid.num_cells(); ++c) {
    const double coeff = 1.0 / field.effective(c);
    for (int a = 0; a < d; ++a) {
      // Shape functions along axis a: (1 - x) on the low face, x on the high face.
      const int faces[2] = {grid.cell_face(c, a, 0), grid.cell_face(c, a, 1)};
      for (int qi = 0; qi < 3; ++qi) {
        const double x = kNodes[qi];
        const double phi[2] = {1.0 - x, x};
        // Integrand is constant along the other axes.
        const double w = kWeights[qi] * grid.cell_volume() * coeff;
        for (int s = 0; s < 2; ++s)
          for (int t = 0; t < 2; ++t)
            if (faces[s] >= 0 && faces[t] >= 0) A(faces[s], faces[t]) += w * phi[s] * phi[t];
      }
    }
  }
  return A;
}

DenseSaddleSolution dense_saddle_solve(const MixedOperators& ops) {
  const DenseMatrix K = DenseMatrix(bordered_saddle(ops.A, ops.B));
  const auto nv = ops.A.rows();
  const auto np = ops.B.rows();
  Vector rhs = Vector::Zero(K.rows());
  rhs.segment(nv, np) = ops.F;
  const Vector x = K.partialPivLu().solve(rhs);
  return {x.head(nv), x.segment(nv, np), x[nv + np]};
}

std::vector<double> random_kappa(int n, double orders, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, orders);
  std::vector<double> k(n);
  for (double& v : k) v = std::pow(10.0, u(rng) - orders / 2);
  return k;
}

Vector random_balanced_source(int n, std::mt19937_64& rng) {
  Vector f = random_vector(n, rng);
  f.array() -= f.mean();
  return f / f.cwiseAbs().maxCoeff();
}

Vector random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vector v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

DivergenceFreeSampler::DivergenceFreeSampler(const MixedOperators& ops)
    : B_(ops.B), gram_(B_ * B_.transpose()) {}

Vector DivergenceFreeSampler::operator()(std::mt19937_64& rng) const {
  const Vector x = random_vector(static_cast<int>(B_.cols()), rng);
  return x - B_.transpose() * gram_.solve(B_ * x);
}

MixedOperators corner_problem(const Grid& grid, const PermeabilityField& field) {
  const std::vector<PointSource> wells{{0, 1.0}, {grid.num_cells() - 1, -1.0}};
  return assemble_mixed(grid, field, assemble_source(grid, {}, wells));
}

double relative_error(const Vector& x, const Vector& reference) {
  return (x - reference).norm() / reference.norm();
}

} // namespace twogrid::testing
