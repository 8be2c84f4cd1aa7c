#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace twogrid {

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
/// Compressed row storage, sorted unique column indices per row.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

/// Rows `rows` and columns `cols` of `m` (both given as global indices).
SparseMatrix submatrix(const SparseMatrix& m, std::span<const int> rows, std::span<const int> cols);

/// Direct factorization of a square (bordered saddle) matrix.
///
/// Sparse LU with column approximate-minimum-degree ordering and partial
/// pivoting. Built once, then applied any number of times; `solve` is const
/// and safe to call concurrently.
class SaddleFactorization {
public:
  /// Throws NumericalError naming the pivot when |pivot| < 1e-14 * max|entry|.
  explicit SaddleFactorization(const SparseMatrix& matrix);
  /// Same solves as SaddleFactorization(bordered_saddle(A, B)), computed by
  /// factoring [A B^T; B 0] with one pressure pinned. Avoids the fill of the
  /// dense border row. Requires the constant pressure to be the only kernel
  /// direction.
  static SaddleFactorization bordered(const SparseMatrix& A, const SparseMatrix& B);
  ~SaddleFactorization();
  SaddleFactorization(SaddleFactorization&&) noexcept;
  SaddleFactorization& operator=(SaddleFactorization&&) noexcept;

  Vector solve(const Vector& rhs) const;
  /// Column-wise solve.
  DenseMatrix solve(const DenseMatrix& rhs) const;
  int size() const { return size_; }

private:
  SaddleFactorization() = default;
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int size_ = 0;
};

struct EigenPairs {
  Vector values;        // ascending
  DenseMatrix vectors;  // columns, S-orthonormal
};

/// All eigenpairs of A x = lambda S x for symmetric A and SPD S.
/// Throws NumericalError if S is not positive definite.
EigenPairs generalized_symmetric_eig(const DenseMatrix& A, const DenseMatrix& S);

enum class ResidualNorm {
  /// ||b - Op x||_2
  Euclidean,
  /// sqrt(r^T M^{-1} r); the one that goes to zero on a constrained subspace
  Preconditioned,
};

struct PcgSettings {
  double rel_tol = 1e-7;
  int max_iter = 1000;
  ResidualNorm norm = ResidualNorm::Euclidean;
  bool reorthogonalize = false;
};

struct PcgReport {
  int iterations = 0;
  bool converged = false;
  /// Relative residual after each iteration, starting with 1 at iteration 0.
  std::vector<double> residual_history;
  double condition_estimate = 1.0;
  double seconds = 0.0;
  std::vector<double> alphas;
  std::vector<double> betas;
};

/// y = Op x. Output is pre-sized by the caller.
using LinearMap = std::function<void(const Vector&, Vector&)>;

/// Preconditioned conjugate gradients. `x` holds the initial guess on entry.
/// Throws NumericalError on non-positive curvature or a non-positive
/// preconditioned inner product.
PcgReport pcg(const LinearMap& op, const LinearMap& preconditioner, const Vector& rhs, Vector& x,
              const PcgSettings& settings = {});

/// Extreme-eigenvalue ratio of the Lanczos tridiagonal matrix rebuilt from
/// CG step lengths and direction-update coefficients. Returns 1 for fewer
/// than two steps.
double condition_estimate(std::span<const double> alphas, std::span<const double> betas);

} // namespace twogrid
