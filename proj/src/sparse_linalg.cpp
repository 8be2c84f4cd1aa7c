#include "twogrid/sparse_linalg.hpp"

#include <chrono>
#include <cmath>
#include <string>
#include <type_traits>

#include <Eigen/SparseLU>

#include "twogrid/error.hpp"

namespace twogrid {

SparseMatrix submatrix(const SparseMatrix& m, std::span<const int> rows, std::span<const int> cols) {
  std::vector<int> col_map(static_cast<std::size_t>(m.cols()), -1);
  for (std::size_t j = 0; j < cols.size(); ++j) col_map[cols[j]] = static_cast<int>(j);
  std::vector<Triplet> entries;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (SparseMatrix::InnerIterator it(m, rows[i]); it; ++it) {
      const int j = col_map[it.col()];
      if (j >= 0) entries.emplace_back(static_cast<int>(i), j, it.value());
    }
  }
  SparseMatrix out(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

struct SaddleFactorization::Impl {
  using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
  Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>> lu;
  Vector scaling;  // symmetric equilibration: factor D M D
  ColMatrix scaled;
  // Bordered mode: the factored matrix is [A B^T; B 0] with the first
  // pressure pinned, and the border is applied around it.
  int velocity = 0;
  int pressure = 0;

  void factor(const SparseMatrix& matrix);

  /// One step of iterative refinement on the scaled system.
  template <class Rhs>
  auto refined_solve(const Rhs& b) const {
    using Result = std::conditional_t<Rhs::ColsAtCompileTime == 1, Vector, DenseMatrix>;
    Result x = lu.solve(b);
    const Result defect = b - scaled * x;
    x += lu.solve(defect);
    return x;
  }
};

namespace {

/// Symmetric Ruiz equilibration: D with every row/column of D M D having
/// max-norm close to 1.
Vector ruiz_scaling(const Eigen::SparseMatrix<double, Eigen::ColMajor, int>& m) {
  const Eigen::Index n = m.rows();
  Vector d = Vector::Ones(n);
  Vector colmax(n);
  for (int sweep = 0; sweep < 8; ++sweep) {
    colmax.setZero();
    for (int j = 0; j < m.outerSize(); ++j)
      for (Eigen::SparseMatrix<double, Eigen::ColMajor, int>::InnerIterator it(m, j); it; ++it)
        colmax[j] = std::max(colmax[j], std::abs(d[it.row()] * it.value() * d[j]));
    bool done = true;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (colmax[j] > 0.0) {
        d[j] /= std::sqrt(colmax[j]);
        if (std::abs(colmax[j] - 1.0) > 0.1) done = false;
      }
    }
    if (done) break;
  }
  return d;
}

} // namespace

void SaddleFactorization::Impl::factor(const SparseMatrix& matrix) {
  ColMatrix col = matrix;
  col.makeCompressed();
  scaling = ruiz_scaling(col);
  for (int j = 0; j < col.outerSize(); ++j)
    for (ColMatrix::InnerIterator it(col, j); it; ++it) it.valueRef() *= scaling[it.row()] * scaling[j];
  double max_entry = 0.0;
  for (int k = 0; k < col.nonZeros(); ++k) max_entry = std::max(max_entry, std::abs(col.valuePtr()[k]));
  lu.compute(col);
  scaled = col;
  if (lu.info() != Eigen::Success) throw NumericalError("factor: singular matrix (" + lu.lastErrorMessage() + ")");

  // The supernodal L store keeps the diagonal of U.
  const double threshold = 1e-14 * max_entry;
  const auto& lstore = lu.matrixL().m_mapL;
  for (int j = 0; j < col.cols(); ++j) {
    for (typename std::decay_t<decltype(lstore)>::InnerIterator it(lstore, j); it; ++it) {
      if (it.index() == j) {
        if (!(std::abs(it.value()) >= threshold))
          throw NumericalError("factor: numerically singular matrix, pivot " + std::to_string(j) +
                               " has magnitude " + std::to_string(std::abs(it.value())));
        break;
      }
    }
  }
}

SaddleFactorization::SaddleFactorization(const SparseMatrix& matrix)
    : impl_(std::make_unique<Impl>()), size_(static_cast<int>(matrix.rows())) {
  if (matrix.rows() != matrix.cols()) throw NumericalError("factor: matrix is not square");
  if (size_ > 0) impl_->factor(matrix);
}

SaddleFactorization SaddleFactorization::bordered(const SparseMatrix& A, const SparseMatrix& B) {
  const int nv = static_cast<int>(A.rows());
  const int np = static_cast<int>(B.rows());
  if (A.cols() != nv || B.cols() != nv) throw NumericalError("factor: saddle block shapes do not match");
  if (np == 0) throw NumericalError("factor: bordered saddle without pressure unknowns is singular");
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(A.nonZeros() + 2 * B.nonZeros() + 1));
  for (int i = 0; i < nv; ++i)
    for (SparseMatrix::InnerIterator it(A, i); it; ++it) entries.emplace_back(i, it.col(), it.value());
  for (int i = 0; i < np; ++i)
    for (SparseMatrix::InnerIterator it(B, i); it; ++it) {
      entries.emplace_back(nv + i, it.col(), it.value());
      entries.emplace_back(it.col(), nv + i, it.value());
    }
  entries.emplace_back(nv, nv, 1.0);
  SparseMatrix pinned(nv + np, nv + np);
  pinned.setFromTriplets(entries.begin(), entries.end());

  SaddleFactorization out;
  out.impl_ = std::make_unique<Impl>();
  out.size_ = nv + np + 1;
  out.impl_->velocity = nv;
  out.impl_->pressure = np;
  out.impl_->factor(pinned);
  return out;
}

SaddleFactorization::~SaddleFactorization() = default;
SaddleFactorization::SaddleFactorization(SaddleFactorization&&) noexcept = default;
SaddleFactorization& SaddleFactorization::operator=(SaddleFactorization&&) noexcept = default;

DenseMatrix SaddleFactorization::solve(const DenseMatrix& rhs) const {
  if (rhs.rows() != size_) throw NumericalError("solve: right-hand side size mismatch");
  if (size_ == 0) return DenseMatrix(0, rhs.cols());
  const Impl& m = *impl_;
  const auto& d = m.scaling;
  if (m.pressure == 0) return d.asDiagonal() * m.refined_solve(DenseMatrix(d.asDiagonal() * rhs));

  // The constant pressure spans the kernel of [A B^T; B 0] and is also the
  // border column, so the multiplier is the mean pressure data and the
  // pinned solution differs from the bordered one by a constant pressure.
  const int nv = m.velocity, np = m.pressure;
  const Eigen::RowVectorXd mu = rhs.middleRows(nv, np).colwise().sum() / np;
  DenseMatrix core = rhs.topRows(nv + np);
  core.middleRows(nv, np).rowwise() -= mu;
  core = d.asDiagonal() * m.refined_solve(DenseMatrix(d.asDiagonal() * core));
  const Eigen::RowVectorXd shift = (core.middleRows(nv, np).colwise().sum() - rhs.row(nv + np)) / np;
  core.middleRows(nv, np).rowwise() -= shift;
  DenseMatrix out(size_, rhs.cols());
  out.topRows(nv + np) = core;
  out.row(nv + np) = mu;
  return out;
}

Vector SaddleFactorization::solve(const Vector& rhs) const {
  if (rhs.size() != size_) throw NumericalError("solve: right-hand side size mismatch");
  if (size_ == 0) return Vector();
  const Impl& m = *impl_;
  if (m.pressure == 0) return m.refined_solve(Vector(rhs.cwiseProduct(m.scaling))).cwiseProduct(m.scaling);
  const int nv = m.velocity, np = m.pressure;
  const double mu = rhs.segment(nv, np).sum() / np;
  Vector core = rhs.head(nv + np);
  core.segment(nv, np).array() -= mu;
  core = m.refined_solve(Vector(core.cwiseProduct(m.scaling))).cwiseProduct(m.scaling);
  core.segment(nv, np).array() -= (core.segment(nv, np).sum() - rhs[nv + np]) / np;
  Vector out(size_);
  out.head(nv + np) = core;
  out[nv + np] = mu;
  return out;
}

EigenPairs generalized_symmetric_eig(const DenseMatrix& A, const DenseMatrix& S) {
  if (A.rows() != A.cols() || S.rows() != S.cols() || A.rows() != S.rows())
    throw NumericalError("generalized eigenproblem: shape mismatch");
  Eigen::LLT<DenseMatrix> chol(S);
  if (chol.info() != Eigen::Success)
    throw NumericalError("generalized eigenproblem: S is not positive definite");
  Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> solver(A, S,
                                                              Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success) throw NumericalError("generalized eigenproblem: no convergence");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

double condition_estimate(std::span<const double> alphas, std::span<const double> betas) {
  const std::size_t k = alphas.size();
  if (k < 2 || betas.size() < k - 1) return 1.0;
  Vector diag(k), sub(k - 1);
  diag[0] = 1.0 / alphas[0];
  for (std::size_t j = 1; j < k; ++j) {
    diag[j] = 1.0 / alphas[j] + betas[j - 1] / alphas[j - 1];
    sub[j - 1] = std::sqrt(betas[j - 1]) / alphas[j - 1];
  }
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

PcgReport pcg(const LinearMap& op, const LinearMap& preconditioner, const Vector& rhs, Vector& x,
              const PcgSettings& settings) {
  const auto start = std::chrono::steady_clock::now();
  const Eigen::Index n = rhs.size();
  if (x.size() != n) throw NumericalError("pcg: initial guess size mismatch");

  PcgReport report;
  Vector r(n), z(n), q(n);
  op(x, q);
  r = rhs - q;
  preconditioner(r, z);
  double rz = r.dot(z);

  auto residual_norm = [&](double rz_now) {
    return settings.norm == ResidualNorm::Euclidean ? r.norm() : std::sqrt(std::max(rz_now, 0.0));
  };
  const double reference = settings.norm == ResidualNorm::Euclidean ? rhs.norm() : std::sqrt(std::max(rz, 0.0));

  auto finish = [&]() {
    report.condition_estimate = condition_estimate(report.alphas, report.betas);
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
  };

  if (reference == 0.0) {
    report.converged = true;
    report.residual_history.push_back(0.0);
    return finish();
  }
  report.residual_history.push_back(residual_norm(rz) / reference);
  if (report.residual_history.back() <= settings.rel_tol) {
    report.converged = true;
    return finish();
  }
  if (!(rz > 0.0))
    throw NumericalError("pcg: non-positive preconditioned inner product r^T M r = " + std::to_string(rz) +
                         " at iteration 0");

  Vector p = z;
  std::vector<Vector> directions, images;
  for (int k = 0; k < settings.max_iter; ++k) {
    op(p, q);
    const double curvature = p.dot(q);
    if (!(curvature > 0.0))
      throw NumericalError("pcg: non-positive curvature p^T A p = " + std::to_string(curvature) +
                           " at iteration " + std::to_string(k));
    const double alpha = rz / curvature;
    x += alpha * p;
    r -= alpha * q;
    report.alphas.push_back(alpha);
    report.iterations = k + 1;
    if (settings.reorthogonalize) {
      directions.push_back(p);
      images.push_back(q);
    }

    preconditioner(r, z);
    const double rz_next = r.dot(z);
    report.residual_history.push_back(residual_norm(rz_next) / reference);
    if (report.residual_history.back() <= settings.rel_tol) {
      report.converged = true;
      break;
    }
    if (!(rz_next > 0.0))
      throw NumericalError("pcg: non-positive preconditioned inner product r^T M r = " + std::to_string(rz_next) +
                           " at iteration " + std::to_string(k + 1));
    const double beta = rz_next / rz;
    report.betas.push_back(beta);
    p = z + beta * p;
    if (settings.reorthogonalize) {
      for (std::size_t j = 0; j < directions.size(); ++j)
        p -= (p.dot(images[j]) / directions[j].dot(images[j])) * directions[j];
    }
    rz = rz_next;
  }
  return finish();
}

} // namespace twogrid
