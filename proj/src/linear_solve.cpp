#include "hspde/linear_solve.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hspde/errors.hpp"

namespace hspde {

namespace {

bool diagonally_dominant(const Eigen::MatrixXd& a) {
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double off = a.row(i).cwiseAbs().sum() - std::abs(a(i, i));
    if (std::abs(a(i, i)) < off) return false;
  }
  return true;
}

// Banded Cholesky of the symmetric part; succeeds iff it is positive definite.
bool symmetric_part_positive_definite(const BandMatrix& a, std::size_t bandwidth) {
  const std::size_t n = a.rows();
  std::vector<double> s(n * (bandwidth + 1), 0.0);  // s[i*(bw+1) + (i-j)] for j in [i-bw, i]
  auto at = [&](std::size_t i, std::size_t j) -> double& { return s[i * (bandwidth + 1) + (i - j)]; };
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j0 = i >= bandwidth ? i - bandwidth : 0;
    for (std::size_t j = j0; j <= i; ++j) at(i, j) = 0.5 * (a.at(i, j) + a.at(j, i));
  }
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t k0 = j >= bandwidth ? j - bandwidth : 0;
    double d = at(j, j);
    for (std::size_t k = k0; k < j; ++k) d -= at(j, k) * at(j, k);
    if (!(d > 0.0)) return false;
    d = std::sqrt(d);
    at(j, j) = d;
    const std::size_t i1 = std::min(n - 1, j + bandwidth);
    for (std::size_t i = j + 1; i <= i1; ++i) {
      double v = at(i, j);
      const std::size_t kk0 = std::max(k0, i >= bandwidth ? i - bandwidth : 0);
      for (std::size_t k = kk0; k < j; ++k) v -= at(i, k) * at(j, k);
      at(i, j) = v / d;
    }
  }
  return true;
}

}  // namespace

BandMatrix identity_minus(const BandMatrix& m, double scale) {
  if (!m.is_square()) throw std::invalid_argument("identity_minus: matrix must be square");
  return BandMatrix::identity(m.rows()) - m.scaled(scale);
}

BandedSolver::BandedSolver(const BandMatrix& a) : n_(a.rows()) {
  if (!a.is_square() || n_ == 0) throw std::invalid_argument("BandedSolver: matrix must be square and nonempty");
  for (int d : a.offsets()) {
    if (d > 0) lower_ = std::max(lower_, static_cast<std::size_t>(d));
    if (d < 0) upper_ = std::max(upper_, static_cast<std::size_t>(-d));
  }
  width_ = lower_ + upper_ + 1;

  const Eigen::MatrixXd dense = a.to_dense();
  if (!dense.allFinite()) throw NumericalError("BandedSolver: matrix has non-finite entries");
  const bool banded_ok = diagonally_dominant(dense) || symmetric_part_positive_definite(a, std::max(lower_, upper_));
  if (!banded_ok) {
    dense_.emplace(dense);
    const double rcond = dense_->rcond();
    if (!(rcond > 1e-14)) {
      std::ostringstream os;
      os << "BandedSolver: system is numerically singular (rcond " << rcond << ")";
      throw NumericalError(os.str());
    }
    return;
  }

  band_.assign(n_ * width_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t j0 = i >= lower_ ? i - lower_ : 0;
    const std::size_t j1 = std::min(n_ - 1, i + upper_);
    for (std::size_t j = j0; j <= j1; ++j) lu(i, j) = dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  for (std::size_t k = 0; k < n_; ++k) {
    const double pivot = lu(k, k);
    if (pivot == 0.0 || !std::isfinite(pivot)) {
      std::ostringstream os;
      os << "BandedSolver: zero pivot at row " << k;
      throw NumericalError(os.str());
    }
    const std::size_t i1 = std::min(n_ - 1, k + lower_);
    const std::size_t j1 = std::min(n_ - 1, k + upper_);
    for (std::size_t i = k + 1; i <= i1; ++i) {
      const double l = lu(i, k) / pivot;
      lu(i, k) = l;
      for (std::size_t j = k + 1; j <= j1; ++j) lu(i, j) -= l * lu(k, j);
    }
  }
}

std::vector<double> BandedSolver::solve(std::span<const double> rhs) const {
  if (rhs.size() != n_) throw std::invalid_argument("BandedSolver::solve: right-hand side length mismatch");
  if (dense_) {
    const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(n_));
    const Eigen::VectorXd x = dense_->solve(b);
    return std::vector<double>(x.data(), x.data() + x.size());
  }
  std::vector<double> x(rhs.begin(), rhs.end());
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t j0 = i >= lower_ ? i - lower_ : 0;
    double v = x[i];
    for (std::size_t j = j0; j < i; ++j) v -= lu(i, j) * x[j];
    x[i] = v;
  }
  for (std::size_t ii = n_; ii-- > 0;) {
    const std::size_t j1 = std::min(n_ - 1, ii + upper_);
    double v = x[ii];
    for (std::size_t j = ii + 1; j <= j1; ++j) v -= lu(ii, j) * x[j];
    x[ii] = v / lu(ii, ii);
  }
  return x;
}

}  // namespace hspde
