#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/LU>

#include "hspde/band_matrix.hpp"

namespace hspde {

/// I - scale * m for square m.
BandMatrix identity_minus(const BandMatrix& m, double scale);

/// Prefactored solver for a square band system.
///
/// Uses banded LU without pivoting when that is safe: the matrix is
/// diagonally dominant by rows, or its symmetric part is positive definite
/// (checked by a banded Cholesky). Otherwise falls back to a dense
/// partially pivoted LU. Solves are const and safe to share across threads.
class BandedSolver {
 public:
  explicit BandedSolver(const BandMatrix& a);

  std::size_t size() const noexcept { return n_; }
  bool uses_dense_fallback() const noexcept { return dense_.has_value(); }

  std::vector<double> solve(std::span<const double> rhs) const;

 private:
  double& lu(std::size_t i, std::size_t j) { return band_[i * width_ + (j + lower_ - i)]; }
  double lu(std::size_t i, std::size_t j) const { return band_[i * width_ + (j + lower_ - i)]; }

  std::size_t n_ = 0;
  std::size_t lower_ = 0;
  std::size_t upper_ = 0;
  std::size_t width_ = 0;
  std::vector<double> band_;
  std::optional<Eigen::PartialPivLU<Eigen::MatrixXd>> dense_;
};

}  // namespace hspde
