#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <utility>

#include "hspde/band_matrix.hpp"

namespace hspde {

/// Coefficients of L = -kappa^2/2 d^4 + sigma^2/2 d^2 - b d and
/// A = (-sigma d, kappa d^2).
struct OperatorParams {
  double kappa = 1.0;
  double sigma = 1.0;
  double b = 0.0;

  void validate() const;
  bool is_zero() const noexcept { return kappa == 0.0 && sigma == 0.0 && b == 0.0; }
};

/// Entry (col + offset, col) of the derivative matrix of the given order,
/// straight from the closed-form expansions of d^k h_n. Returns zero for
/// offsets the expansion does not contain. Templated so callers that need
/// extended precision evaluate the same formulas in long double.
template <class T>
T derivative_entry(int order, int offset, std::size_t col) {
  const T n = static_cast<T>(col);
  const T two = 2;
  const T four = 4;
  if (static_cast<long long>(col) + offset < 0) return T(0);
  using std::sqrt;
  switch (order) {
    case 1:
      if (offset == -1) return sqrt(n / two);
      if (offset == 1) return -sqrt((n + 1) / two);
      return T(0);
    case 2:
      if (offset == -2) return sqrt(n * (n - 1)) / two;
      if (offset == 0) return -(two * n + 1) / two;
      if (offset == 2) return sqrt((n + 1) * (n + 2)) / two;
      return T(0);
    case 3: {
      const T denom = two * sqrt(two);
      if (offset == -3) return sqrt(n * (n - 1) * (n - 2)) / denom;
      if (offset == -1) return -3 * n * sqrt(n) / denom;
      if (offset == 1) return 3 * (n + 1) * sqrt(n + 1) / denom;
      if (offset == 3) return -sqrt((n + 1) * (n + 2) * (n + 3)) / denom;
      return T(0);
    }
    case 4:
      if (offset == -4) return sqrt(n * (n - 1) * (n - 2) * (n - 3)) / four;
      if (offset == -2) return -(two * n - 1) * sqrt(n * (n - 1)) / two;
      if (offset == 0) return (3 * n * n + 3 * (n + 1) * (n + 1)) / four;
      if (offset == 2) return -(two * n + 3) * sqrt((n + 1) * (n + 2)) / two;
      if (offset == 4) return sqrt((n + 1) * (n + 2) * (n + 3) * (n + 4)) / four;
      return T(0);
    default:
      return T(0);
  }
}

/// exact: rectangular, rows = N + order, image carries no truncation error.
/// galerkin: square N x N, rows >= N dropped (P_N op P_N).
enum class MatrixForm { exact, galerkin };

BandMatrix d1_matrix(std::size_t n, MatrixForm form);
BandMatrix d2_matrix(std::size_t n, MatrixForm form);
BandMatrix d3_matrix(std::size_t n, MatrixForm form);
BandMatrix d4_matrix(std::size_t n, MatrixForm form);

/// Dispatches to d1..d4 by order.
BandMatrix derivative_matrix(int order, std::size_t n, MatrixForm form);

BandMatrix L_matrix(const OperatorParams& params, std::size_t n, MatrixForm form);

/// (A1, A2) = (-sigma d1, kappa d2).
std::pair<BandMatrix, BandMatrix> A_matrices(const OperatorParams& params, std::size_t n, MatrixForm form);

}  // namespace hspde
