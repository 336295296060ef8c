#include "hspde/operators.hpp"

#include <cmath>
#include <stdexcept>

namespace hspde {

namespace {

void require_size(std::size_t n) {
  if (n == 0) throw std::invalid_argument("derivative matrix: N must be at least 1");
}

BandMatrix finish(BandMatrix exact, std::size_t n, MatrixForm form) {
  if (form == MatrixForm::galerkin) return exact.truncated_rows(n);
  return exact;
}

// Sets entry (col + offset, col) when the row index is nonnegative.
void put(BandMatrix& m, int offset, std::size_t col, double v) {
  if (static_cast<long long>(col) + offset < 0) return;
  m.set(offset, col, v);
}

}  // namespace

void OperatorParams::validate() const {
  if (!std::isfinite(kappa) || !std::isfinite(sigma) || !std::isfinite(b)) {
    throw std::invalid_argument("OperatorParams: kappa, sigma, b must be finite");
  }
}

BandMatrix d1_matrix(std::size_t n, MatrixForm form) { return derivative_matrix(1, n, form); }
BandMatrix d2_matrix(std::size_t n, MatrixForm form) { return derivative_matrix(2, n, form); }
BandMatrix d3_matrix(std::size_t n, MatrixForm form) { return derivative_matrix(3, n, form); }
BandMatrix d4_matrix(std::size_t n, MatrixForm form) { return derivative_matrix(4, n, form); }

BandMatrix derivative_matrix(int order, std::size_t n, MatrixForm form) {
  if (order < 1 || order > 4) throw std::invalid_argument("derivative_matrix: order must be 1..4");
  require_size(n);
  BandMatrix m(n + static_cast<std::size_t>(order), n);
  // Offsets run over -order, -order + 2, ..., order.
  for (int offset = -order; offset <= order; offset += 2) {
    for (std::size_t c = 0; c < n; ++c) put(m, offset, c, derivative_entry<double>(order, offset, c));
  }
  return finish(std::move(m), n, form);
}

BandMatrix L_matrix(const OperatorParams& params, std::size_t n, MatrixForm form) {
  params.validate();
  const double c4 = -params.kappa * params.kappa / 2.0;
  const double c2 = params.sigma * params.sigma / 2.0;
  const double c1 = -params.b;
  return d4_matrix(n, form).scaled(c4) + d2_matrix(n, form).scaled(c2) + d1_matrix(n, form).scaled(c1);
}

std::pair<BandMatrix, BandMatrix> A_matrices(const OperatorParams& params, std::size_t n, MatrixForm form) {
  params.validate();
  return {d1_matrix(n, form).scaled(-params.sigma), d2_matrix(n, form).scaled(params.kappa)};
}

}  // namespace hspde
