#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hspde/hermite.hpp"

namespace hspde {

/// Real matrix stored as a set of diagonals.
///
/// Offset d holds the entries (n + d, n), indexed by column n, so
/// band(d)[n] multiplies x[n] and lands in row n + d. Each stored band has
/// length cols(); slots whose row falls outside [0, rows) are kept at zero.
/// The derivative operators only use offsets in [-4, 4]; products and Gram
/// matrices may carry wider offsets.
class BandMatrix {
 public:
  BandMatrix() = default;
  BandMatrix(std::size_t rows, std::size_t cols);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_square() const noexcept { return rows_ == cols_; }

  std::vector<int> offsets() const;
  bool has_band(int offset) const { return bands_.contains(offset); }
  /// Band values by column; empty span when the offset is not stored.
  std::span<const double> band(int offset) const;
  const std::map<int, std::vector<double>>& bands() const noexcept { return bands_; }

  /// Entry (row, col); zero outside the stored bands.
  double at(std::size_t row, std::size_t col) const;
  /// Adds v to entry (col + offset, col). Row must be in range.
  void add(int offset, std::size_t col, double v);
  void set(int offset, std::size_t col, double v);

  std::vector<double> apply(std::span<const double> x) const;
  CoeffVec apply(const CoeffVec& x) const;
  /// Transposed product A^T y.
  std::vector<double> apply_transpose(std::span<const double> y) const;

  /// Drops rows >= n (Galerkin projection of the image).
  BandMatrix truncated_rows(std::size_t n) const;
  BandMatrix transposed() const;
  BandMatrix scaled(double s) const;
  /// Removes bands that are identically zero.
  BandMatrix pruned() const;

  double max_abs_entry() const;
  Eigen::MatrixXd to_dense() const;

  static BandMatrix identity(std::size_t n);

  friend BandMatrix operator+(const BandMatrix& a, const BandMatrix& b);
  friend BandMatrix operator-(const BandMatrix& a, const BandMatrix& b);
  friend BandMatrix operator*(double s, const BandMatrix& a) { return a.scaled(s); }
  friend bool operator==(const BandMatrix&, const BandMatrix&) = default;

 private:
  std::vector<double>& band_storage(int offset);

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::map<int, std::vector<double>> bands_;
};

/// Exact banded product a * b. Requires a.cols() == b.rows().
BandMatrix compose(const BandMatrix& a, const BandMatrix& b);

/// a^T diag(w) b, with w indexed by the shared row space.
BandMatrix weighted_gram(const BandMatrix& a, const BandMatrix& b, std::span<const double> w);

}  // namespace hspde
