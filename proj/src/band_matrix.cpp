#include "hspde/band_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hspde {

namespace {

bool row_in_range(std::size_t col, int offset, std::size_t rows) {
  const long long r = static_cast<long long>(col) + offset;
  return r >= 0 && r < static_cast<long long>(rows);
}

}  // namespace

BandMatrix::BandMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {}

std::vector<int> BandMatrix::offsets() const {
  std::vector<int> out;
  out.reserve(bands_.size());
  for (const auto& [d, _] : bands_) out.push_back(d);
  return out;
}

std::span<const double> BandMatrix::band(int offset) const {
  auto it = bands_.find(offset);
  if (it == bands_.end()) return {};
  return it->second;
}

std::vector<double>& BandMatrix::band_storage(int offset) {
  auto [it, inserted] = bands_.try_emplace(offset);
  if (inserted) it->second.assign(cols_, 0.0);
  return it->second;
}

double BandMatrix::at(std::size_t row, std::size_t col) const {
  if (row >= rows_ || col >= cols_) throw std::out_of_range("BandMatrix::at: index out of range");
  const int offset = static_cast<int>(static_cast<long long>(row) - static_cast<long long>(col));
  auto it = bands_.find(offset);
  return it == bands_.end() ? 0.0 : it->second[col];
}

void BandMatrix::add(int offset, std::size_t col, double v) {
  if (col >= cols_ || !row_in_range(col, offset, rows_)) {
    throw std::out_of_range("BandMatrix::add: entry outside the matrix");
  }
  band_storage(offset)[col] += v;
}

void BandMatrix::set(int offset, std::size_t col, double v) {
  if (col >= cols_ || !row_in_range(col, offset, rows_)) {
    throw std::out_of_range("BandMatrix::set: entry outside the matrix");
  }
  band_storage(offset)[col] = v;
}

std::vector<double> BandMatrix::apply(std::span<const double> x) const {
  if (x.size() != cols_) throw std::invalid_argument("BandMatrix::apply: vector length differs from cols");
  std::vector<double> y(rows_, 0.0);
  for (const auto& [d, values] : bands_) {
    const std::size_t lo = d < 0 ? static_cast<std::size_t>(-d) : 0;
    const long long hi_ll = std::min<long long>(static_cast<long long>(cols_), static_cast<long long>(rows_) - d);
    for (long long n = static_cast<long long>(lo); n < hi_ll; ++n) {
      y[static_cast<std::size_t>(n + d)] += values[static_cast<std::size_t>(n)] * x[static_cast<std::size_t>(n)];
    }
  }
  return y;
}

CoeffVec BandMatrix::apply(const CoeffVec& x) const {
  if (x.size() > cols_) throw std::invalid_argument("BandMatrix::apply: vector longer than cols");
  if (x.size() == cols_) return CoeffVec(apply(x.values()));
  return CoeffVec(apply(x.resized(cols_).values()));
}

std::vector<double> BandMatrix::apply_transpose(std::span<const double> y) const {
  if (y.size() != rows_) throw std::invalid_argument("BandMatrix::apply_transpose: vector length differs from rows");
  std::vector<double> x(cols_, 0.0);
  for (const auto& [d, values] : bands_) {
    const std::size_t lo = d < 0 ? static_cast<std::size_t>(-d) : 0;
    const long long hi_ll = std::min<long long>(static_cast<long long>(cols_), static_cast<long long>(rows_) - d);
    for (long long n = static_cast<long long>(lo); n < hi_ll; ++n) {
      x[static_cast<std::size_t>(n)] += values[static_cast<std::size_t>(n)] * y[static_cast<std::size_t>(n + d)];
    }
  }
  return x;
}

BandMatrix BandMatrix::truncated_rows(std::size_t n) const {
  if (n > rows_) throw std::invalid_argument("BandMatrix::truncated_rows: cannot grow rows");
  BandMatrix out(n, cols_);
  for (const auto& [d, values] : bands_) {
    std::vector<double> kept(cols_, 0.0);
    bool any = false;
    for (std::size_t c = 0; c < cols_; ++c) {
      if (row_in_range(c, d, n)) {
        kept[c] = values[c];
        any = any || values[c] != 0.0;
      }
    }
    if (any) out.bands_.emplace(d, std::move(kept));
  }
  return out;
}

BandMatrix BandMatrix::transposed() const {
  BandMatrix out(cols_, rows_);
  for (const auto& [d, values] : bands_) {
    for (std::size_t c = 0; c < cols_; ++c) {
      if (!row_in_range(c, d, rows_) || values[c] == 0.0) continue;
      const std::size_t r = static_cast<std::size_t>(static_cast<long long>(c) + d);
      out.add(-d, r, values[c]);
    }
  }
  return out;
}

BandMatrix BandMatrix::scaled(double s) const {
  BandMatrix out = *this;
  for (auto& [_, values] : out.bands_) {
    for (double& v : values) v *= s;
  }
  return out;
}

BandMatrix BandMatrix::pruned() const {
  BandMatrix out(rows_, cols_);
  for (const auto& [d, values] : bands_) {
    if (std::any_of(values.begin(), values.end(), [](double v) { return v != 0.0; })) out.bands_.emplace(d, values);
  }
  return out;
}

double BandMatrix::max_abs_entry() const {
  double m = 0.0;
  for (const auto& [_, values] : bands_) {
    for (double v : values) m = std::max(m, std::abs(v));
  }
  return m;
}

Eigen::MatrixXd BandMatrix::to_dense() const {
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
  for (const auto& [d, values] : bands_) {
    for (std::size_t c = 0; c < cols_; ++c) {
      if (row_in_range(c, d, rows_)) {
        dense(static_cast<Eigen::Index>(static_cast<long long>(c) + d), static_cast<Eigen::Index>(c)) = values[c];
      }
    }
  }
  return dense;
}

BandMatrix BandMatrix::identity(std::size_t n) {
  BandMatrix out(n, n);
  out.bands_.emplace(0, std::vector<double>(n, 1.0));
  return out;
}

BandMatrix operator+(const BandMatrix& a, const BandMatrix& b) {
  if (a.cols_ != b.cols_) throw std::invalid_argument("BandMatrix +: column counts differ");
  BandMatrix out(std::max(a.rows_, b.rows_), a.cols_);
  for (const auto* m : {&a, &b}) {
    for (const auto& [d, values] : m->bands_) {
      auto& dst = out.band_storage(d);
      for (std::size_t c = 0; c < values.size(); ++c) dst[c] += values[c];
    }
  }
  return out;
}

BandMatrix operator-(const BandMatrix& a, const BandMatrix& b) { return a + b.scaled(-1.0); }

BandMatrix compose(const BandMatrix& a, const BandMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("compose: inner dimensions differ");
  BandMatrix out(a.rows(), b.cols());
  for (const auto& [db, bvals] : b.bands()) {
    for (const auto& [da, avals] : a.bands()) {
      for (std::size_t j = 0; j < b.cols(); ++j) {
        if (bvals[j] == 0.0 || !row_in_range(j, db, b.rows())) continue;
        const std::size_t k = static_cast<std::size_t>(static_cast<long long>(j) + db);
        if (!row_in_range(k, da, a.rows())) continue;
        out.add(da + db, j, avals[k] * bvals[j]);
      }
    }
  }
  return out;
}

BandMatrix weighted_gram(const BandMatrix& a, const BandMatrix& b, std::span<const double> w) {
  if (a.rows() != b.rows()) throw std::invalid_argument("weighted_gram: row counts differ");
  if (w.size() < a.rows()) throw std::invalid_argument("weighted_gram: weights shorter than row count");
  BandMatrix out(a.cols(), b.cols());
  for (const auto& [db, bvals] : b.bands()) {
    for (const auto& [da, avals] : a.bands()) {
      for (std::size_t j = 0; j < b.cols(); ++j) {
        if (bvals[j] == 0.0 || !row_in_range(j, db, b.rows())) continue;
        const long long r = static_cast<long long>(j) + db;
        const long long i = r - da;
        if (i < 0 || i >= static_cast<long long>(a.cols())) continue;
        out.add(db - da, j, avals[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(r)] * bvals[j]);
      }
    }
  }
  return out;
}

}  // namespace hspde
