#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace hspde {

/// Truncated Hermite coefficient sequence (phi_0, ..., phi_{N-1}).
///
/// Reads through at() outside [0, N) return 0, so a CoeffVec behaves like
/// an element of S' whose tail is identically zero. All entries are finite;
/// the constructors enforce this.
class CoeffVec {
 public:
  CoeffVec() = default;
  explicit CoeffVec(std::size_t n) : coeffs_(n, 0.0) {}
  explicit CoeffVec(std::vector<double> coeffs);
  CoeffVec(std::initializer_list<double> coeffs) : CoeffVec(std::vector<double>(coeffs)) {}

  /// Unit vector e_k of length n.
  static CoeffVec unit(std::size_t n, std::size_t k);

  std::size_t size() const noexcept { return coeffs_.size(); }
  bool empty() const noexcept { return coeffs_.empty(); }

  double at(long long n) const noexcept {
    return (n < 0 || n >= static_cast<long long>(coeffs_.size())) ? 0.0 : coeffs_[static_cast<std::size_t>(n)];
  }
  double& operator[](std::size_t i) { return coeffs_[i]; }
  double operator[](std::size_t i) const { return coeffs_[i]; }

  std::span<const double> values() const noexcept { return coeffs_; }
  std::span<double> values() noexcept { return coeffs_; }
  const std::vector<double>& vector() const noexcept { return coeffs_; }

  /// Copy truncated or zero-padded to length n.
  CoeffVec resized(std::size_t n) const;

  bool all_finite() const noexcept;

  friend bool operator==(const CoeffVec&, const CoeffVec&) = default;

 private:
  std::vector<double> coeffs_;
};

/// w_k = (2k+1)^{2p}, k = 0..count-1.
class SobolevWeights {
 public:
  SobolevWeights(double p, std::size_t count);

  double p() const noexcept { return p_; }
  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t k) const { return weights_[k]; }
  std::span<const double> values() const noexcept { return weights_; }

 private:
  double p_;
  std::vector<double> weights_;
};

/// Gauss-Hermite rule for the weight exp(-x^2).
///
/// `scaled_weights[j] = weights[j] * exp(nodes[j]^2)` is stored separately:
/// it stays O(1) while `weights` underflows to 0 for the outermost nodes of
/// large rules (count above roughly 700).
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<double> scaled_weights;

  std::size_t count() const noexcept { return nodes.size(); }
};

inline constexpr long long kMaxHermiteDegree = 1'000'000;
inline constexpr std::size_t kMaxQuadratureNodes = 1024;

/// h_k(t) by the normalized three-term recurrence. Intermediate values are
/// rescaled so that large |t| neither underflows the Gaussian factor nor
/// overflows the polynomial part.
double hermite_eval(long long k, double t);

/// h_0(t), ..., h_{n-1}(t) in one recurrence sweep.
std::vector<double> hermite_values(std::size_t n, double t);

QuadratureRule gauss_hermite_rule(std::size_t count);

/// coeffs[k] = sum_j scaled_weights[j] * f(x_j) * h_k(x_j).
///
/// The caller is responsible for f decaying fast enough that
/// f(x) * exp(x^2 / 2) stays bounded on the node range. Throws
/// NumericalError if f returns a non-finite value at a node.
CoeffVec project(const std::function<double(double)>& f, std::size_t n, const QuadratureRule& rule);

/// sum_k w_k u_k v_k; the shorter vector is zero padded.
double inner_p(const CoeffVec& u, const CoeffVec& v, const SobolevWeights& w);
double inner_p(const CoeffVec& u, const CoeffVec& v, double p);

double norm_p(const CoeffVec& u, const SobolevWeights& w);
double norm_p(const CoeffVec& u, double p);

/// U_m: h_n -> h_{n-m}; output[k] = u[k+m].
CoeffVec shift_U(std::size_t m, const CoeffVec& u);

}  // namespace hspde
