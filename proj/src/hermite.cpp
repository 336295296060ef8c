#include "hspde/hermite.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "hspde/errors.hpp"

namespace hspde {

namespace {

constexpr double kRescaleThreshold = 1e150;
const double kLogRescale = std::log(kRescaleThreshold);

// pi^{-1/4}
const double kH0 = std::pow(std::numbers::pi, -0.25);

// Recurrence state: true value = mantissa * exp(log_scale).
struct ScaledPair {
  double current;   // h_k mantissa
  double previous;  // h_{k-1} mantissa
  double log_scale;
};

double unscale(double mantissa, double log_scale) {
  if (mantissa == 0.0) return 0.0;
  const double magnitude = std::exp(log_scale + std::log(std::abs(mantissa)));
  return std::copysign(magnitude, mantissa);
}

void advance(ScaledPair& s, long long m, double t) {
  // h_{m+1} = t sqrt(2/(m+1)) h_m - sqrt(m/(m+1)) h_{m-1}
  const double md = static_cast<double>(m);
  const double next = t * std::sqrt(2.0 / (md + 1.0)) * s.current - std::sqrt(md / (md + 1.0)) * s.previous;
  s.previous = s.current;
  s.current = next;
  if (std::abs(s.current) > kRescaleThreshold) {
    s.current /= kRescaleThreshold;
    s.previous /= kRescaleThreshold;
    s.log_scale += kLogRescale;
  }
}

ScaledPair run_recurrence(long long k, double t) {
  ScaledPair s{kH0, 0.0, -0.5 * t * t};
  for (long long m = 0; m < k; ++m) advance(s, m, t);
  return s;
}

void check_degree(long long k) {
  if (k < 0) throw std::invalid_argument("hermite_eval: degree must be nonnegative");
  if (k > kMaxHermiteDegree) {
    std::ostringstream os;
    os << "hermite_eval: degree " << k << " exceeds cap " << kMaxHermiteDegree;
    throw std::out_of_range(os.str());
  }
}

}  // namespace

CoeffVec::CoeffVec(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    if (!std::isfinite(coeffs_[i])) {
      std::ostringstream os;
      os << "CoeffVec: non-finite coefficient at index " << i;
      throw std::invalid_argument(os.str());
    }
  }
}

CoeffVec CoeffVec::unit(std::size_t n, std::size_t k) {
  if (k >= n) throw std::out_of_range("CoeffVec::unit: index beyond length");
  CoeffVec e(n);
  e.coeffs_[k] = 1.0;
  return e;
}

CoeffVec CoeffVec::resized(std::size_t n) const {
  CoeffVec out(n);
  std::copy_n(coeffs_.begin(), std::min(n, coeffs_.size()), out.coeffs_.begin());
  return out;
}

bool CoeffVec::all_finite() const noexcept {
  return std::all_of(coeffs_.begin(), coeffs_.end(), [](double x) { return std::isfinite(x); });
}

SobolevWeights::SobolevWeights(double p, std::size_t count) : p_(p), weights_(count) {
  if (!std::isfinite(p)) throw std::invalid_argument("SobolevWeights: p must be finite");
  for (std::size_t k = 0; k < count; ++k) {
    weights_[k] = std::exp(2.0 * p * std::log(2.0 * static_cast<double>(k) + 1.0));
  }
}

double hermite_eval(long long k, double t) {
  check_degree(k);
  if (!std::isfinite(t)) throw std::invalid_argument("hermite_eval: argument must be finite");
  const ScaledPair s = run_recurrence(k, t);
  return unscale(s.current, s.log_scale);
}

std::vector<double> hermite_values(std::size_t n, double t) {
  if (n > 0) check_degree(static_cast<long long>(n) - 1);
  if (!std::isfinite(t)) throw std::invalid_argument("hermite_values: argument must be finite");
  std::vector<double> out(n);
  ScaledPair s{kH0, 0.0, -0.5 * t * t};
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = unscale(s.current, s.log_scale);
    advance(s, static_cast<long long>(k), t);
  }
  return out;
}

QuadratureRule gauss_hermite_rule(std::size_t count) {
  if (count == 0) throw std::invalid_argument("gauss_hermite_rule: count must be positive");
  if (count > kMaxQuadratureNodes) {
    std::ostringstream os;
    os << "gauss_hermite_rule: count " << count << " exceeds cap " << kMaxQuadratureNodes;
    throw std::out_of_range(os.str());
  }
  const auto n = static_cast<Eigen::Index>(count);
  const double nd = static_cast<double>(count);

  // Golub-Welsch: nodes are eigenvalues of the Jacobi matrix with
  // off-diagonal sqrt(k/2); then polish each root with Newton on the
  // polynomial part, h_n'/h_n ratio via q_n' = sqrt(2n) q_{n-1}.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(std::max<Eigen::Index>(n - 1, 0));
  for (Eigen::Index k = 1; k < n; ++k) sub[k - 1] = std::sqrt(static_cast<double>(k) / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("gauss_hermite_rule: eigenvalue solve failed");

  std::vector<double> positive;
  for (Eigen::Index i = 0; i < n; ++i) {
    double x = solver.eigenvalues()[i];
    if (x <= 0.0) continue;
    for (int it = 0; it < 8; ++it) {
      const ScaledPair s = run_recurrence(static_cast<long long>(count), x);
      const double step = s.current / (std::sqrt(2.0 * nd) * s.previous);
      x -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    positive.push_back(x);
  }
  std::sort(positive.begin(), positive.end());
  if (positive.size() != count / 2) throw NumericalError("gauss_hermite_rule: lost root symmetry");

  QuadratureRule rule;
  rule.nodes.reserve(count);
  for (auto it = positive.rbegin(); it != positive.rend(); ++it) rule.nodes.push_back(-*it);
  if (count % 2 == 1) rule.nodes.push_back(0.0);
  rule.nodes.insert(rule.nodes.end(), positive.begin(), positive.end());

  rule.weights.resize(count);
  rule.scaled_weights.resize(count);
  for (std::size_t j = 0; j < count; ++j) {
    const double x = rule.nodes[j];
    // lambda_j exp(x_j^2) = 1 / (n h_{n-1}(x_j)^2)
    const ScaledPair s = run_recurrence(static_cast<long long>(count) - 1, x);
    const double log_scaled = -2.0 * s.log_scale - std::log(nd) - 2.0 * std::log(std::abs(s.current));
    rule.scaled_weights[j] = std::exp(log_scaled);
    rule.weights[j] = std::exp(log_scaled - x * x);
  }
  return rule;
}

CoeffVec project(const std::function<double(double)>& f, std::size_t n, const QuadratureRule& rule) {
  std::vector<double> coeffs(n, 0.0);
  for (std::size_t j = 0; j < rule.count(); ++j) {
    const double x = rule.nodes[j];
    const double fx = f(x);
    if (!std::isfinite(fx)) {
      std::ostringstream os;
      os << "project: non-finite integrand at node " << j << " (x = " << x << ")";
      throw NumericalError(os.str());
    }
    if (fx == 0.0) continue;
    const double scale = rule.scaled_weights[j] * fx;
    const std::vector<double> h = hermite_values(n, x);
    for (std::size_t k = 0; k < n; ++k) coeffs[k] += scale * h[k];
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(coeffs[k])) {
      std::ostringstream os;
      os << "project: non-finite coefficient " << k << "; integrand does not decay fast enough";
      throw NumericalError(os.str());
    }
  }
  return CoeffVec(std::move(coeffs));
}

double inner_p(const CoeffVec& u, const CoeffVec& v, const SobolevWeights& w) {
  const std::size_t n = std::min(u.size(), v.size());
  if (w.size() < std::max(u.size(), v.size())) {
    throw std::invalid_argument("inner_p: weights shorter than the longer operand");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += w[k] * u[k] * v[k];
  return acc;
}

double inner_p(const CoeffVec& u, const CoeffVec& v, double p) {
  return inner_p(u, v, SobolevWeights(p, std::max(u.size(), v.size())));
}

double norm_p(const CoeffVec& u, const SobolevWeights& w) { return std::sqrt(inner_p(u, u, w)); }

double norm_p(const CoeffVec& u, double p) { return norm_p(u, SobolevWeights(p, u.size())); }

CoeffVec shift_U(std::size_t m, const CoeffVec& u) {
  CoeffVec out(u.size());
  for (std::size_t k = 0; k + m < u.size(); ++k) out[k] = u[k + m];
  return out;
}

}  // namespace hspde
