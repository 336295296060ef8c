#include "hspde/monotonicity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hspde/errors.hpp"

namespace hspde {

namespace {

using ld = long double;

// r^{2p} - 1 for r = 1 + x, x > -1.
ld ratio_power_minus_one(ld x, ld p) { return std::expm1(2.0L * p * std::log1p(x)); }

// ((2 + alpha z)/(2 + z))^{2p} - 1
ld e_of_z(int alpha, ld z, ld p) { return ratio_power_minus_one((alpha - 1) * z / (2.0L + z), p); }

// ((2l + alpha)/(2l + 1))^{2p} - 1
ld e_of_l(int alpha, std::size_t l, ld p) {
  return ratio_power_minus_one(static_cast<ld>(alpha - 1) / (2.0L * static_cast<ld>(l) + 1.0L), p);
}

std::vector<ld> weights_ld(double p, std::size_t count) {
  std::vector<ld> w(count);
  for (std::size_t k = 0; k < count; ++k) w[k] = std::exp(2.0L * p * std::log(2.0L * static_cast<ld>(k) + 1.0L));
  return w;
}

// Exact image d^order u, length u.size() + order.
std::vector<ld> exact_image(int order, const CoeffVec& u) {
  std::vector<ld> y(u.size() + static_cast<std::size_t>(order), 0.0L);
  for (std::size_t c = 0; c < u.size(); ++c) {
    if (u[c] == 0.0) continue;
    for (int offset = -order; offset <= order; offset += 2) {
      const long long r = static_cast<long long>(c) + offset;
      if (r < 0) continue;
      y[static_cast<std::size_t>(r)] += derivative_entry<ld>(order, offset, c) * static_cast<ld>(u[c]);
    }
  }
  return y;
}

ld weighted_dot(const std::vector<ld>& w, const CoeffVec& u, const std::vector<ld>& y) {
  ld acc = 0.0L;
  for (std::size_t i = 0; i < u.size(); ++i) acc += w[i] * static_cast<ld>(u[i]) * y[i];
  return acc;
}

ld weighted_square(const std::vector<ld>& w, const std::vector<ld>& y) {
  ld acc = 0.0L;
  for (std::size_t i = 0; i < y.size(); ++i) acc += w[i] * y[i] * y[i];
  return acc;
}

BandMatrix symmetric_part(const BandMatrix& m) { return (m + m.transposed()).scaled(0.5); }

// diag(w) M restricted to the first n rows: the matrix of u -> <u, M u>_p.
BandMatrix weighted_rows(const BandMatrix& galerkin, const SobolevWeights& w) {
  return weighted_gram(BandMatrix::identity(galerkin.rows()), galerkin, w.values());
}

}  // namespace

const char* to_string(FormKind kind) { return kind == FormKind::bilaplacian ? "bilaplacian" : "LA"; }

FValues f_functions(double z, double p) {
  if (!(z > 0.0 && z <= 0.5)) {
    std::ostringstream os;
    os << "f_functions: z = " << z << " outside (0, 1/2]";
    throw std::invalid_argument(os.str());
  }
  const ld zl = z;
  const ld pl = p;
  const ld em3 = e_of_z(-3, zl, pl);
  const ld e5 = e_of_z(5, zl, pl);
  const ld e9 = e_of_z(9, zl, pl);
  return FValues{static_cast<double>(em3 + e5), static_cast<double>(2.0L * e5 - e9),
                 static_cast<double>(-em3 + 3.0L * e5), static_cast<double>(e5)};
}

double g_at_zero(int j, double p) {
  if (j < 1 || j > 4) throw std::invalid_argument("g_at_zero: j must be in 1..4");
  if (!std::isfinite(p)) throw std::invalid_argument("g_at_zero: p must be finite");
  if (p == 0.0) return 0.0;

  const int power = j <= 2 ? 2 : 1;
  auto quotient = [&](ld z) {
    const ld em3 = e_of_z(-3, z, p);
    const ld e5 = e_of_z(5, z, p);
    const ld e9 = e_of_z(9, z, p);
    ld f = 0.0L;
    switch (j) {
      case 1: f = em3 + e5; break;
      case 2: f = 2.0L * e5 - e9; break;
      case 3: f = -em3 + 3.0L * e5; break;
      default: f = e5; break;
    }
    return power == 2 ? f / (z * z) : f / z;
  };

  constexpr int kLevels = 14;
  std::vector<std::vector<ld>> table(kLevels);
  ld z = 0.125L;
  ld previous = 0.0L;
  for (int i = 0; i < kLevels; ++i, z /= 2.0L) {
    table[i].resize(static_cast<std::size_t>(i) + 1);
    table[i][0] = quotient(z);
    ld factor = 1.0L;
    for (int k = 1; k <= i; ++k) {
      factor *= 2.0L;
      table[i][k] = (factor * table[i][k - 1] - table[i - 1][k - 1]) / (factor - 1.0L);
    }
    const ld current = table[i][i];
    // |p| sets the scale of g_j(0); the floor lets an exact zero settle
    // (f_1 and f_2 vanish identically at p = 1/2).
    const ld floor = 1e-8L * std::max(std::abs(current), static_cast<ld>(std::abs(p)) * 1e-4L);
    if (i >= 3 && std::abs(current - previous) <= floor) return static_cast<double>(current);
    previous = current;
  }
  std::ostringstream os;
  os << "g_at_zero: Richardson extrapolation for j = " << j << ", p = " << p << " did not stabilize";
  throw NumericalError(os.str());
}

ABCSequences abc_sequences(double p, std::size_t n) {
  if (!std::isfinite(p)) throw std::invalid_argument("abc_sequences: p must be finite");
  if (n == 0) throw std::invalid_argument("abc_sequences: length must be >= 1");
  ABCSequences s;
  s.p = p;
  s.a.resize(n);
  s.b.resize(n);
  s.c.resize(n);
  for (std::size_t l = 0; l < n; ++l) {
    const ld ll = static_cast<ld>(l);
    // For l in {0, 1} the ((2l-3)/(2l+1))^{2p} term is zero, i.e. r - 1 = -1.
    const ld em3 = l >= 2 ? e_of_l(-3, l, p) : -1.0L;
    const ld e5 = e_of_l(5, l, p);
    const ld e9 = e_of_l(9, l, p);
    const ld a = ll * ll / 4.0L * (em3 + e5) + ll / 4.0L * (-em3 + 3.0L * e5) + 0.5L * e5;
    const ld b = -std::sqrt((ll + 1.0L) * (ll + 2.0L)) * e5;
    const ld c = std::sqrt((ll + 1.0L) * (ll + 2.0L) * (ll + 3.0L) * (ll + 4.0L)) / 4.0L * (2.0L * e5 - e9);
    s.a[l] = static_cast<double>(a);
    s.b[l] = static_cast<double>(b);
    s.c[l] = static_cast<double>(c);
  }
  return s;
}

double bilap_form(const CoeffVec& u, double p) {
  const auto w = weights_ld(p, u.size() + 4);
  const auto y4 = exact_image(4, u);
  const auto y2 = exact_image(2, u);
  return static_cast<double>(-weighted_dot(w, u, y4) + weighted_square(w, y2));
}

double abc_form(const CoeffVec& u, const ABCSequences& seqs) {
  if (seqs.size() < u.size()) throw std::invalid_argument("abc_form: sequences shorter than the vector");
  const auto w = weights_ld(seqs.p, u.size());
  ld acc = 0.0L;
  for (std::size_t l = 0; l < u.size(); ++l) {
    const auto li = static_cast<long long>(l);
    const ld inner = static_cast<ld>(seqs.a[l]) * u[l] + static_cast<ld>(seqs.b[l]) * u.at(li + 2) +
                     static_cast<ld>(seqs.c[l]) * u.at(li + 4);
    acc += w[l] * static_cast<ld>(u[l]) * inner;
  }
  return static_cast<double>(acc);
}

double LA_form(const CoeffVec& u, const OperatorParams& params, double p) {
  params.validate();
  const auto w = weights_ld(p, u.size() + 4);
  const auto y1 = exact_image(1, u);
  const auto y2 = exact_image(2, u);
  const auto y4 = exact_image(4, u);
  const ld kappa = params.kappa;
  const ld sigma = params.sigma;
  const ld b = params.b;
  // <u, L u>_p with L = -kappa^2/2 d4 + sigma^2/2 d2 - b d1
  const ld drift = -kappa * kappa / 2.0L * weighted_dot(w, u, y4) + sigma * sigma / 2.0L * weighted_dot(w, u, y2) -
                   b * weighted_dot(w, u, y1);
  const ld noise = sigma * sigma * weighted_square(w, y1) + kappa * kappa * weighted_square(w, y2);
  return static_cast<double>(2.0L * drift + noise);
}

BandMatrix bilap_form_matrix(double p, std::size_t n) {
  // Assembled from the collected sequences rather than from d4 and d2: the
  // O(l^2) cancellation is already done there, and p = 0 gives exact zeros.
  const SobolevWeights w(p, n);
  const ABCSequences seqs = abc_sequences(p, n);
  BandMatrix q(n, n);
  for (std::size_t l = 0; l < n; ++l) {
    q.add(0, l, w[l] * seqs.a[l]);
    if (l + 2 < n) {
      q.add(2, l, 0.5 * w[l] * seqs.b[l]);
      q.add(-2, l + 2, 0.5 * w[l] * seqs.b[l]);
    }
    if (l + 4 < n) {
      q.add(4, l, 0.5 * w[l] * seqs.c[l]);
      q.add(-4, l + 4, 0.5 * w[l] * seqs.c[l]);
    }
  }
  return q.pruned();
}

BandMatrix LA_form_matrix(const OperatorParams& params, double p, std::size_t n) {
  params.validate();
  const SobolevWeights w(p, n + 4);
  const BandMatrix l_gal = L_matrix(params, n, MatrixForm::galerkin);
  const auto [a1, a2] = A_matrices(params, n, MatrixForm::exact);
  const BandMatrix drift = symmetric_part(weighted_rows(l_gal, w)).scaled(2.0);
  return (drift + weighted_gram(a1, a1, w.values()) + weighted_gram(a2, a2, w.values())).pruned();
}

BandMatrix rescale_to_unit_norm(const BandMatrix& q, double p) {
  if (!q.is_square()) throw std::invalid_argument("rescale_to_unit_norm: matrix must be square");
  std::vector<double> inv_scale(q.rows());
  for (std::size_t l = 0; l < q.rows(); ++l) inv_scale[l] = std::exp(-p * std::log(2.0 * static_cast<double>(l) + 1.0));
  BandMatrix out(q.rows(), q.cols());
  for (const auto& [d, values] : q.bands()) {
    for (std::size_t c = 0; c < q.cols(); ++c) {
      const long long r = static_cast<long long>(c) + d;
      if (r < 0 || r >= static_cast<long long>(q.rows()) || values[c] == 0.0) continue;
      out.add(d, c, values[c] * inv_scale[static_cast<std::size_t>(r)] * inv_scale[c]);
    }
  }
  return out;
}

EigenPair max_eigenpair(const BandMatrix& symmetric, double tol, std::size_t max_iter) {
  if (!symmetric.is_square()) throw std::invalid_argument("max_eigenpair: matrix must be square");
  const std::size_t n = symmetric.rows();
  if (n == 0) throw std::invalid_argument("max_eigenpair: empty matrix");

  // Gershgorin lower bound on the spectrum.
  std::vector<double> diag(n, 0.0);
  std::vector<double> radius(n, 0.0);
  for (const auto& [d, values] : symmetric.bands()) {
    for (std::size_t c = 0; c < n; ++c) {
      const long long r = static_cast<long long>(c) + d;
      if (r < 0 || r >= static_cast<long long>(n)) continue;
      if (d == 0) {
        diag[c] = values[c];
      } else {
        radius[static_cast<std::size_t>(r)] += std::abs(values[c]);
      }
    }
  }
  double lower = diag[0] - radius[0];
  for (std::size_t i = 1; i < n; ++i) lower = std::min(lower, diag[i] - radius[i]);
  const double shift = std::max(0.0, -lower);

  std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n)));
  EigenPair result;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    std::vector<double> y = symmetric.apply(x);
    double rayleigh = 0.0;
    for (std::size_t i = 0; i < n; ++i) rayleigh += x[i] * y[i];
    double res2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - rayleigh * x[i];
      res2 += r * r;
    }
    result.value = rayleigh;
    result.residual = std::sqrt(res2);
    result.iterations = it;
    result.vector = x;
    if (!std::isfinite(rayleigh)) throw NumericalError("max_eigenpair: non-finite Rayleigh quotient");
    if (result.residual <= tol * std::max(1.0, std::abs(rayleigh))) return result;

    double norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] += shift * x[i];
      norm2 += y[i] * y[i];
    }
    const double norm = std::sqrt(norm2);
    if (norm == 0.0) return result;
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / norm;
  }
  std::ostringstream os;
  os << "max_eigenpair: no convergence after " << max_iter << " iterations, residual " << result.residual;
  throw NumericalError(os.str());
}

MonotonicityReport estimate_constant(double p, const std::optional<OperatorParams>& params, std::size_t N_max,
                                     double tol) {
  if (N_max < 16) throw std::invalid_argument("estimate_constant: N_max must be at least 16");
  if (!(tol > 0.0)) throw std::invalid_argument("estimate_constant: tol must be positive");
  if (!std::isfinite(p)) throw std::invalid_argument("estimate_constant: p must be finite");

  std::vector<std::size_t> sizes;
  for (std::size_t n = 16; n <= N_max; n *= 2) sizes.push_back(n);
  if (sizes.back() != N_max) sizes.push_back(N_max);

  MonotonicityReport report;
  report.p = p;
  report.form = params ? FormKind::LA : FormKind::bilaplacian;
  report.params = params;
  report.tol = tol;

  EigenPair top;
  for (std::size_t n : sizes) {
    const BandMatrix q = params ? LA_form_matrix(*params, p, n) : bilap_form_matrix(p, n);
    top = max_eigenpair(rescale_to_unit_norm(q, p));
    report.N_sweep.emplace_back(n, top.value);
    report.power_iterations += top.iterations;
  }

  report.N = sizes.back();
  report.C_estimate = report.N_sweep.back().second;
  if (report.N_sweep.size() >= 2) {
    const double prev = report.N_sweep[report.N_sweep.size() - 2].second;
    report.converged = std::abs(report.C_estimate - prev) <= tol * std::max(1.0, std::abs(prev));
  }

  std::vector<double> u(report.N);
  for (std::size_t l = 0; l < report.N; ++l) {
    u[l] = top.vector[l] * std::exp(-p * std::log(2.0 * static_cast<double>(l) + 1.0));
  }
  report.maximizer = CoeffVec(std::move(u));
  report.form_bilap = bilap_form(report.maximizer, p);
  if (params) report.form_LA = LA_form(report.maximizer, *params, p);
  return report;
}

double identity_gap(const CoeffVec& u, double p) {
  const double direct = bilap_form(u, p);
  const double collected = abc_form(u, abc_sequences(p, u.size() + 4));
  return std::abs(direct - collected) / (1.0 + std::abs(direct));
}

}  // namespace hspde
