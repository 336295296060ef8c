#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hspde/band_matrix.hpp"
#include "hspde/hermite.hpp"
#include "hspde/operators.hpp"

namespace hspde {

/// The four auxiliary functions of the ratio (2 + a z)/(2 + z) raised to 2p:
///   f1 = r_{-3} + r_5 - 2,  f2 = 2 r_5 - 1 - r_9,
///   f3 = -r_{-3} + 3 r_5 - 2,  f4 = r_5 - 1.
/// Evaluated as expm1(2p log1p(...)) so the O(z) and O(z^2) cancellations
/// keep their relative accuracy for small z.
struct FValues {
  double f1 = 0.0;
  double f2 = 0.0;
  double f3 = 0.0;
  double f4 = 0.0;
};

/// Requires 0 < z <= 1/2.
FValues f_functions(double z, double p);

/// Leading coefficient g_j(0) of f_j(z) = z^2 g_j(z) (j = 1, 2) or
/// f_j(z) = z g_j(z) (j = 3, 4), by Richardson extrapolation of
/// f_j(z)/z^m over z = 1/8, 1/16, ... Throws NumericalError when the
/// extrapolation table does not settle to 1e-8 relative (with an absolute
/// floor of 1e-12 |p|, so identically vanishing f_j return ~0).
double g_at_zero(int j, double p);

/// Diagonal (a), second (b) and fourth (c) off-diagonal coefficients of
/// the bilaplacian form written as
///   sum_l (2l+1)^{2p} u_l (a_l u_l + b_l u_{l+2} + c_l u_{l+4}).
struct ABCSequences {
  double p = 0.0;
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> c;

  std::size_t size() const noexcept { return a.size(); }
};

ABCSequences abc_sequences(double p, std::size_t n);

/// -<u, d^4 u>_p + |d^2 u|_p^2 with the exact rectangular images.
/// Accumulated in extended precision: the O(l^2) terms cancel down to
/// O(1), so double rounding of the weights alone would cost ~N^2 ulps.
double bilap_form(const CoeffVec& u, double p);

/// Requires seqs.size() >= u.size().
double abc_form(const CoeffVec& u, const ABCSequences& seqs);

/// 2 <u, L u>_p + |A1 u|_p^2 + |A2 u|_p^2.
double LA_form(const CoeffVec& u, const OperatorParams& params, double p);

/// Symmetric N x N matrix Q with bilap_form(u, p) = u^T Q u for length-N u.
BandMatrix bilap_form_matrix(double p, std::size_t n);
/// Same for LA_form.
BandMatrix LA_form_matrix(const OperatorParams& params, double p, std::size_t n);
/// D^{-1} Q D^{-1} with D = diag((2l+1)^p): the form in coordinates where
/// |u|_p is the Euclidean norm.
BandMatrix rescale_to_unit_norm(const BandMatrix& q, double p);

struct EigenPair {
  double value = 0.0;
  std::vector<double> vector;
  std::size_t iterations = 0;
  double residual = 0.0;
};

inline constexpr double kPowerIterationTol = 1e-10;
inline constexpr std::size_t kPowerIterationMaxIter = 500'000;

/// Largest eigenvalue of a symmetric band matrix by power iteration on
/// Q + s I, with s the Gershgorin lower bound shift that makes Q + s I
/// positive semidefinite. Starts from the normalized all-ones vector.
/// Stops when |Q x - lambda x| <= tol * max(1, |lambda|); throws
/// NumericalError with the last residual after max_iter iterations.
EigenPair max_eigenpair(const BandMatrix& symmetric, double tol = kPowerIterationTol,
                        std::size_t max_iter = kPowerIterationMaxIter);

enum class FormKind { bilaplacian, LA };

struct MonotonicityReport {
  double p = 0.0;
  FormKind form = FormKind::bilaplacian;
  std::optional<OperatorParams> params;
  std::size_t N = 0;
  double tol = 0.0;
  /// Form values at the maximizing unit-|.|_p vector of the largest N.
  double form_bilap = 0.0;
  std::optional<double> form_LA;
  double C_estimate = 0.0;
  std::vector<std::pair<std::size_t, double>> N_sweep;
  bool converged = false;
  CoeffVec maximizer;
  std::size_t power_iterations = 0;
};

/// Sharp finite-N constant C_N = lambda_max of the rescaled form matrix for
/// N = 16, 32, ... up to N_max (N_max itself is appended if the doubling
/// misses it). params == nullopt selects the bilaplacian form.
MonotonicityReport estimate_constant(double p, const std::optional<OperatorParams>& params, std::size_t N_max,
                                     double tol);

/// |bilap_form - abc_form| / (1 + |bilap_form|).
double identity_gap(const CoeffVec& u, double p);

const char* to_string(FormKind kind);

}  // namespace hspde
