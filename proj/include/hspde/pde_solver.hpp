#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hspde/hermite.hpp"
#include "hspde/linear_solve.hpp"
#include "hspde/operators.hpp"

namespace hspde {

enum class TimeMethod { matrix_exponential, crank_nicolson, implicit_euler };

const char* to_string(TimeMethod method);
TimeMethod time_method_from_string(const std::string& name);

/// Largest N for dense matrix work (exponentials, dense fallbacks).
inline constexpr std::size_t kDenseCap = 512;

/// exp(t M) by scaling and squaring around a degree-13 Pade approximant.
/// Throws NumericalError when the result overflows; shorten t in that case.
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& m, double t);

/// 0, dt, 2 dt, ..., T. Requires T / dt to be an integer within 1e-9.
std::vector<double> uniform_grid(double T, double dt);

/// Galerkin trajectory of du/dt = L u on a time grid.
struct PdeRun {
  OperatorParams params;
  double p = 0.0;
  std::size_t N = 0;
  std::vector<double> t_grid;
  std::vector<CoeffVec> states;
  TimeMethod method = TimeMethod::matrix_exponential;
  /// |u_{t_k} - Psi - trapezoid integral of L u|_{p-2} at each grid time.
  std::vector<double> integral_residuals;

  double max_integral_residual() const;
};

/// Requires psi.size() <= N and a strictly increasing grid starting at 0.
/// Throws NumericalError naming the time index if a state is non-finite.
PdeRun solve_pde(const CoeffVec& psi, const OperatorParams& params, double p, std::size_t N,
                 std::span<const double> t_grid, TimeMethod method);

/// One implicit Euler step x -> (I - dt L_N)^{-1} x with a prefactored solver.
/// The SPDE simulator's drift step goes through the same call.
CoeffVec implicit_euler_step(const BandedSolver& drift, const CoeffVec& x);

struct EnergyCheck {
  double C = 0.0;
  double p_check = 0.0;
  double tol = 0.0;
  /// |u_t|^2_{p_check} / (e^{C t} |Psi|^2_{p_check}) per grid time.
  std::vector<double> ratios;
  double max_ratio = 0.0;
  bool passed = false;
};

/// Gronwall envelope check |u_t|^2 <= e^{C t} |Psi|^2 (1 + tol) along the run.
/// Violations are reported through `passed`, never thrown.
EnergyCheck semigroup_energy_check(const PdeRun& run, double C, double p_check, double tol = 1e-9);

}  // namespace hspde
