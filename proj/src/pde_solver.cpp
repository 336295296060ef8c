#include "hspde/pde_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "hspde/errors.hpp"

namespace hspde {

namespace {

constexpr std::array<double, 14> kPade13 = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                           1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                           670442572800.0,      33522128640.0,       1323241920.0,
                                           40840800.0,          960960.0,            16380.0,
                                           182.0,               1.0};
constexpr double kTheta13 = 5.371920351148152;
constexpr int kMaxSquarings = 1000;

std::vector<double> to_std(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd to_eigen(const CoeffVec& u) {
  return Eigen::Map<const Eigen::VectorXd>(u.values().data(), static_cast<Eigen::Index>(u.size()));
}

void check_state(const std::vector<double>& x, std::size_t time_index) {
  for (double v : x) {
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "solve_pde: non-finite state at time index " << time_index;
      throw NumericalError(os.str());
    }
  }
}

}  // namespace

const char* to_string(TimeMethod method) {
  switch (method) {
    case TimeMethod::matrix_exponential: return "matrix-exponential";
    case TimeMethod::crank_nicolson: return "crank-nicolson";
    case TimeMethod::implicit_euler: return "implicit-euler";
  }
  return "unknown";
}

TimeMethod time_method_from_string(const std::string& name) {
  if (name == "matrix-exponential") return TimeMethod::matrix_exponential;
  if (name == "crank-nicolson") return TimeMethod::crank_nicolson;
  if (name == "implicit-euler") return TimeMethod::implicit_euler;
  throw std::invalid_argument("unknown time method '" + name +
                              "' (expected matrix-exponential, crank-nicolson or implicit-euler)");
}

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& m, double t) {
  if (m.rows() != m.cols()) throw std::invalid_argument("matrix_exponential: matrix must be square");
  if (static_cast<std::size_t>(m.rows()) > kDenseCap) {
    std::ostringstream os;
    os << "matrix_exponential: size " << m.rows() << " exceeds dense cap " << kDenseCap;
    throw std::invalid_argument(os.str());
  }
  if (!std::isfinite(t) || !m.allFinite()) throw std::invalid_argument("matrix_exponential: non-finite input");
  const Eigen::Index n = m.rows();
  const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(n, n);
  if (t == 0.0 || n == 0 || m.isZero(0.0)) return ident;

  Eigen::MatrixXd a = t * m;
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > kTheta13) squarings = static_cast<int>(std::ceil(std::log2(norm1 / kTheta13)));
  if (squarings > kMaxSquarings) throw NumericalError("matrix_exponential: |t M| too large; use smaller time steps");
  a /= std::ldexp(1.0, squarings);

  const Eigen::MatrixXd a2 = a * a;
  const Eigen::MatrixXd a4 = a2 * a2;
  const Eigen::MatrixXd a6 = a4 * a2;
  const auto& b = kPade13;
  const Eigen::MatrixXd u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident;
  const Eigen::MatrixXd u = a * u_inner;
  const Eigen::MatrixXd v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;

  Eigen::MatrixXd r = (v - u).partialPivLu().solve(v + u);
  for (int s = 0; s < squarings; ++s) r = r * r;
  if (!r.allFinite()) throw NumericalError("matrix_exponential: overflow; use smaller time steps");
  return r;
}

std::vector<double> uniform_grid(double T, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("uniform_grid: dt must be positive");
  if (!(T >= 0.0) || !std::isfinite(T)) throw std::invalid_argument("uniform_grid: T must be nonnegative");
  const double steps_real = T / dt;
  const double steps = std::round(steps_real);
  if (std::abs(steps_real - steps) > 1e-9 * std::max(1.0, steps)) {
    throw std::invalid_argument("uniform_grid: T is not an integer multiple of dt");
  }
  std::vector<double> grid(static_cast<std::size_t>(steps) + 1);
  for (std::size_t k = 0; k < grid.size(); ++k) grid[k] = static_cast<double>(k) * dt;
  grid.back() = T;
  return grid;
}

double PdeRun::max_integral_residual() const {
  double m = 0.0;
  for (double r : integral_residuals) m = std::max(m, r);
  return m;
}

CoeffVec implicit_euler_step(const BandedSolver& drift, const CoeffVec& x) { return CoeffVec(drift.solve(x.values())); }

PdeRun solve_pde(const CoeffVec& psi, const OperatorParams& params, double p, std::size_t N,
                 std::span<const double> t_grid, TimeMethod method) {
  params.validate();
  if (N == 0) throw std::invalid_argument("solve_pde: N must be positive");
  if (psi.size() > N) throw std::invalid_argument("solve_pde: initial condition longer than N");
  if (t_grid.empty() || t_grid.front() != 0.0) throw std::invalid_argument("solve_pde: time grid must start at 0");
  for (std::size_t k = 1; k < t_grid.size(); ++k) {
    if (!(t_grid[k] > t_grid[k - 1])) throw std::invalid_argument("solve_pde: time grid must be strictly increasing");
  }

  PdeRun run;
  run.params = params;
  run.p = p;
  run.N = N;
  run.t_grid.assign(t_grid.begin(), t_grid.end());
  run.method = method;
  run.states.reserve(t_grid.size());
  run.states.push_back(psi.resized(N));

  const BandMatrix l_gal = L_matrix(params, N, MatrixForm::galerkin);

  if (method == TimeMethod::matrix_exponential) {
    const Eigen::MatrixXd dense = l_gal.to_dense();
    // Grids built as k * dt produce steps that differ in the last bits; steps
    // within 1e-12 relative share one exponential.
    std::vector<std::pair<double, Eigen::MatrixXd>> cache;
    for (std::size_t k = 1; k < t_grid.size(); ++k) {
      const double step = t_grid[k] - t_grid[k - 1];
      auto it = std::find_if(cache.begin(), cache.end(),
                             [&](const auto& entry) { return std::abs(entry.first - step) <= 1e-12 * step; });
      if (it == cache.end()) {
        cache.emplace_back(step, matrix_exponential(dense, step));
        it = std::prev(cache.end());
      }
      std::vector<double> next = to_std(it->second * to_eigen(run.states.back()));
      check_state(next, k);
      run.states.emplace_back(std::move(next));
    }
  } else {
    const double theta = method == TimeMethod::crank_nicolson ? 0.5 : 1.0;
    std::vector<std::pair<double, BandedSolver>> cache;
    for (std::size_t k = 1; k < t_grid.size(); ++k) {
      const double step = t_grid[k] - t_grid[k - 1];
      auto it = std::find_if(cache.begin(), cache.end(),
                             [&](const auto& entry) { return std::abs(entry.first - step) <= 1e-12 * step; });
      if (it == cache.end()) {
        cache.emplace_back(step, BandedSolver(identity_minus(l_gal, theta * step)));
        it = std::prev(cache.end());
      }
      const CoeffVec& x = run.states.back();
      std::vector<double> next;
      if (method == TimeMethod::implicit_euler) {
        next = it->second.solve(x.values());
      } else {
        std::vector<double> rhs = l_gal.apply(x.values());
        for (std::size_t i = 0; i < N; ++i) rhs[i] = x[i] + 0.5 * step * rhs[i];
        next = it->second.solve(rhs);
      }
      check_state(next, k);
      run.states.emplace_back(std::move(next));
    }
  }

  // Integral-equation residual in |.|_{p-2}, trapezoid rule on the grid.
  const SobolevWeights w(p - 2.0, N);
  std::vector<double> integral(N, 0.0);
  std::vector<double> l_prev = l_gal.apply(run.states.front().values());
  run.integral_residuals.push_back(0.0);
  for (std::size_t k = 1; k < run.states.size(); ++k) {
    const std::vector<double> l_cur = l_gal.apply(run.states[k].values());
    const double step = t_grid[k] - t_grid[k - 1];
    double res2 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      integral[i] += 0.5 * step * (l_prev[i] + l_cur[i]);
      const double r = run.states[k][i] - run.states.front()[i] - integral[i];
      res2 += w[i] * r * r;
    }
    run.integral_residuals.push_back(std::sqrt(res2));
    l_prev = l_cur;
  }
  return run;
}

EnergyCheck semigroup_energy_check(const PdeRun& run, double C, double p_check, double tol) {
  EnergyCheck check;
  check.C = C;
  check.p_check = p_check;
  check.tol = tol;
  const SobolevWeights w(p_check, run.N);
  const double initial = inner_p(run.states.front(), run.states.front(), w);
  for (std::size_t k = 0; k < run.states.size(); ++k) {
    const double energy = inner_p(run.states[k], run.states[k], w);
    const double envelope = std::exp(C * run.t_grid[k]) * initial;
    const double ratio = envelope > 0.0 ? energy / envelope : (energy == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
    check.ratios.push_back(ratio);
    check.max_ratio = std::max(check.max_ratio, ratio);
  }
  check.passed = check.max_ratio <= 1.0 + tol;
  return check;
}

}  // namespace hspde
