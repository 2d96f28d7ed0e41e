#include "nlfp/fpke.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "nlfp/error.hpp"

namespace nlfp {

namespace {

std::string fmt(const char* pattern, double a, double b = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

bool on_step_grid(double t, double dt) {
  const double k = std::round(t / dt);
  return std::abs(k * dt - t) <= 1e-9 * std::max(1.0, std::abs(t));
}

double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return std::abs(a) < std::abs(b) ? a : b;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("solver.dt must be > 0");
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("solver.T must be > 0");
  if (dt > T) throw ConfigError("solver.dt must be <= solver.T");
  if (!on_step_grid(T, dt)) throw ConfigError("solver.T must be a multiple of solver.dt");
  if (!(newton_tol > 0.0)) throw ConfigError("solver.newton_tol must be > 0");
  if (newton_max_iter < 1) throw ConfigError("solver.newton_max_iter must be >= 1");
  if (!(boundary_mass_tol > 0.0)) throw ConfigError("solver.boundary_mass_tol must be > 0");
  if (checkpoint_times.size() < 2) throw ConfigError("solver.checkpoint_times needs 0 and T");
  if (checkpoint_times.front() != 0.0)
    throw ConfigError("solver.checkpoint_times must start at 0");
  if (std::abs(checkpoint_times.back() - T) > 1e-9 * std::max(1.0, T))
    throw ConfigError("solver.checkpoint_times must end at T");
  for (std::size_t k = 0; k < checkpoint_times.size(); ++k) {
    if (k > 0 && !(checkpoint_times[k] > checkpoint_times[k - 1]))
      throw ConfigError("solver.checkpoint_times must be strictly increasing");
    if (!on_step_grid(checkpoint_times[k], dt))
      throw ConfigError(fmt("solver.checkpoint_times: %.17g is not a multiple of dt", checkpoint_times[k]));
  }
}

int SolverConfig::n_steps() const { return static_cast<int>(std::llround(T / dt)); }

int boundary_layer_cells(const Mesh& mesh) { return std::max(2, mesh.n_cells() / 20); }

double boundary_mass(const GridFunction& u) {
  const int n = u.size();
  const int k = boundary_layer_cells(u.mesh());
  double s = 0.0;
  for (int i = 0; i < k; ++i) s += std::abs(u[i]) + std::abs(u[n - 1 - i]);
  return s * u.mesh().dx();
}

double transport_cfl(const CoefficientSet& coeffs, const Mesh& mesh, double dt) {
  return dt * coeffs.E.sup_bound * coeffs.b.sup_bound / mesh.dx();
}

std::vector<double> diffusion_residual(std::span<const double> u, std::span<const double> u_star,
                                       const CoefficientSet& coeffs, double dt, double dx) {
  const std::size_t n = u.size();
  const double s = dt / (dx * dx);
  std::vector<double> beta(n), r(n);
  for (std::size_t i = 0; i < n; ++i) beta[i] = coeffs.beta.eval(u[i]);
  for (std::size_t i = 0; i < n; ++i) {
    double lap = 0.0;
    if (i > 0) lap += beta[i - 1] - beta[i];
    if (i + 1 < n) lap += beta[i + 1] - beta[i];
    r[i] = u[i] - u_star[i] - s * lap;
  }
  return r;
}

Tridiagonal diffusion_jacobian(std::span<const double> u, const CoefficientSet& coeffs, double dt,
                               double dx) {
  const std::size_t n = u.size();
  const double s = dt / (dx * dx);
  Tridiagonal m{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                std::vector<double>(n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    const double d = coeffs.beta.deriv(u[i]);
    const double neighbours = (i > 0 ? 1.0 : 0.0) + (i + 1 < n ? 1.0 : 0.0);
    m.diag[i] = 1.0 + s * neighbours * d;
    // Column i carries beta'(u_i) into rows i-1 and i+1.
    if (i > 0) m.upper[i - 1] = -s * d;
    if (i + 1 < n) m.lower[i + 1] = -s * d;
  }
  return m;
}

std::vector<double> solve_tridiagonal(const Tridiagonal& m, std::span<const double> rhs,
                                      double min_pivot) {
  const std::size_t n = m.diag.size();
  std::vector<double> c(n), d(n), x(n);
  double pivot = m.diag[0];
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) pivot = m.diag[i] - m.lower[i] * c[i - 1];
    if (!(std::abs(pivot) >= min_pivot))
      throw SolverError(fmt("tridiagonal solve: pivot %.3e below bound %.3e", pivot, min_pivot));
    c[i] = (i + 1 < n) ? m.upper[i] / pivot : 0.0;
    d[i] = (rhs[i] - (i > 0 ? m.lower[i] * d[i - 1] : 0.0)) / pivot;
  }
  for (std::size_t i = n; i-- > 0;) x[i] = d[i] - (i + 1 < n ? c[i] * x[i + 1] : 0.0);
  return x;
}

std::vector<double> transport_update(const GridFunction& u, const CoefficientSet& coeffs,
                                     double dt, TransportScheme scheme) {
  const Mesh& mesh = u.mesh();
  const double cfl = transport_cfl(coeffs, mesh, dt);
  if (cfl > 1.0)
    throw ConfigError(fmt("CFL violation: dt*sup|E b|/dx = %.6g exceeds 1", cfl));

  const int n = u.size();
  std::vector<double> out(u.values().begin(), u.values().end());
  if (coeffs.b.sup_bound == 0.0 || coeffs.E.sup_bound == 0.0) return out;

  std::vector<double> slope(static_cast<std::size_t>(n), 0.0);
  // Minmod MUSCL keeps u >= 0 only up to Courant 1/2; beyond that the
  // first-order flux is used, which is positive up to 1.
  if (scheme == TransportScheme::kMuscl && cfl <= 0.5)
    for (int i = 1; i + 1 < n; ++i)
      slope[static_cast<std::size_t>(i)] = minmod(u[i] - u[i - 1], u[i + 1] - u[i]);

  const double dx = mesh.dx();
  // flux[i] lives on the face between cells i and i+1.
  std::vector<double> flux(static_cast<std::size_t>(n - 1));
  for (int i = 0; i + 1 < n; ++i) {
    const double v = coeffs.E.eval(mesh.x_min() + (i + 1) * dx);
    const double face = v >= 0.0 ? u[i] + 0.5 * slope[static_cast<std::size_t>(i)]
                                  : u[i + 1] - 0.5 * slope[static_cast<std::size_t>(i + 1)];
    flux[static_cast<std::size_t>(i)] = v * coeffs.b.eval(face) * face;
  }
  const double r = dt / dx;
  for (int i = 0; i < n; ++i) {
    const double right = i + 1 < n ? flux[static_cast<std::size_t>(i)] : 0.0;
    const double left = i > 0 ? flux[static_cast<std::size_t>(i - 1)] : 0.0;
    out[static_cast<std::size_t>(i)] -= r * (right - left);
  }
  return out;
}

GridFunction step(const GridFunction& u, double t, const CoefficientSet& coeffs,
                  const SolverConfig& cfg, StepStats* stats) {
  if (!u.is_density()) throw DomainError("step: input must be a density");
  const double bm = boundary_mass(u);
  if (!(bm < cfg.boundary_mass_tol))
    throw DomainTooSmallError(
        fmt("domain too small: boundary mass %.3e at t=%.6g exceeds tolerance", bm, t));

  const Mesh& mesh = u.mesh();
  const double dx = mesh.dx();
  const double dt = cfg.dt;
  const std::vector<double> u_star = transport_update(u, coeffs, dt, cfg.transport);
  for (double v : u_star)
    if (v < -1e-12) throw SolverError(fmt("transport stage produced negative density %.3e", v));

  // beta' >= gamma0 puts every assembled diagonal entry above gamma0 dt/dx^2.
  // Each column exceeds its off-diagonal sum by exactly 1, so elimination
  // pivots never drop below 1.
  const double min_diag = coeffs.beta.gamma0 * dt / (dx * dx) * (1.0 - 1e-8);
  const double min_pivot = 1.0 - 1e-8;
  std::vector<double> v(u.values().begin(), u.values().end());
  std::vector<double> res = diffusion_residual(v, u_star, coeffs, dt, dx);
  double norm = max_abs(res);
  int iter = 0;
  while (norm > cfg.newton_tol) {
    if (iter == cfg.newton_max_iter)
      throw SolverError(fmt("Newton did not converge at t=%.6g: residual %.3e", t, norm));
    ++iter;
    std::vector<double> rhs(res.size());
    for (std::size_t i = 0; i < res.size(); ++i) rhs[i] = -res[i];
    const Tridiagonal jac = diffusion_jacobian(v, coeffs, dt, dx);
    for (double d : jac.diag)
      if (!(d >= min_diag))
        throw SolverError(fmt("Jacobian diagonal %.3e below bound %.3e", d, min_diag));
    const std::vector<double> delta = solve_tridiagonal(jac, rhs, min_pivot);

    double lambda = 1.0;
    std::vector<double> trial(v.size());
    std::vector<double> trial_res;
    double trial_norm = 0.0;
    for (int damping = 0;; ++damping) {
      for (std::size_t i = 0; i < v.size(); ++i) trial[i] = v[i] + lambda * delta[i];
      trial_res = diffusion_residual(trial, u_star, coeffs, dt, dx);
      trial_norm = max_abs(trial_res);
      if (trial_norm <= norm || damping == 5) break;
      lambda *= 0.5;
    }
    v.swap(trial);
    res.swap(trial_res);
    norm = trial_norm;
  }

  for (double& x : v) {
    if (x < -1e-12) throw SolverError(fmt("diffusion stage produced negative density %.3e", x));
    if (x < 0.0) x = 0.0;
  }
  if (stats) *stats = {iter, norm};
  return GridFunction::density(mesh, std::move(v));
}

double Solution::max_mass_drift() const {
  double m = 0.0;
  for (const auto& s : monitors) m = std::max(m, std::abs(s.mass - 1.0));
  return m;
}

double Solution::min_value() const {
  double m = monitors.empty() ? 0.0 : monitors.front().min_u;
  for (const auto& s : monitors) m = std::min(m, s.min_u);
  return m;
}

namespace {

StepMonitor monitor(int k, double t, const GridFunction& u, int iters) {
  return {k, t, mass(u), u.min_value(), u.max_value(), iters, boundary_mass(u)};
}

double gradient_sq(const GridFunction& u) {
  const double dx = u.mesh().dx();
  double s = 0.0;
  for (int i = 0; i + 1 < u.size(); ++i) {
    const double g = (u[i + 1] - u[i]) / dx;
    s += g * g;
  }
  return s * dx;
}

}  // namespace

Solution solve(const GridFunction& u0, const CoefficientSet& coeffs, const SolverConfig& cfg) {
  cfg.validate();
  if (!u0.is_density()) throw DomainError("solve: u0 must be a density");

  const int n = cfg.n_steps();
  std::vector<int> checkpoint_steps;
  for (double t : cfg.checkpoint_times)
    checkpoint_steps.push_back(static_cast<int>(std::llround(t / cfg.dt)));

  std::vector<double> times{0.0};
  std::vector<GridFunction> frames{u0};
  std::vector<StepMonitor> monitors{monitor(0, 0.0, u0, 0)};
  double energy = 0.0;
  std::size_t next_cp = 1;

  GridFunction u = u0;
  for (int k = 0; k < n; ++k) {
    const double t = k * cfg.dt;
    StepStats st;
    u = step(u, t, coeffs, cfg, &st);
    const double t_next = (k + 1) * cfg.dt;
    monitors.push_back(monitor(k + 1, t_next, u, st.newton_iters));
    energy += cfg.dt * gradient_sq(u);
    if (next_cp < checkpoint_steps.size() && checkpoint_steps[next_cp] == k + 1) {
      times.push_back(cfg.checkpoint_times[next_cp]);
      frames.push_back(u);
      ++next_cp;
    }
  }
  return {DensityTrajectory(u0.mesh(), std::move(times), std::move(frames)), std::move(monitors),
          energy};
}

WeakFormTestFunction::WeakFormTestFunction(double c, double r) : center(c), radius(r) {
  if (!(r > 0.0)) throw DomainError("WeakFormTestFunction: radius must be > 0");
}

double WeakFormTestFunction::eval(double x) const {
  const double s = (x - center) / radius;
  if (std::abs(s) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

double WeakFormTestFunction::grad(double x) const {
  const double s = (x - center) / radius;
  if (std::abs(s) >= 1.0) return 0.0;
  const double q = 1.0 - s * s;
  const double phi = std::exp(1.0 - 1.0 / q);
  if (phi == 0.0) return 0.0;
  return phi * (-2.0 * s / (q * q)) / radius;
}

double WeakFormTestFunction::laplacian(double x) const {
  const double s = (x - center) / radius;
  if (std::abs(s) >= 1.0) return 0.0;
  const double q = 1.0 - s * s;
  const double phi = std::exp(1.0 - 1.0 / q);
  if (phi == 0.0) return 0.0;
  const double q2 = q * q;
  const double d2 = 4.0 * s * s / (q2 * q2) - 2.0 / q2 - 8.0 * s * s / (q2 * q);
  return phi * d2 / (radius * radius);
}

double weak_form_residual(const DensityTrajectory& traj, const WeakFormTestFunction& phi,
                          const CoefficientSet& coeffs, double t) {
  const int k = traj.checkpoint_index(t);
  if (k < 0) throw DomainError(fmt("weak_form_residual: t=%.17g is not a checkpoint", t));

  const Mesh& mesh = traj.mesh;
  const double dx = mesh.dx();
  const std::vector<double> x = mesh.centers();
  std::vector<double> phi_v(x.size()), grad_v(x.size()), lap_v(x.size()), e_v(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    phi_v[i] = phi.eval(x[i]);
    grad_v[i] = phi.grad(x[i]);
    lap_v[i] = phi.laplacian(x[i]);
    e_v[i] = coeffs.E.eval(x[i]);
  }
  auto pairing = [&](const GridFunction& u) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += phi_v[i] * u[static_cast<int>(i)];
    return s * dx;
  };
  auto generator = [&](const GridFunction& u) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double ui = u[static_cast<int>(i)];
      s += e_v[i] * coeffs.b.eval(ui) * grad_v[i] * ui + coeffs.beta.eval(ui) * lap_v[i];
    }
    return s * dx;
  };

  double integral = 0.0;
  double g_prev = generator(traj.frames[0]);
  for (int j = 0; j < k; ++j) {
    const double g_next = generator(traj.frames[static_cast<std::size_t>(j + 1)]);
    integral += 0.5 * (traj.times[static_cast<std::size_t>(j + 1)] -
                       traj.times[static_cast<std::size_t>(j)]) *
                (g_prev + g_next);
    g_prev = g_next;
  }
  return std::abs(pairing(traj.frames[static_cast<std::size_t>(k)]) - pairing(traj.frames[0]) -
                  integral);
}

void write_trajectory_csv(std::ostream& os, const DensityTrajectory& traj) {
  os << "t,x,u\n";
  char buf[96];
  for (std::size_t k = 0; k < traj.times.size(); ++k)
    for (int i = 0; i < traj.mesh.n_cells(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", traj.times[k], traj.mesh.center(i),
                    traj.frames[k][i]);
      os << buf;
    }
}

void write_monitor_csv(std::ostream& os, const std::vector<StepMonitor>& monitors) {
  os << "step,t,mass,min_u,max_u,newton_iters,boundary_mass\n";
  char buf[256];
  for (const auto& m : monitors) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%d,%.17g\n", m.step, m.t, m.mass,
                  m.min_u, m.max_u, m.newton_iters, m.boundary_mass);
    os << buf;
  }
}

}  // namespace nlfp
