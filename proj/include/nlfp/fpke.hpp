#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nlfp/coefficients.hpp"
#include "nlfp/grid.hpp"

namespace nlfp {

// Reconstruction used for the explicit transport flux. Both are
// conservative and upwinded; kMuscl adds a minmod-limited linear
// reconstruction of the upwind cell (second order away from extrema) and
// reverts to kUpwind when the Courant number exceeds 1/2.
enum class TransportScheme { kUpwind, kMuscl };

struct SolverConfig {
  double dt = 1e-3;
  double T = 0.5;
  double newton_tol = 1e-12;
  int newton_max_iter = 30;
  std::vector<double> checkpoint_times{0.0, 0.5};
  double boundary_mass_tol = 1e-8;
  TransportScheme transport = TransportScheme::kMuscl;

  // Throws ConfigError unless dt <= T and the checkpoints are an increasing
  // subset of the step grid containing 0 and T.
  void validate() const;
  int n_steps() const;
};

// Cells counted as the boundary layer on each side of the mesh.
int boundary_layer_cells(const Mesh& mesh);
double boundary_mass(const GridFunction& u);

// Courant number dt * sup|E| * sup b / dx of the explicit transport part.
double transport_cfl(const CoefficientSet& coeffs, const Mesh& mesh, double dt);

struct Tridiagonal {
  std::vector<double> lower;  // lower[i] multiplies x[i-1]; lower[0] unused
  std::vector<double> diag;
  std::vector<double> upper;  // upper[i] multiplies x[i+1]; upper[n-1] unused
};

// Residual of the implicit diffusion stage,
//   R_i(u) = u_i - u*_i - dt/dx^2 (beta(u_{i+1}) - 2 beta(u_i) + beta(u_{i-1})),
// with zero-flux ends.
std::vector<double> diffusion_residual(std::span<const double> u, std::span<const double> u_star,
                                       const CoefficientSet& coeffs, double dt, double dx);
Tridiagonal diffusion_jacobian(std::span<const double> u, const CoefficientSet& coeffs, double dt,
                               double dx);

// Thomas algorithm. Every pivot is checked against min_pivot (in magnitude);
// a smaller pivot raises SolverError.
std::vector<double> solve_tridiagonal(const Tridiagonal& m, std::span<const double> rhs,
                                      double min_pivot);

// Explicit transport update u - dt * d/dx (E b(u) u) with zero flux at the
// ends. Throws ConfigError when the Courant number exceeds 1.
std::vector<double> transport_update(const GridFunction& u, const CoefficientSet& coeffs,
                                     double dt, TransportScheme scheme);

struct StepStats {
  int newton_iters = 0;
  double residual = 0.0;
};

// One split step: explicit transport, then backward Euler for the diffusion.
GridFunction step(const GridFunction& u, double t, const CoefficientSet& coeffs,
                  const SolverConfig& cfg, StepStats* stats = nullptr);

struct StepMonitor {
  int step = 0;
  double t = 0.0;
  double mass = 0.0;
  double min_u = 0.0;
  double max_u = 0.0;
  int newton_iters = 0;
  double boundary_mass = 0.0;
};

struct Solution {
  DensityTrajectory trajectory;
  std::vector<StepMonitor> monitors;  // entry 0 describes u0
  // Discrete analogue of the L^2(0,T; W^{1,2}) seminorm: sum dt sum |D_h u|^2 dx.
  double gradient_energy = 0.0;

  double max_mass_drift() const;
  double min_value() const;
};

Solution solve(const GridFunction& u0, const CoefficientSet& coeffs, const SolverConfig& cfg);

// Smooth bump phi(x) = exp(1 - 1/(1 - s^2)), s = (x - center)/radius.
struct WeakFormTestFunction {
  double center = 0.0;
  double radius = 1.0;

  WeakFormTestFunction(double c, double r);
  double eval(double x) const;
  double grad(double x) const;
  double laplacian(double x) const;
};

// |int phi u_t - int phi u_0 - int_0^t int (E b(u_s) phi' u_s + beta(u_s) phi'')|
// with the trapezoid rule over checkpoints and the midpoint rule in space.
double weak_form_residual(const DensityTrajectory& traj, const WeakFormTestFunction& phi,
                          const CoefficientSet& coeffs, double t);

void write_trajectory_csv(std::ostream& os, const DensityTrajectory& traj);
void write_monitor_csv(std::ostream& os, const std::vector<StepMonitor>& monitors);

}  // namespace nlfp
