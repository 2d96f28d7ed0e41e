#include "nlfp/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "nlfp/error.hpp"

namespace nlfp {

Mesh::Mesh(double x_min, double x_max, int n_cells)
    : x_min_(x_min), x_max_(x_max), n_cells_(n_cells), dx_((x_max - x_min) / n_cells) {
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_min < x_max))
    throw DomainError("Mesh: need finite x_min < x_max");
  if (n_cells < 4) throw DomainError("Mesh: n_cells must be >= 4");
}

std::vector<double> Mesh::centers() const {
  std::vector<double> c(static_cast<std::size_t>(n_cells_));
  for (int i = 0; i < n_cells_; ++i) c[static_cast<std::size_t>(i)] = center(i);
  return c;
}

int Mesh::locate(double x) const {
  if (!(x >= x_min_ && x <= x_max_)) return -1;
  const int i = static_cast<int>((x - x_min_) / dx_);
  return std::min(i, n_cells_ - 1);
}

GridFunction::GridFunction(Mesh mesh, std::vector<double> values)
    : mesh_(mesh), values_(std::move(values)) {
  if (values_.size() != static_cast<std::size_t>(mesh_.n_cells()))
    throw DomainError("GridFunction: values length differs from n_cells");
  for (double v : values_)
    if (!std::isfinite(v)) throw DomainError("GridFunction: non-finite value");
}

GridFunction GridFunction::density(Mesh mesh, std::vector<double> values) {
  GridFunction g(mesh, std::move(values));
  for (double v : g.values_)
    if (v < 0.0) throw DomainError("GridFunction: negative value in density");
  const double m = mass(g);
  if (std::abs(m - 1.0) > 1e-10) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "GridFunction: density mass %.17g is not 1", m);
    throw DomainError(buf);
  }
  g.is_density_ = true;
  return g;
}

double GridFunction::max_value() const { return *std::max_element(values_.begin(), values_.end()); }
double GridFunction::min_value() const { return *std::min_element(values_.begin(), values_.end()); }

DensityTrajectory::DensityTrajectory(Mesh m, std::vector<double> t, std::vector<GridFunction> f)
    : mesh(m), times(std::move(t)), frames(std::move(f)) {
  if (times.empty() || times.size() != frames.size())
    throw DomainError("DensityTrajectory: times and frames must be non-empty and aligned");
  if (times.front() != 0.0) throw DomainError("DensityTrajectory: times[0] must be 0");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) throw DomainError("DensityTrajectory: times must increase");
  for (const auto& g : frames) {
    if (!(g.mesh() == mesh)) throw DomainError("DensityTrajectory: frame mesh mismatch");
    if (!g.is_density()) throw DomainError("DensityTrajectory: every frame must be a density");
  }
}

int DensityTrajectory::checkpoint_index(double t) const {
  const double tol = 1e-9 * std::max(1.0, final_time());
  for (std::size_t k = 0; k < times.size(); ++k)
    if (std::abs(times[k] - t) <= tol) return static_cast<int>(k);
  return -1;
}

int DensityTrajectory::frame_at_or_before(double t) const {
  const double tol = 1e-9 * std::max(1.0, final_time());
  int idx = -1;
  for (std::size_t k = 0; k < times.size(); ++k)
    if (times[k] <= t + tol) idx = static_cast<int>(k);
  return idx;
}

GridFunction project_density(const PointFn& f, const Mesh& mesh) {
  std::vector<double> v(static_cast<std::size_t>(mesh.n_cells()));
  double total = 0.0;
  for (int i = 0; i < mesh.n_cells(); ++i) {
    const double fx = f(mesh.center(i));
    if (!std::isfinite(fx)) throw DomainError("project_density: non-finite density value");
    v[static_cast<std::size_t>(i)] = std::max(fx, 0.0);
    total += v[static_cast<std::size_t>(i)];
  }
  total *= mesh.dx();
  if (!(total > 0.0)) throw DomainError("project_density: zero total mass on mesh");
  for (auto& x : v) x /= total;
  return GridFunction::density(mesh, std::move(v));
}

double mass(const GridFunction& u) {
  double s = 0.0;
  for (double v : u.values()) s += v;
  return s * u.mesh().dx();
}

double l1_distance(const GridFunction& u, const GridFunction& v) {
  if (!(u.mesh() == v.mesh())) throw DomainError("l1_distance: mesh mismatch");
  double s = 0.0;
  for (int i = 0; i < u.size(); ++i) s += std::abs(u[i] - v[i]);
  return s * u.mesh().dx();
}

double sample_at(const GridFunction& u, double x) {
  const int i = u.mesh().locate(x);
  return i < 0 ? 0.0 : u[i];
}

void write_csv(std::ostream& os, const GridFunction& u) {
  os << "x,value\n";
  char buf[64];
  for (int i = 0; i < u.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", u.mesh().center(i), u[i]);
    os << buf;
  }
}

double gaussian_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

double indicator(double x, double lo, double hi) { return (x >= lo && x <= hi) ? 1.0 : 0.0; }

}  // namespace nlfp
