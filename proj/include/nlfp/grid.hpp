#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace nlfp {

// Uniform 1-D cell-centred mesh.
class Mesh {
 public:
  Mesh(double x_min, double x_max, int n_cells);

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  int n_cells() const { return n_cells_; }
  double dx() const { return dx_; }
  double center(int i) const { return x_min_ + (i + 0.5) * dx_; }
  std::vector<double> centers() const;

  // Cell containing x, or -1 outside [x_min, x_max]. x_max itself maps to
  // the last cell.
  int locate(double x) const;

  bool operator==(const Mesh&) const = default;

 private:
  double x_min_;
  double x_max_;
  int n_cells_;
  double dx_;
};

// Cell values of a function on a mesh. Immutable after construction.
class GridFunction {
 public:
  GridFunction(Mesh mesh, std::vector<double> values);

  // Same, but also enforces the density invariants (values >= 0, unit mass
  // within 1e-10) and marks the result as a density.
  static GridFunction density(Mesh mesh, std::vector<double> values);

  const Mesh& mesh() const { return mesh_; }
  std::span<const double> values() const { return values_; }
  double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }
  int size() const { return mesh_.n_cells(); }
  bool is_density() const { return is_density_; }
  double max_value() const;
  double min_value() const;

 private:
  Mesh mesh_;
  std::vector<double> values_;
  bool is_density_ = false;
};

// Checkpointed curve of densities; times[0] = 0 and times increase.
struct DensityTrajectory {
  Mesh mesh;
  std::vector<double> times;
  std::vector<GridFunction> frames;

  DensityTrajectory(Mesh m, std::vector<double> t, std::vector<GridFunction> f);

  double final_time() const { return times.back(); }
  // Index of the checkpoint equal to t (relative tolerance 1e-9), or -1.
  int checkpoint_index(double t) const;
  // Index of the latest checkpoint <= t (with a 1e-9 relative slack).
  int frame_at_or_before(double t) const;
};

using PointFn = std::function<double(double)>;

// Cell-centre sampling of f, clipped at zero and rescaled to unit mass.
GridFunction project_density(const PointFn& f, const Mesh& mesh);

double mass(const GridFunction& u);
double l1_distance(const GridFunction& u, const GridFunction& v);

// Piecewise-constant version of the density: the value of the cell holding
// x, zero outside the mesh.
double sample_at(const GridFunction& u, double x);

// CSV with header `x,value`, 17 significant digits.
void write_csv(std::ostream& os, const GridFunction& u);

// Analytic profiles used for initial data and test oracles.
double gaussian_pdf(double x, double mean, double sd);
double indicator(double x, double lo, double hi);

}  // namespace nlfp
