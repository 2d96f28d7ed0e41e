#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "nlfp/coefficients.hpp"
#include "nlfp/fpke.hpp"
#include "nlfp/grid.hpp"
#include "nlfp/particles.hpp"

namespace nlfp {

struct SuperpositionReport {
  std::vector<double> checkpoint_times;
  std::vector<double> l1_distances;  // KDE of ensemble vs PDE frame
  std::size_t n_particles = 0;
  std::vector<double> kde_bandwidths;

  double max_distance() const;
};

SuperpositionReport superposition_report(const DensityTrajectory& traj,
                                         const EnsembleCheckpoints& checkpoints, const Mesh& mesh,
                                         const KdeConfig& kde);

struct CouplingReport {
  double sup_path_distance = 0.0;
  std::vector<double> refinement_levels;   // dt per level, coarsest first
  std::vector<double> distances_by_level;  // sup |X - Y| between levels k and k+1
  bool strictly_decreasing = false;        // recorded, not enforced
};

// Decoupled runs along traj with one initial ensemble and one Brownian path
// built at the finest level. A single level is run twice from scratch and
// the two runs are compared. dt_levels must be a halving chain whose finest
// step divides the checkpoints of traj.
CouplingReport coupling_experiment(const CoefficientSet& coeffs, const DensityTrajectory& traj,
                                   const GridFunction& u0, std::uint64_t seed, std::size_t n,
                                   const std::vector<double>& dt_levels);

// Local discrete Hardy-Littlewood maximal function:
//   (Mg)_i = max_{k=1..K} (1/(2k-1)) sum_{|j-i|<k} g_j,   K = floor(R_max/dx),
// i.e. averages over cells whose centres lie strictly within r = k dx of x_i;
// g is taken as zero outside the mesh.
GridFunction maximal_function(const GridFunction& g, double R_max);

struct Exponents {
  double p = std::numeric_limits<double>::infinity();
  double q = std::numeric_limits<double>::infinity();
  double p_dual = 1.0;
  double q_dual = 1.0;
};

// Coefficient fields F(t, .) and sigma(t, .) sampled at cell centres.
struct CoefficientFrame {
  double t = 0.0;
  std::vector<double> drift;
  std::vector<double> sigma;
};

struct MarginStats {
  double min = 0.0;   // min over samples of (rhs - lhs) / |x - y|^2 at calibrated C
  double mean = 0.0;
  double max = 0.0;
};

struct LipschitzCertificate {
  double R = 0.0;
  Exponents exponents;
  double calibrated_C = 0.0;
  double one_sided_C = 0.0;           // smallest constant for the one-sided form alone
  std::vector<GridFunction> f_R;      // calibrated, one per checkpoint
  double f_R_sup = 0.0;               // ||f_R||_{L^inf([0,T] x B_R)}
  double f_R_lq_lp = 0.0;             // ||f_R||_{L^q([0,T]; L^p(B_R))}
  double violation_rate = 0.0;
  std::size_t n_pairs = 0;
  MarginStats margin_stats;
};

// Piecewise-linear F and sigma through the cell centres; unscaled
//   f = M|D F| + (M|D sigma|)^2
// with D the larger one-sided difference quotient. C is the smallest constant
// making |2(x-y)(F(x)-F(y))| + |sigma(x)-sigma(y)|^2 <= C (f(x)+f(y)) |x-y|^2 on
// the sampled triples; the violation rate of the one-sided inequality (no
// absolute value) is then evaluated at that C.
LipschitzCertificate certify_one_sided(const Mesh& mesh, const std::vector<CoefficientFrame>& frames,
                                       double R, const Exponents& exponents, std::size_t n_pairs,
                                       std::uint64_t seed);

// Builds F = E b(u_t) and sigma = sqrt(2 a(u_t)) from traj and certifies them.
LipschitzCertificate lipschitz_certificate(const DensityTrajectory& traj,
                                           const CoefficientSet& coeffs, double R,
                                           const Exponents& exponents, std::size_t n_pairs,
                                           std::uint64_t seed);

// sup over frames of the largest cell value.
double bounded_density_check(const DensityTrajectory& traj);

// `report_type,key,value` rows.
void write_report_csv(std::ostream& os, const SuperpositionReport& r);
void write_report_csv(std::ostream& os, const CouplingReport& r);
void write_report_csv(std::ostream& os, const LipschitzCertificate& r);

std::string summarize(const SuperpositionReport& r);
std::string summarize(const CouplingReport& r);
std::string summarize(const LipschitzCertificate& r);

}  // namespace nlfp
