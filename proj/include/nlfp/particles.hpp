#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "nlfp/coefficients.hpp"
#include "nlfp/grid.hpp"

namespace nlfp {

// Reproducible Brownian increments on a uniform time grid.
//
// Increments at the finest level are N(0, dt_fine) draws keyed by
// (seed, particle, fine step) and rounded to a dyadic grid of 2^-40, so sums
// of fine increments are exact in double precision. A coarsened driver
// returns the exact sum of `stride` consecutive fine increments, which makes
// two runs at different step sizes share one Brownian path.
class BrownianDriver {
 public:
  BrownianDriver(std::size_t n_particles, double dt, int n_steps, std::uint64_t seed);

  // Driver whose increments are identically zero (deterministic tests).
  static BrownianDriver zero(std::size_t n_particles, double dt, int n_steps);

  // Same path observed on a grid `factor` times coarser. n_steps must be
  // divisible by factor.
  BrownianDriver coarsened(int factor) const;

  double increment(std::size_t particle, int step) const;

  std::size_t n_particles() const { return n_particles_; }
  double dt() const { return dt_fine_ * stride_; }
  int n_steps() const { return n_fine_steps_ / stride_; }
  double T() const { return dt() * n_steps(); }
  std::uint64_t seed() const { return seed_; }
  int stride() const { return stride_; }

 private:
  double fine_increment(std::size_t particle, std::uint64_t fine_step) const;

  std::size_t n_particles_;
  double dt_fine_;
  int n_fine_steps_;
  std::uint64_t seed_;
  int stride_ = 1;
  bool zero_ = false;
};

enum class ParticleMode { kDecoupled, kSelfConsistent };

class ParticleEnsemble {
 public:
  ParticleEnsemble(std::vector<double> positions, double t, std::uint64_t driver_seed,
                   ParticleMode mode);

  const std::vector<double>& positions() const { return positions_; }
  std::size_t size() const { return positions_.size(); }
  double t() const { return t_; }
  std::uint64_t driver_seed() const { return driver_seed_; }
  ParticleMode mode() const { return mode_; }
  int steps_taken() const { return steps_; }

  ParticleEnsemble with_mode(ParticleMode m) const;

 private:
  friend ParticleEnsemble em_step(const ParticleEnsemble&, const GridFunction&,
                                  const CoefficientSet&, const BrownianDriver&, int);

  // Per-particle Ito sum in anchored form: x = base + sigma * (w - w_anchor).
  // While sigma is unchanged, the noise term is evaluated from the Brownian
  // path itself rather than summed increment by increment, so additive-noise
  // runs at different step sizes reproduce each other bit for bit.
  struct PathState {
    std::vector<double> base;
    std::vector<double> sigma;
    std::vector<double> w;
    std::vector<double> w_anchor;
  };

  std::vector<double> positions_;
  double t_ = 0.0;
  std::uint64_t driver_seed_ = 0;
  ParticleMode mode_ = ParticleMode::kDecoupled;
  int steps_ = 0;
  PathState path_;
};

struct KdeConfig {
  std::optional<double> bandwidth;  // empty: Silverman's rule

  bool operator==(const KdeConfig&) const = default;
};

double silverman_bandwidth(const std::vector<double>& x);

// Inverse-CDF sampling against the piecewise-linear CDF of u0.
ParticleEnsemble sample_initial(const GridFunction& u0, std::size_t n, std::uint64_t seed);

// Gaussian-kernel estimate at cell centres, rescaled to unit mass.
GridFunction kde_density(const ParticleEnsemble& ens, const Mesh& mesh, const KdeConfig& cfg);
double kde_bandwidth(const ParticleEnsemble& ens, const KdeConfig& cfg);

// One Euler-Maruyama step
//   x' = x + E(x) b(rho(x)) dt + sqrt(2 a(rho(x))) dW,   rho = sample_at(density, .).
ParticleEnsemble em_step(const ParticleEnsemble& ens, const GridFunction& density,
                         const CoefficientSet& coeffs, const BrownianDriver& driver,
                         int step_index);

using EnsembleCheckpoints = std::vector<ParticleEnsemble>;

// Coefficients frozen along traj (frame at the latest checkpoint <= t).
// Returns one ensemble per trajectory checkpoint.
EnsembleCheckpoints simulate_decoupled(const ParticleEnsemble& ens0, const DensityTrajectory& traj,
                                       const CoefficientSet& coeffs,
                                       const BrownianDriver& driver);

// Density re-estimated from the ensemble by KDE before every step. Returns
// ensembles at checkpoint_times (default {0, T}).
EnsembleCheckpoints simulate_self_consistent(const ParticleEnsemble& ens0,
                                             const CoefficientSet& coeffs,
                                             const BrownianDriver& driver, const KdeConfig& kde,
                                             const Mesh& mesh,
                                             std::vector<double> checkpoint_times = {});

void write_ensemble_csv(std::ostream& os, const EnsembleCheckpoints& checkpoints);

}  // namespace nlfp
