#include "nlfp/particles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include "nlfp/error.hpp"
#include "nlfp/rng.hpp"

namespace nlfp {

namespace {

constexpr double kDyadicScale = 0x1.0p40;

bool on_grid(double t, double dt) {
  const double k = std::round(t / dt);
  return std::abs(k * dt - t) <= 1e-9 * std::max(1.0, std::abs(t));
}

}  // namespace

BrownianDriver::BrownianDriver(std::size_t n_particles, double dt, int n_steps,
                               std::uint64_t seed)
    : n_particles_(n_particles), dt_fine_(dt), n_fine_steps_(n_steps), seed_(seed) {
  if (n_particles == 0) throw ConfigError("BrownianDriver: n_particles must be >= 1");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("BrownianDriver: dt must be > 0");
  if (n_steps < 1) throw ConfigError("BrownianDriver: n_steps must be >= 1");
}

BrownianDriver BrownianDriver::zero(std::size_t n_particles, double dt, int n_steps) {
  BrownianDriver d(n_particles, dt, n_steps, 0);
  d.zero_ = true;
  return d;
}

BrownianDriver BrownianDriver::coarsened(int factor) const {
  if (factor < 1 || n_steps() % factor != 0)
    throw ConfigError("BrownianDriver: coarsening factor must divide the step count");
  BrownianDriver d = *this;
  d.stride_ = stride_ * factor;
  return d;
}

double BrownianDriver::fine_increment(std::size_t particle, std::uint64_t fine_step) const {
  const double z = rng::standard_normal(seed_, particle, fine_step, rng::Stream::kBrownian);
  return std::nearbyint(z * std::sqrt(dt_fine_) * kDyadicScale) / kDyadicScale;
}

double BrownianDriver::increment(std::size_t particle, int step) const {
  if (particle >= n_particles_ || step < 0 || step >= n_steps())
    throw DomainError("BrownianDriver: increment key out of range");
  if (zero_) return 0.0;
  double s = 0.0;
  const std::uint64_t first = static_cast<std::uint64_t>(step) * static_cast<std::uint64_t>(stride_);
  for (int m = 0; m < stride_; ++m) s += fine_increment(particle, first + static_cast<std::uint64_t>(m));
  return s;
}

ParticleEnsemble::ParticleEnsemble(std::vector<double> positions, double t,
                                   std::uint64_t driver_seed, ParticleMode mode)
    : positions_(std::move(positions)), t_(t), driver_seed_(driver_seed), mode_(mode) {
  for (double x : positions_)
    if (!std::isfinite(x)) throw DomainError("ParticleEnsemble: non-finite position");
  const std::size_t n = positions_.size();
  path_.base = positions_;
  path_.sigma.assign(n, std::numeric_limits<double>::quiet_NaN());
  path_.w.assign(n, 0.0);
  path_.w_anchor.assign(n, 0.0);
}

ParticleEnsemble ParticleEnsemble::with_mode(ParticleMode m) const {
  ParticleEnsemble e = *this;
  e.mode_ = m;
  return e;
}

double silverman_bandwidth(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  return 1.06 * sd * std::pow(n, -0.2);
}

ParticleEnsemble sample_initial(const GridFunction& u0, std::size_t n, std::uint64_t seed) {
  if (!u0.is_density()) throw DomainError("sample_initial: u0 must be a density");
  if (n == 0) throw DomainError("sample_initial: n must be >= 1");
  const Mesh& mesh = u0.mesh();
  const int cells = mesh.n_cells();
  std::vector<double> cdf(static_cast<std::size_t>(cells) + 1, 0.0);
  for (int i = 0; i < cells; ++i)
    cdf[static_cast<std::size_t>(i) + 1] = cdf[static_cast<std::size_t>(i)] + u0[i] * mesh.dx();
  const double total = cdf.back();

  std::vector<double> x(n);
  for (std::size_t p = 0; p < n; ++p) {
    const double target = rng::uniform(seed, p, 0, rng::Stream::kInitialSample) * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
    std::size_t i = static_cast<std::size_t>(it - cdf.begin());
    i = std::clamp<std::size_t>(i, 1, static_cast<std::size_t>(cells)) - 1;
    // Skip empty cells left of the target (only possible at the very end).
    while (cdf[i + 1] == cdf[i] && i > 0) --i;
    const double width = cdf[i + 1] - cdf[i];
    const double frac = width > 0.0 ? std::clamp((target - cdf[i]) / width, 0.0, 1.0) : 0.5;
    x[p] = mesh.x_min() + (static_cast<double>(i) + frac) * mesh.dx();
  }
  return ParticleEnsemble(std::move(x), 0.0, seed, ParticleMode::kDecoupled);
}

double kde_bandwidth(const ParticleEnsemble& ens, const KdeConfig& cfg) {
  if (ens.size() < 2) throw DomainError("kde_density: need at least 2 particles");
  if (cfg.bandwidth) {
    if (!(*cfg.bandwidth > 0.0)) throw DomainError("kde_density: bandwidth must be > 0");
    return *cfg.bandwidth;
  }
  const double h = silverman_bandwidth(ens.positions());
  if (!(h > 0.0))
    throw DomainError("kde_density: Silverman bandwidth is 0 (all particles at one point)");
  return h;
}

GridFunction kde_density(const ParticleEnsemble& ens, const Mesh& mesh, const KdeConfig& cfg) {
  const double h = kde_bandwidth(ens, cfg);
  const int cells = mesh.n_cells();
  const double dx = mesh.dx();
  // Kernel truncated at 8 bandwidths (tail weight below 1e-15).
  const double reach = 8.0 * h;
  const double inv_2h2 = 1.0 / (2.0 * h * h);
  std::vector<double> acc(static_cast<std::size_t>(cells), 0.0);
  for (double xp : ens.positions()) {
    const int lo = std::max(0, static_cast<int>(std::floor((xp - reach - mesh.x_min()) / dx)));
    const int hi = std::min(cells - 1, static_cast<int>(std::ceil((xp + reach - mesh.x_min()) / dx)));
    for (int j = lo; j <= hi; ++j) {
      const double d = mesh.center(j) - xp;
      acc[static_cast<std::size_t>(j)] += std::exp(-d * d * inv_2h2);
    }
  }
  double total = 0.0;
  for (double v : acc) total += v;
  total *= dx;
  if (!(total > 0.0)) throw DomainError("kde_density: estimate has zero mass on the mesh");
  for (double& v : acc) v /= total;
  return GridFunction::density(mesh, std::move(acc));
}

ParticleEnsemble em_step(const ParticleEnsemble& ens, const GridFunction& density,
                         const CoefficientSet& coeffs, const BrownianDriver& driver,
                         int step_index) {
  if (ens.size() != driver.n_particles())
    throw ConfigError("em_step: ensemble size differs from driver particle count");
  if (step_index < 0 || step_index >= driver.n_steps())
    throw DomainError("em_step: step index outside the driver grid");

  const double dt = driver.dt();
  const double sigma_floor = std::sqrt(2.0 * coeffs.beta.gamma0) * (1.0 - 1e-12);
  const double drift_cap = coeffs.E.sup_bound * coeffs.b.sup_bound * (1.0 + 1e-12);

  ParticleEnsemble out = ens;
  auto& st = out.path_;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const double x = ens.positions_[i];
    const double rho = sample_at(density, x);
    const double sigma = std::sqrt(2.0 * coeffs.a(rho));
    if (!(sigma >= sigma_floor))
      throw SolverError("em_step: diffusion below sqrt(2 gamma0) at particle " + std::to_string(i));
    const double rate = coeffs.b.eval(rho);
    double drift = 0.0;
    if (rate != 0.0) {
      drift = coeffs.E.eval(x) * rate;
      if (!(std::abs(drift) <= drift_cap))
        throw SolverError("em_step: drift exceeds sup|E| sup b at particle " + std::to_string(i));
    }
    const double dw = driver.increment(i, step_index);

    if (sigma != st.sigma[i]) {
      st.base[i] = x;
      st.w_anchor[i] = st.w[i];
      st.sigma[i] = sigma;
    }
    st.base[i] += drift * dt;
    st.w[i] += dw;
    const double next = st.base[i] + sigma * (st.w[i] - st.w_anchor[i]);
    if (!std::isfinite(next))
      throw SolverError("em_step: non-finite update at particle " + std::to_string(i));
    out.positions_[i] = next;
  }
  out.t_ = (step_index + 1) * dt;
  out.steps_ = ens.steps_ + 1;
  return out;
}

namespace {

void check_driver(const ParticleEnsemble& ens0, const BrownianDriver& driver) {
  if (ens0.size() != driver.n_particles())
    throw ConfigError("simulate: ensemble size differs from driver particle count");
}

std::vector<int> checkpoint_steps(const std::vector<double>& times, const BrownianDriver& driver) {
  const double T = driver.T();
  if (std::abs(times.back() - T) > 1e-9 * std::max(1.0, T))
    throw ConfigError("simulate: driver horizon differs from the final checkpoint");
  std::vector<int> steps;
  for (double t : times) {
    if (!on_grid(t, driver.dt()))
      throw ConfigError("simulate: checkpoint not on the driver time grid (grid mismatch)");
    steps.push_back(static_cast<int>(std::llround(t / driver.dt())));
  }
  return steps;
}

}  // namespace

EnsembleCheckpoints simulate_decoupled(const ParticleEnsemble& ens0, const DensityTrajectory& traj,
                                       const CoefficientSet& coeffs,
                                       const BrownianDriver& driver) {
  check_driver(ens0, driver);
  const std::vector<int> cp = checkpoint_steps(traj.times, driver);
  EnsembleCheckpoints out{ens0.with_mode(ParticleMode::kDecoupled)};
  ParticleEnsemble cur = out.front();
  std::size_t next = 1;
  for (int n = 0; n < driver.n_steps(); ++n) {
    const int k = traj.frame_at_or_before(n * driver.dt());
    cur = em_step(cur, traj.frames[static_cast<std::size_t>(k)], coeffs, driver, n);
    if (next < cp.size() && cp[next] == n + 1) out.push_back(cur), ++next;
  }
  return out;
}

EnsembleCheckpoints simulate_self_consistent(const ParticleEnsemble& ens0,
                                             const CoefficientSet& coeffs,
                                             const BrownianDriver& driver, const KdeConfig& kde,
                                             const Mesh& mesh,
                                             std::vector<double> checkpoint_times) {
  if (ens0.size() < 100) throw DomainError("simulate_self_consistent: need at least 100 particles");
  check_driver(ens0, driver);
  if (checkpoint_times.empty()) checkpoint_times = {0.0, driver.T()};
  if (checkpoint_times.front() != 0.0)
    throw ConfigError("simulate_self_consistent: checkpoints must start at 0");
  const std::vector<int> cp = checkpoint_steps(checkpoint_times, driver);
  EnsembleCheckpoints out{ens0.with_mode(ParticleMode::kSelfConsistent)};
  ParticleEnsemble cur = out.front();
  std::size_t next = 1;
  for (int n = 0; n < driver.n_steps(); ++n) {
    const GridFunction rho = kde_density(cur, mesh, kde);
    cur = em_step(cur, rho, coeffs, driver, n);
    if (next < cp.size() && cp[next] == n + 1) out.push_back(cur), ++next;
  }
  return out;
}

void write_ensemble_csv(std::ostream& os, const EnsembleCheckpoints& checkpoints) {
  os << "t,particle_id,x\n";
  char buf[96];
  for (const auto& e : checkpoints)
    for (std::size_t i = 0; i < e.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%zu,%.17g\n", e.t(), i, e.positions()[i]);
      os << buf;
    }
}

}  // namespace nlfp
