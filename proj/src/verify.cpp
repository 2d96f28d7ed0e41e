#include "nlfp/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "nlfp/error.hpp"
#include "nlfp/rng.hpp"

namespace nlfp {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void row(std::ostream& os, const char* type, const std::string& key, double v) {
  os << type << ',' << key << ',' << num(v) << '\n';
}

std::string indexed(const char* key, std::size_t k) {
  return std::string(key) + "[" + std::to_string(k) + "]";
}

double max_path_distance(const EnsembleCheckpoints& a, const EnsembleCheckpoints& b) {
  if (a.size() != b.size()) throw ConfigError("coupling: checkpoint counts differ between runs");
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t i = 0; i < a[k].size(); ++i)
      d = std::max(d, std::abs(a[k].positions()[i] - b[k].positions()[i]));
  return d;
}

}  // namespace

double SuperpositionReport::max_distance() const {
  return l1_distances.empty() ? 0.0 : *std::max_element(l1_distances.begin(), l1_distances.end());
}

SuperpositionReport superposition_report(const DensityTrajectory& traj,
                                         const EnsembleCheckpoints& checkpoints, const Mesh& mesh,
                                         const KdeConfig& kde) {
  if (checkpoints.size() != traj.times.size())
    throw ConfigError("superposition_report: ensemble checkpoints do not align with trajectory");
  if (!(mesh == traj.mesh)) throw ConfigError("superposition_report: mesh differs from trajectory");
  SuperpositionReport r;
  r.n_particles = checkpoints.front().size();
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    const double t = traj.times[k];
    if (std::abs(checkpoints[k].t() - t) > 1e-9 * std::max(1.0, traj.final_time()))
      throw ConfigError("superposition_report: misaligned checkpoint at t=" + num(t));
    r.checkpoint_times.push_back(t);
    r.kde_bandwidths.push_back(kde_bandwidth(checkpoints[k], kde));
    r.l1_distances.push_back(l1_distance(kde_density(checkpoints[k], mesh, kde), traj.frames[k]));
  }
  return r;
}

CouplingReport coupling_experiment(const CoefficientSet& coeffs, const DensityTrajectory& traj,
                                   const GridFunction& u0, std::uint64_t seed, std::size_t n,
                                   const std::vector<double>& dt_levels) {
  if (dt_levels.empty()) throw ConfigError("coupling: dt_levels is empty");
  for (double dt : dt_levels)
    if (!(dt > 0.0)) throw ConfigError("coupling: dt_levels must be positive");
  for (std::size_t k = 1; k < dt_levels.size(); ++k)
    if (std::abs(dt_levels[k] * 2.0 - dt_levels[k - 1]) > 1e-12 * dt_levels[k - 1])
      throw ConfigError("coupling: dt_levels must form a halving chain");

  const double fine_dt = dt_levels.back();
  const double T = traj.final_time();
  const int fine_steps = static_cast<int>(std::llround(T / fine_dt));
  if (std::abs(fine_steps * fine_dt - T) > 1e-9 * std::max(1.0, T))
    throw ConfigError("coupling: finest dt does not divide the horizon");

  auto run = [&](int factor) {
    const BrownianDriver fine(n, fine_dt, fine_steps, seed);
    const ParticleEnsemble ens0 = sample_initial(u0, n, seed);
    return simulate_decoupled(ens0, traj, coeffs, fine.coarsened(factor));
  };

  CouplingReport rep;
  rep.refinement_levels = dt_levels;
  if (dt_levels.size() == 1) {
    rep.distances_by_level.push_back(max_path_distance(run(1), run(1)));
  } else {
    const int levels = static_cast<int>(dt_levels.size());
    EnsembleCheckpoints prev = run(1 << (levels - 1));
    for (int k = 1; k < levels; ++k) {
      EnsembleCheckpoints cur = run(1 << (levels - 1 - k));
      rep.distances_by_level.push_back(max_path_distance(prev, cur));
      prev = std::move(cur);
    }
  }
  rep.sup_path_distance =
      *std::max_element(rep.distances_by_level.begin(), rep.distances_by_level.end());
  rep.strictly_decreasing = true;
  for (std::size_t k = 1; k < rep.distances_by_level.size(); ++k)
    if (!(rep.distances_by_level[k] < rep.distances_by_level[k - 1])) rep.strictly_decreasing = false;
  return rep;
}

GridFunction maximal_function(const GridFunction& g, double R_max) {
  const Mesh& mesh = g.mesh();
  const double dx = mesh.dx();
  if (R_max < dx * (1.0 - 1e-12)) throw DomainError("maximal_function: R_max < dx");
  const int n = g.size();
  for (double v : g.values())
    if (v < 0.0) throw DomainError("maximal_function: g must be nonnegative");
  const int K = std::max(1, static_cast<int>(std::floor(R_max / dx + 1e-9)));

  // Windows grow outward from x_i one cell per side. Unlike prefix-sum
  // differences this keeps the k = 1 average equal to g_i, so Mg >= g holds
  // in floating point too.
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double sum = g[i];
    double best = sum;
    for (int k = 2; k <= K; ++k) {
      if (i - k + 1 >= 0) sum += g[i - k + 1];
      if (i + k - 1 < n) sum += g[i + k - 1];
      best = std::max(best, sum / static_cast<double>(2 * k - 1));
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return GridFunction(mesh, std::move(out));
}

namespace {

double inv(double p) { return std::isinf(p) ? 0.0 : 1.0 / p; }

void check_exponents(const Exponents& e) {
  for (double p : {e.p, e.q, e.p_dual, e.q_dual})
    if (!(p >= 1.0)) throw ConfigError("lipschitz_certificate: exponents must lie in [1, inf]");
  if (std::abs(inv(e.p) + inv(e.p_dual) - 1.0) > 1e-12 ||
      std::abs(inv(e.q) + inv(e.q_dual) - 1.0) > 1e-12)
    throw ConfigError("lipschitz_certificate: exponent duality 1/p+1/p'=1/q+1/q'=1 violated");
}

// Larger of the two one-sided difference quotients at each centre: bounds
// the slope of the piecewise-linear interpolant on both adjacent segments.
std::vector<double> upper_gradient(const std::vector<double>& v, double dx) {
  const std::size_t n = v.size();
  std::vector<double> g(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    if (i > 0) s = std::max(s, std::abs(v[i] - v[i - 1]));
    if (i + 1 < n) s = std::max(s, std::abs(v[i + 1] - v[i]));
    g[i] = s / dx;
  }
  return g;
}

double interpolate(const Mesh& mesh, const std::vector<double>& v, double x) {
  const double s = (x - mesh.center(0)) / mesh.dx();
  if (s <= 0.0) return v.front();
  const int n = mesh.n_cells();
  if (s >= n - 1) return v.back();
  const int j = static_cast<int>(s);
  const double w = s - j;
  // a + w (b - a) reproduces constant data exactly; (1 - w) a + w b does not.
  const double a = v[static_cast<std::size_t>(j)];
  return a + w * (v[static_cast<std::size_t>(j) + 1] - a);
}

double lp_norm_on_ball(const GridFunction& f, double R, double p) {
  const Mesh& m = f.mesh();
  double acc = 0.0;
  for (int i = 0; i < f.size(); ++i) {
    if (std::abs(m.center(i)) > R) continue;
    const double v = std::abs(f[i]);
    acc = std::isinf(p) ? std::max(acc, v) : acc + std::pow(v, p) * m.dx();
  }
  return std::isinf(p) ? acc : std::pow(acc, 1.0 / p);
}

}  // namespace

LipschitzCertificate certify_one_sided(const Mesh& mesh, const std::vector<CoefficientFrame>& frames,
                                       double R, const Exponents& exponents, std::size_t n_pairs,
                                       std::uint64_t seed) {
  check_exponents(exponents);
  if (frames.empty()) throw DomainError("lipschitz_certificate: no frames");
  if (!(R > 0.0) || -R < mesh.x_min() || R > mesh.x_max())
    throw DomainError("lipschitz_certificate: B_R must lie inside the mesh");
  if (n_pairs < 1000) throw DomainError("lipschitz_certificate: n_pairs must be >= 1000");
  const auto n = static_cast<std::size_t>(mesh.n_cells());
  for (const auto& f : frames)
    if (f.drift.size() != n || f.sigma.size() != n)
      throw DomainError("lipschitz_certificate: frame length differs from the mesh");

  std::vector<GridFunction> unscaled;
  for (const auto& f : frames) {
    const GridFunction mf = maximal_function(GridFunction(mesh, upper_gradient(f.drift, mesh.dx())), R);
    const GridFunction ms = maximal_function(GridFunction(mesh, upper_gradient(f.sigma, mesh.dx())), R);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
      const int c = static_cast<int>(i);
      v[i] = mf[c] + ms[c] * ms[c];
    }
    unscaled.emplace_back(mesh, std::move(v));
  }

  struct Sample {
    double lhs;
    double majorant;  // |2(x-y)(F(x)-F(y))| + |sigma(x)-sigma(y)|^2
    double base;
    double d2;
  };
  std::vector<Sample> samples(n_pairs);
  const std::uint64_t K = frames.size();
  for (std::size_t s = 0; s < n_pairs; ++s) {
    const auto w = rng::block(seed, s, 0, rng::Stream::kCertificate);
    const std::size_t k = std::min<std::uint64_t>(K - 1, static_cast<std::uint64_t>(rng::to_unit(w[0]) * K));
    const double x = -R + 2.0 * R * rng::to_unit(w[1]);
    const double y = -R + 2.0 * R * rng::to_unit(w[2]);
    const auto& fr = frames[k];
    const double dF = interpolate(mesh, fr.drift, x) - interpolate(mesh, fr.drift, y);
    const double dS = interpolate(mesh, fr.sigma, x) - interpolate(mesh, fr.sigma, y);
    const double d2 = (x - y) * (x - y);
    samples[s] = {2.0 * (x - y) * dF + dS * dS, std::abs(2.0 * (x - y) * dF) + dS * dS,
                  (sample_at(unscaled[k], x) + sample_at(unscaled[k], y)) * d2, d2};
  }

  // A dissipative drift makes the one-sided left side negative almost
  // everywhere, so its smallest constant is often 0 and says nothing about
  // the mesh. Calibrating on the two-sided majorant keeps C tied to the
  // gradients while still implying the one-sided inequality.
  const auto ratio = [](double num, double base) {
    if (num <= 0.0) return 0.0;
    return base > 0.0 ? num / base : std::numeric_limits<double>::infinity();
  };
  double C = 0.0, C1 = 0.0;
  for (const auto& s : samples) {
    C = std::max(C, ratio(s.majorant, s.base));
    C1 = std::max(C1, ratio(s.lhs, s.base));
  }

  LipschitzCertificate cert;
  cert.R = R;
  cert.exponents = exponents;
  cert.calibrated_C = C;
  cert.one_sided_C = C1;
  cert.n_pairs = n_pairs;

  std::size_t violations = 0;
  double mn = std::numeric_limits<double>::infinity(), mx = -mn, sum = 0.0;
  std::size_t counted = 0;
  for (const auto& s : samples) {
    const double rhs = s.base == 0.0 ? 0.0 : C * s.base;
    if (s.lhs > rhs * (1.0 + 1e-12)) ++violations;
    if (s.d2 > 0.0 && std::isfinite(rhs)) {
      const double m = (rhs - s.lhs) / s.d2;
      mn = std::min(mn, m);
      mx = std::max(mx, m);
      sum += m;
      ++counted;
    }
  }
  cert.violation_rate = static_cast<double>(violations) / static_cast<double>(n_pairs);
  if (counted > 0) cert.margin_stats = {mn, sum / static_cast<double>(counted), mx};

  const double scale = std::isfinite(C) ? C : 0.0;
  std::vector<double> norms;
  for (const auto& u : unscaled) {
    std::vector<double> v(u.values().begin(), u.values().end());
    for (double& x : v) x *= scale;
    cert.f_R.emplace_back(mesh, std::move(v));
    norms.push_back(lp_norm_on_ball(cert.f_R.back(), R, exponents.p));
    cert.f_R_sup = std::max(cert.f_R_sup, lp_norm_on_ball(cert.f_R.back(), R, INFINITY));
  }
  if (std::isinf(exponents.q) || frames.size() == 1) {
    cert.f_R_lq_lp = *std::max_element(norms.begin(), norms.end());
  } else {
    // Trapezoid weights in time.
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
      const double h = frames[k + 1].t - frames[k].t;
      acc += 0.5 * h * (std::pow(norms[k], exponents.q) + std::pow(norms[k + 1], exponents.q));
    }
    cert.f_R_lq_lp = std::pow(acc, 1.0 / exponents.q);
  }
  return cert;
}

LipschitzCertificate lipschitz_certificate(const DensityTrajectory& traj,
                                           const CoefficientSet& coeffs, double R,
                                           const Exponents& exponents, std::size_t n_pairs,
                                           std::uint64_t seed) {
  check_exponents(exponents);
  const Mesh& mesh = traj.mesh;
  std::vector<CoefficientFrame> frames;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    CoefficientFrame f{traj.times[k], {}, {}};
    for (int i = 0; i < mesh.n_cells(); ++i) {
      const double u = traj.frames[k][i];
      f.drift.push_back(coeffs.E.eval(mesh.center(i)) * coeffs.b.eval(u));
      f.sigma.push_back(std::sqrt(2.0 * coeffs.a(u)));
    }
    frames.push_back(std::move(f));
  }
  return certify_one_sided(mesh, frames, R, exponents, n_pairs, seed);
}

double bounded_density_check(const DensityTrajectory& traj) {
  double m = 0.0;
  for (const auto& f : traj.frames) m = std::max(m, f.max_value());
  return m;
}

void write_report_csv(std::ostream& os, const SuperpositionReport& r) {
  os << "report_type,key,value\n";
  row(os, "superposition", "n_particles", static_cast<double>(r.n_particles));
  for (std::size_t k = 0; k < r.checkpoint_times.size(); ++k) {
    row(os, "superposition", indexed("t", k), r.checkpoint_times[k]);
    row(os, "superposition", indexed("l1_distance", k), r.l1_distances[k]);
    row(os, "superposition", indexed("kde_bandwidth", k), r.kde_bandwidths[k]);
  }
  row(os, "superposition", "max_l1_distance", r.max_distance());
}

void write_report_csv(std::ostream& os, const CouplingReport& r) {
  os << "report_type,key,value\n";
  for (std::size_t k = 0; k < r.refinement_levels.size(); ++k)
    row(os, "coupling", indexed("dt", k), r.refinement_levels[k]);
  for (std::size_t k = 0; k < r.distances_by_level.size(); ++k)
    row(os, "coupling", indexed("sup_path_distance", k), r.distances_by_level[k]);
  row(os, "coupling", "sup_path_distance", r.sup_path_distance);
  row(os, "coupling", "strictly_decreasing", r.strictly_decreasing ? 1.0 : 0.0);
}

void write_report_csv(std::ostream& os, const LipschitzCertificate& r) {
  os << "report_type,key,value\n";
  const char* t = "lipschitz_certificate";
  row(os, t, "R", r.R);
  row(os, t, "p", r.exponents.p);
  row(os, t, "q", r.exponents.q);
  row(os, t, "p_dual", r.exponents.p_dual);
  row(os, t, "q_dual", r.exponents.q_dual);
  row(os, t, "n_pairs", static_cast<double>(r.n_pairs));
  row(os, t, "calibrated_C", r.calibrated_C);
  row(os, t, "one_sided_C", r.one_sided_C);
  row(os, t, "violation_rate", r.violation_rate);
  row(os, t, "f_R_sup", r.f_R_sup);
  row(os, t, "f_R_lq_lp", r.f_R_lq_lp);
  row(os, t, "margin_min", r.margin_stats.min);
  row(os, t, "margin_mean", r.margin_stats.mean);
  row(os, t, "margin_max", r.margin_stats.max);
}

std::string summarize(const SuperpositionReport& r) {
  std::ostringstream os;
  os << "superposition: N=" << r.n_particles << ", checkpoints=" << r.checkpoint_times.size()
     << ", max L1(KDE, PDE)=" << num(r.max_distance());
  if (!r.l1_distances.empty()) os << ", terminal=" << num(r.l1_distances.back());
  return os.str();
}

std::string summarize(const CouplingReport& r) {
  std::ostringstream os;
  os << "coupling: sup|X-Y|=" << num(r.sup_path_distance) << ", by level [";
  for (std::size_t k = 0; k < r.distances_by_level.size(); ++k)
    os << (k ? ", " : "") << num(r.distances_by_level[k]);
  os << "], strictly decreasing=" << (r.strictly_decreasing ? "yes" : "no");
  return os.str();
}

std::string summarize(const LipschitzCertificate& r) {
  std::ostringstream os;
  os << "lipschitz_certificate: R=" << num(r.R) << ", C=" << num(r.calibrated_C)
     << ", ||f_R||_inf=" << num(r.f_R_sup) << ", violation rate=" << num(r.violation_rate);
  return os.str();
}

}  // namespace nlfp
