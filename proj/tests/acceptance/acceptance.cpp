// Acceptance gate: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "nlfp/coefficients.hpp"
#include "nlfp/fpke.hpp"
#include "nlfp/particles.hpp"
#include "nlfp/scenario.hpp"
#include "nlfp/verify.hpp"

using namespace nlfp;

namespace {

struct Verdict {
  bool ok = false;
  std::string detail;
};

GridFunction gaussian(const Mesh& m, double sd) {
  return project_density([sd](double x) { return gaussian_pdf(x, 0.0, sd); }, m);
}

std::vector<double> grid_times(double T, double h) {
  std::vector<double> t;
  const int n = static_cast<int>(std::llround(T / h));
  for (int k = 0; k <= n; ++k) t.push_back(k * h);
  return t;
}

SolverConfig solver(double dt, double T, std::vector<double> cps) {
  SolverConfig c;
  c.dt = dt;
  c.T = T;
  c.checkpoint_times = std::move(cps);
  return c;
}

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Verdict heat_kernel() {
  const Mesh m(-8.0, 8.0, 400);
  const Solution s = solve(gaussian(m, 0.5), preset("linear-heat"), solver(1e-3, 0.5, {0.0, 0.5}));
  const double d = l1_distance(s.trajectory.frames.back(), gaussian(m, std::sqrt(0.25 + 1.0)));
  return {d <= 1e-2, fmt("L1 to Gaussian(0, 1.25) = %.3e (<= 1e-2)", d)};
}

Verdict conservation() {
  double worst_drift = 0.0, worst_min = INFINITY;
  std::string names;
  for (const auto& entry : std::filesystem::directory_iterator(NLFP_SCENARIO_DIR)) {
    if (entry.path().extension() != ".json") continue;
    const ScenarioConfig cfg = load_config(entry.path().string());
    RunOptions opts;
    opts.output_dir = (std::filesystem::temp_directory_path() / "nlfp_acceptance" / cfg.name).string();
    const RunSummary r = run_scenario(cfg, opts);
    for (const auto& c : r.checks) {
      if (c.type == "mass_conservation") worst_drift = std::max(worst_drift, c.metric);
      if (c.type == "positivity") worst_min = std::min(worst_min, c.metric);
    }
    names += (names.empty() ? "" : ",") + cfg.name;
  }
  const bool ok = !names.empty() && worst_drift <= 1e-8 && worst_min >= -1e-12;
  return {ok, fmt("max mass drift %.3e (<= 1e-8), min u %.3e (>= -1e-12)", worst_drift, worst_min) +
                  " over " + names};
}

Verdict weak_form() {
  const CoefficientSet c = preset("cubic-tanh");
  const WeakFormTestFunction phi(0.0, 2.0);
  double r[2];
  for (int lev = 0; lev < 2; ++lev) {
    const Mesh m(-8.0, 8.0, 400 << lev);
    const double dt = 1e-3 / (1 << lev);
    const Solution s = solve(gaussian(m, 0.5), c, solver(dt, 0.5, grid_times(0.5, dt)));
    r[lev] = weak_form_residual(s.trajectory, phi, c, 0.5);
  }
  return {r[0] >= 3.0 * r[1], fmt("residual %.3e -> %.3e, factor %.2f (>= 3)", r[0], r[1], r[0] / r[1])};
}

Verdict superposition() {
  const Mesh m(-8.0, 8.0, 400);
  const CoefficientSet c = preset("linear-heat");
  const Solution s = solve(gaussian(m, 0.5), c, solver(1e-3, 0.5, grid_times(0.5, 0.05)));
  auto terminal = [&](std::size_t n) {
    const auto e0 = sample_initial(s.trajectory.frames[0], n, 1);
    const auto cps = simulate_decoupled(e0, s.trajectory, c, BrownianDriver(n, 1e-3, 500, 1));
    return superposition_report(s.trajectory, cps, m, {}).l1_distances.back();
  };
  const double d1 = terminal(10000), d4 = terminal(40000);
  return {d1 <= 0.05 && d4 <= d1 + 0.005,
          fmt("terminal L1 N=1e4 %.4f (<= 0.05), N=4e4 %.4f (<= N=1e4 + 0.005)", d1, d4)};
}

Verdict pathwise_uniqueness() {
  const Mesh m(-8.0, 8.0, 400);
  const GridFunction u0 = gaussian(m, 0.5);
  const auto cub = preset("cubic-tanh");
  const auto heat = preset("linear-heat");
  const Solution sc = solve(u0, cub, solver(1e-3, 0.5, grid_times(0.5, 0.05)));
  const Solution sh = solve(u0, heat, solver(1e-3, 0.5, grid_times(0.5, 0.05)));
  const double same = coupling_experiment(cub, sc.trajectory, u0, 7, 1000, {2.5e-3}).sup_path_distance;
  const double additive =
      coupling_experiment(heat, sh.trajectory, u0, 7, 1000, {1e-2, 5e-3, 2.5e-3}).sup_path_distance;
  return {same == 0.0 && additive == 0.0,
          fmt("identical basis sup|X-Y| = %g, linear-heat across dt levels = %g (both exactly 0)", same,
              additive)};
}

Verdict strong_refinement() {
  const Mesh m(-8.0, 8.0, 400);
  const GridFunction u0 = gaussian(m, 0.5);
  const auto cub = preset("cubic-tanh");
  const Solution s = solve(u0, cub, solver(1e-3, 0.5, grid_times(0.5, 0.01)));
  const auto r = coupling_experiment(cub, s.trajectory, u0, 7, 1000, {1e-2, 5e-3, 2.5e-3});
  const auto& d = r.distances_by_level;
  const bool ok = d.size() == 2 && d[1] < d[0];
  return {ok, fmt("coupled sup-path distances %.4f -> %.4f (strictly decreasing)", d.at(0), d.at(1))};
}

Verdict lipschitz() {
  const auto cub = preset("cubic-tanh");
  double sup[2], viol[2];
  for (int lev = 0; lev < 2; ++lev) {
    const Mesh m(-8.0, 8.0, 400 << lev);
    const Solution s = solve(gaussian(m, 0.5), cub, solver(1e-3, 0.5, grid_times(0.5, 0.01)));
    const auto cert = lipschitz_certificate(s.trajectory, cub, 3.0, {}, 10000, 11);
    sup[lev] = cert.f_R_sup;
    viol[lev] = cert.violation_rate;
  }
  const double change = std::abs(sup[1] - sup[0]) / sup[0];
  return {viol[0] == 0.0 && viol[1] == 0.0 && sup[0] > 0.0 && change <= 0.2,
          fmt("violation rates %g / %g, ||f_R||_inf %.4f -> ", viol[0], viol[1], sup[0]) +
              fmt("%.4f (change %.1f%% <= 20%%)", sup[1], 100.0 * change)};
}

Verdict maximal() {
  std::mt19937_64 gen(2024);
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 4 + static_cast<int>(gen() % 253);
    const Mesh m(0.0, static_cast<double>(n), n);  // dx = 1
    std::vector<double> g(n);
    for (auto& v : g) v = static_cast<double>(gen() % 4096) / 64.0;
    const int K = 1 + static_cast<int>(gen() % n);
    const GridFunction M = maximal_function(GridFunction(m, g), K);
    for (int i = 0; i < n; ++i) {
      double best = 0.0;
      for (int k = 1; k <= K; ++k) {
        double s = 0.0;
        for (int j = i - k + 1; j <= i + k - 1; ++j)
          if (j >= 0 && j < n) s += g[j];
        best = std::max(best, s / (2 * k - 1));
      }
      if (M[i] != best) ++mismatches;
    }
  }
  return {mismatches == 0, fmt("%g mismatching cells over 100 random inputs (exact equality)", mismatches)};
}

Verdict validator() {
  bool presets_ok = true;
  for (const auto& name : preset_names())
    presets_ok = presets_ok && validate_conditions(preset(name), {-5.0, 5.0}, 4000, 1).all_passed();
  CustomCoefficientSpec spec;
  spec.beta = {0.0, 0.0, 0.0, 1.0};
  spec.gamma0 = 1.0;
  const auto r = validate_conditions(make_custom(spec), {-5.0, 5.0}, 4000, 1);
  const auto& ii = r.find("ii");
  const bool degenerate_caught = !ii.passed && ii.witness.size() == 2;
  return {presets_ok && degenerate_caught,
          std::string("presets ") + (presets_ok ? "pass" : "FAIL") + "; beta=r^3 fails monotonicity" +
              fmt(" (min quotient %.3e at r1=%.3e, r2=%.3e)", ii.observed, ii.witness.at(0), ii.witness.at(1))};
}

Verdict jacobian() {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  const CoefficientSet c = preset("cubic-tanh");
  const double dt = 1e-3, dx = 0.04;
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(16), us(16);
    for (auto& x : v) x = u(gen);
    for (auto& x : us) x = u(gen);
    const Tridiagonal J = diffusion_jacobian(v, c, dt, dx);
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(v[j]));
      auto up = v, dn = v;
      up[j] += h;
      dn[j] -= h;
      const auto rp = diffusion_residual(up, us, c, dt, dx);
      const auto rm = diffusion_residual(dn, us, c, dt, dx);
      for (std::size_t i = 0; i < v.size(); ++i) {
        const double fd = (rp[i] - rm[i]) / (2.0 * h);
        const double an = i == j ? J.diag[i] : j + 1 == i ? J.lower[i] : i + 1 == j ? J.upper[i] : 0.0;
        worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(an)));
      }
    }
  }
  return {worst <= 1e-5, fmt("max relative entry error %.3e over 50 states (<= 1e-5)", worst)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Verdict()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "heat-kernel oracle", 10, heat_kernel},
      {2, "conservation and positivity (bundled scenarios)", 300, conservation},
      {3, "weak-form residual refinement", 60, weak_form},
      {4, "superposition", 120, superposition},
      {5, "discrete pathwise uniqueness", 30, pathwise_uniqueness},
      {6, "strong-functional refinement", 120, strong_refinement},
      {7, "Lipschitz certificate", 60, lipschitz},
      {8, "maximal function vs brute force", 10, maximal},
      {9, "coefficient validator", 5, validator},
      {10, "Newton Jacobian", 5, jacobian},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool ok = v.ok && in_time;
    if (!ok) ++failed;
    std::printf("[%s] %2d %s: %s; %.2fs (budget %.0fs)%s\n", ok ? "PASS" : "FAIL", c.id, c.name,
                v.detail.c_str(), secs, c.budget_s, in_time ? "" : " OVER BUDGET");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
