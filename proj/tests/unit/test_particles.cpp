#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nlfp/error.hpp"
#include "nlfp/fpke.hpp"
#include "nlfp/particles.hpp"
#include "nlfp/rng.hpp"

using namespace nlfp;

namespace {

GridFunction gaussian(const Mesh& m, double sd, double mean = 0.0) {
  return project_density([=](double x) { return gaussian_pdf(x, mean, sd); }, m);
}

double sample_mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_var(const std::vector<double>& x) {
  const double m = sample_mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double normal_cdf(double x, double sd) { return 0.5 * std::erfc(-x / (sd * std::sqrt(2.0))); }

DensityTrajectory heat_trajectory(const Mesh& m, double T, double every) {
  SolverConfig c;
  c.dt = 1e-3;
  c.T = T;
  c.checkpoint_times.clear();
  for (int k = 0; k * every <= T + 1e-12; ++k) c.checkpoint_times.push_back(k * every);
  return solve(gaussian(m, 0.5), preset("linear-heat"), c).trajectory;
}

}  // namespace

TEST_CASE("Brownian driver: keyed, reproducible, refinement-consistent") {
  const BrownianDriver d(8, 1e-3, 16, 5);
  CHECK(d.increment(3, 7) == BrownianDriver(8, 1e-3, 16, 5).increment(3, 7));
  CHECK(d.increment(3, 7) != d.increment(4, 7));
  CHECK(d.increment(3, 7) != BrownianDriver(8, 1e-3, 16, 6).increment(3, 7));

  const BrownianDriver c = d.coarsened(4);
  CHECK(c.n_steps() == 4);
  CHECK(c.dt() == doctest::Approx(4e-3));
  for (std::size_t p = 0; p < 8; ++p)
    for (int k = 0; k < 4; ++k) {
      double s = 0.0;
      for (int m = 0; m < 4; ++m) s += d.increment(p, 4 * k + m);
      CHECK(c.increment(p, k) == s);  // exact: increments live on a dyadic grid
    }
  CHECK(d.coarsened(2).coarsened(2).increment(1, 2) == c.increment(1, 2));
  CHECK_THROWS_AS(d.coarsened(3), ConfigError);
  CHECK_THROWS_AS(d.increment(8, 0), DomainError);
  CHECK_THROWS_AS(d.increment(0, 16), DomainError);
  CHECK(BrownianDriver::zero(3, 0.1, 5).increment(2, 4) == 0.0);
}

TEST_CASE("Brownian increments are N(0, dt)") {
  const int n = 20000;
  const BrownianDriver d(n, 0.01, 1, 11);
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = d.increment(i, 0);
  CHECK(std::abs(sample_mean(w)) < 5.0 * 0.1 / std::sqrt(n));
  CHECK(sample_var(w) == doctest::Approx(0.01).epsilon(5.0 * std::sqrt(2.0 / n)));
}

TEST_CASE("initial sampling") {
  const Mesh m(-8.0, 8.0, 400);
  SUBCASE("indicator on [0,1]: mean 0.5 within 3 sigma / sqrt(n)") {
    const auto box = project_density([](double x) { return indicator(x, 0.0, 1.0); }, m);
    const auto e = sample_initial(box, 100000, 3);
    CHECK(std::abs(sample_mean(e.positions()) - 0.5) <= 0.01);
    CHECK(*std::min_element(e.positions().begin(), e.positions().end()) >= 0.0);
    CHECK(*std::max_element(e.positions().begin(), e.positions().end()) <= 1.0);
  }
  SUBCASE("Gaussian(0, 0.25): variance within 0.01") {
    const auto e = sample_initial(gaussian(m, 0.5), 100000, 4);
    CHECK(sample_var(e.positions()) == doctest::Approx(0.25).epsilon(0.04));
  }
  SUBCASE("deterministic per seed") {
    const auto g = gaussian(m, 0.5);
    CHECK(sample_initial(g, 1, 9).positions() == sample_initial(g, 1, 9).positions());
    CHECK(sample_initial(g, 1, 9).positions() != sample_initial(g, 1, 10).positions());
    CHECK_THROWS_AS(sample_initial(GridFunction(m, std::vector<double>(400, 0.0)), 5, 1),
                    DomainError);
  }
}

TEST_CASE("kernel density estimate") {
  const Mesh m(-8.0, 8.0, 400);
  SUBCASE("point mass reproduces the kernel") {
    const ParticleEnsemble e(std::vector<double>(50, 0.0), 0.0, 1, ParticleMode::kDecoupled);
    const GridFunction k = kde_density(e, m, KdeConfig{0.1});
    CHECK(l1_distance(k, gaussian(m, 0.1)) <= 2.0 * m.dx());
    CHECK(mass(k) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK_THROWS_AS(kde_density(e, m, KdeConfig{}), DomainError);
    CHECK_THROWS_AS(kde_density(e, m, KdeConfig{0.0}), DomainError);
  }
  SUBCASE("1e5 standard normal samples, Silverman bandwidth") {
    std::vector<double> x(100000);
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] = rng::standard_normal(21, i, 0, rng::Stream::kTest);
    const ParticleEnsemble e(x, 0.0, 21, ParticleMode::kDecoupled);
    // 1.06 * sd * n^{-1/5} with n^{-1/5} = 0.1 exactly for n = 1e5.
    CHECK(kde_bandwidth(e, {}) == doctest::Approx(0.106 * std::sqrt(sample_var(x))).epsilon(1e-12));
    CHECK(l1_distance(kde_density(e, m, {}), gaussian(m, 1.0)) <= 0.02);
  }
  SUBCASE("Silverman on a small fixed sample") {
    // sd of {0,1,2,3,4} is sqrt(2.5); 1.06 sqrt(2.5) 5^{-0.2} = 1.2147359...
    CHECK(silverman_bandwidth({0, 1, 2, 3, 4}) == doctest::Approx(1.2147359).epsilon(1e-6));
  }
}

TEST_CASE("Euler-Maruyama step") {
  const Mesh m(-8.0, 8.0, 400);
  const GridFunction rho = gaussian(m, 0.5);
  const BrownianDriver d(3, 1e-2, 4, 8);
  const ParticleEnsemble e({-0.4, 0.3, 2.0}, 0.0, 8, ParticleMode::kDecoupled);

  SUBCASE("linear-heat: x' = x + sqrt(2) dW") {
    const auto n = em_step(e, rho, preset("linear-heat"), d, 0);
    for (std::size_t i = 0; i < 3; ++i)
      CHECK(n.positions()[i] == doctest::Approx(e.positions()[i] + std::sqrt(2.0) * d.increment(i, 0)));
    CHECK(n.t() == doctest::Approx(1e-2));
  }
  SUBCASE("zero noise and zero rate freeze the particles") {
    const auto z = BrownianDriver::zero(3, 1e-2, 4);
    CHECK(em_step(e, rho, preset("linear-heat"), z, 2).positions() == e.positions());
  }
  SUBCASE("cubic-tanh against a scalar evaluation of the update") {
    const ParticleEnsemble one({0.3}, 0.0, 8, ParticleMode::kDecoupled);
    const BrownianDriver d1(1, 1e-2, 4, 8);
    const double r = sample_at(rho, 0.3);
    const double expected = 0.3 + (-std::tanh(0.3)) * (1.0 / (1.0 + r * r)) * 1e-2 +
                            std::sqrt(2.0 * (1.0 + r * r)) * d1.increment(0, 0);
    CHECK(em_step(one, rho, preset("cubic-tanh"), d1, 0).positions()[0] ==
          doctest::Approx(expected).epsilon(1e-14));
  }
  SUBCASE("checks") {
    CHECK_THROWS_AS(em_step(e, rho, preset("linear-heat"), BrownianDriver(4, 1e-2, 4, 1), 0), ConfigError);
    CHECK_THROWS_AS(em_step(e, rho, preset("linear-heat"), d, 4), DomainError);
    CoefficientSet lying = preset("cubic-tanh");
    lying.beta.gamma0 = 4.0;  // a(0) = 1 < 4
    CHECK_THROWS_AS(em_step(e, rho, lying, d, 0), SolverError);
    CoefficientSet fast = preset("cubic-tanh");
    fast.E.sup_bound = 0.01;
    CHECK_THROWS_AS(em_step(e, rho, fast, d, 0), SolverError);
    CHECK_THROWS_AS(ParticleEnsemble({0.0, NAN}, 0.0, 1, ParticleMode::kDecoupled), DomainError);
  }
}

TEST_CASE("decoupled simulation") {
  const Mesh m(-8.0, 8.0, 400);
  const double T = 0.5;
  const auto traj = heat_trajectory(m, T, 0.1);
  const std::size_t n = 10000;
  const auto e0 = sample_initial(traj.frames[0], n, 2);
  const BrownianDriver d(n, 1e-3, 500, 2);
  const auto cps = simulate_decoupled(e0, traj, preset("linear-heat"), d);
  REQUIRE(cps.size() == traj.times.size());
  CHECK(cps.back().t() == doctest::Approx(T));

  SUBCASE("variance 0.25 + 2T within 3 standard errors") {
    const double v = 0.25 + 2.0 * T;
    CHECK(std::abs(sample_var(cps.back().positions()) - v) <= 3.0 * v * std::sqrt(2.0 / n));
  }
  SUBCASE("Kolmogorov-Smirnov against the exact law at the 1% level") {
    auto x = cps.back().positions();
    std::sort(x.begin(), x.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double F = normal_cdf(x[i], std::sqrt(0.25 + 2.0 * T));
      ks = std::max({ks, std::abs(F - double(i) / n), std::abs(F - double(i + 1) / n)});
    }
    CHECK(ks <= 1.63 / std::sqrt(double(n)));
  }
  SUBCASE("bit-identical reruns") {
    const auto again = simulate_decoupled(e0, traj, preset("linear-heat"), d);
    for (std::size_t k = 0; k < cps.size(); ++k) CHECK(again[k].positions() == cps[k].positions());
  }
  SUBCASE("with b = 0 the field E is irrelevant") {
    CoefficientSet c = preset("linear-heat");
    c.E.eval = [](double x) { return 100.0 * std::sin(x); };
    c.E.sup_bound = 100.0;
    CHECK(simulate_decoupled(e0, traj, c, d).back().positions() == cps.back().positions());
  }
  SUBCASE("grid mismatch") {
    CHECK_THROWS_AS(simulate_decoupled(e0, traj, preset("linear-heat"), BrownianDriver(n, 3e-3, 100, 1)),
                    ConfigError);
  }
}

TEST_CASE("self-consistent simulation") {
  const Mesh m(-8.0, 8.0, 400);
  const auto u0 = gaussian(m, 0.5);

  SUBCASE("linear-heat coincides with the decoupled run") {
    const auto traj = heat_trajectory(m, 0.1, 0.05);
    const auto e0 = sample_initial(u0, 500, 1);
    const BrownianDriver d(500, 1e-3, 100, 1);
    const auto a = simulate_decoupled(e0, traj, preset("linear-heat"), d);
    const auto b = simulate_self_consistent(e0, preset("linear-heat"), d, {}, m, {0.0, 0.05, 0.1});
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].positions() == b[k].positions());
  }
  SUBCASE("zero noise and E = 0 freeze the particles") {
    CoefficientSet c = preset("cubic-tanh");
    c.E.eval = [](double) { return 0.0; };
    c.E.div_eval = [](double) { return 0.0; };
    c.E.sup_bound = 0.0;
    const auto e0 = sample_initial(u0, 200, 1);
    const auto out = simulate_self_consistent(e0, c, BrownianDriver::zero(200, 1e-2, 10), {}, m);
    CHECK(out.back().positions() == e0.positions());
  }
  SUBCASE("cubic-tanh: more particles track the PDE more closely") {
    const CoefficientSet c = preset("cubic-tanh");
    SolverConfig sc;
    sc.dt = 1e-3;
    sc.T = 0.25;
    sc.checkpoint_times = {0.0, 0.25};
    const auto frame = solve(u0, c, sc).trajectory.frames.back();
    auto distance = [&](std::size_t n) {
      const auto e0 = sample_initial(u0, n, 5);
      const auto out = simulate_self_consistent(e0, c, BrownianDriver(n, 1e-3, 250, 5), {}, m);
      return l1_distance(kde_density(out.back(), m, {}), frame);
    };
    CHECK(distance(10000) <= distance(1000));
  }
  SUBCASE("needs 100 particles") {
    CHECK_THROWS_AS(simulate_self_consistent(sample_initial(u0, 50, 1), preset("linear-heat"),
                                             BrownianDriver(50, 1e-2, 2, 1), {}, m),
                    DomainError);
  }
}

TEST_CASE("ensemble csv") {
  const ParticleEnsemble e({0.5, -0.25}, 0.0, 1, ParticleMode::kDecoupled);
  std::ostringstream os;
  write_ensemble_csv(os, {e, e});
  CHECK(os.str().rfind("t,particle_id,x\n", 0) == 0);
  CHECK(os.str().find("0,1,-0.25\n") != std::string::npos);
}
