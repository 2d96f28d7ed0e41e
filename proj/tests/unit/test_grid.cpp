#include <doctest.h>

#include <cmath>
#include <sstream>

#include "nlfp/error.hpp"
#include "nlfp/grid.hpp"

using namespace nlfp;

TEST_CASE("mesh geometry") {
  Mesh m(-1.0, 1.0, 4);
  CHECK(m.dx() == doctest::Approx(0.5));
  CHECK(m.center(0) == doctest::Approx(-0.75));
  CHECK(m.locate(-1.0) == 0);
  CHECK(m.locate(1.0) == 3);
  CHECK(m.locate(0.0) == 2);
  CHECK(m.locate(1.0001) == -1);
  CHECK(m.locate(std::nan("")) == -1);
  CHECK_THROWS_AS(Mesh(0.0, 1.0, 3), DomainError);
  CHECK_THROWS_AS(Mesh(1.0, 0.0, 10), DomainError);
}

TEST_CASE("density invariants") {
  Mesh m(0.0, 1.0, 4);
  CHECK_NOTHROW(GridFunction::density(m, {1, 1, 1, 1}));
  CHECK_THROWS_AS(GridFunction::density(m, {2, 1, 1, 1}), DomainError);
  CHECK_THROWS_AS(GridFunction::density(m, {2, -1, 2, 1}), DomainError);
  CHECK_THROWS_AS(GridFunction::density(m, {1, 1, 1}), DomainError);
  CHECK_FALSE(GridFunction(m, {1, 2, 3, 4}).is_density());
}

TEST_CASE("projection, mass, distance, sampling") {
  Mesh m(-8.0, 8.0, 400);
  const GridFunction g = project_density([](double x) { return gaussian_pdf(x, 0.0, 0.5); }, m);
  CHECK(g.is_density());
  CHECK(mass(g) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(l1_distance(g, g) == 0.0);
  // Peak 1/sqrt(2 pi 0.25) = 0.7978845608...; the nearest centres sit at +-0.02.
  CHECK(g.max_value() == doctest::Approx(0.7978845608 * std::exp(-0.02 * 0.02 / 0.5)).epsilon(1e-6));
  CHECK(sample_at(g, 100.0) == 0.0);
  CHECK(sample_at(g, 0.01) == g[200]);

  const GridFunction box = project_density([](double x) { return indicator(x, 0.0, 1.0); }, m);
  CHECK(box.max_value() == doctest::Approx(1.0));
  // Disjoint supports are at L1 distance 2.
  const GridFunction other = project_density([](double x) { return indicator(x, 3.0, 4.0); }, m);
  CHECK(l1_distance(box, other) == doctest::Approx(2.0));
  CHECK_THROWS_AS(l1_distance(box, GridFunction(Mesh(-8, 8, 200), std::vector<double>(200, 0.0))),
                  DomainError);
}

TEST_CASE("trajectory checkpoint lookup") {
  Mesh m(0.0, 1.0, 4);
  const auto f = GridFunction::density(m, {1, 1, 1, 1});
  DensityTrajectory tr(m, {0.0, 0.1, 0.3}, {f, f, f});
  CHECK(tr.checkpoint_index(0.1) == 1);
  CHECK(tr.checkpoint_index(0.2) == -1);
  CHECK(tr.frame_at_or_before(0.2) == 1);
  CHECK(tr.frame_at_or_before(0.3 - 1e-15) == 2);
  CHECK_THROWS_AS(DensityTrajectory(m, {0.1, 0.2}, {f, f}), DomainError);
}

TEST_CASE("csv has a header and full precision") {
  Mesh m(0.0, 1.0, 4);
  std::ostringstream os;
  write_csv(os, GridFunction(m, {0.1, 1.0 / 3.0, 0, 0}));
  const std::string s = os.str();
  CHECK(s.rfind("x,value\n", 0) == 0);
  CHECK(s.find("0.33333333333333331") != std::string::npos);
}
