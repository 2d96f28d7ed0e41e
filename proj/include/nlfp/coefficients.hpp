#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace nlfp {

using ScalarFn = std::function<double(double)>;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool operator==(const Interval&) const = default;
};

// Monotone nonlinearity of the porous-medium term. gamma0 is the claimed
// strong-monotonicity constant: (beta(r1)-beta(r2))(r1-r2) >= gamma0 |r1-r2|^2.
struct BetaFunction {
  ScalarFn eval;
  ScalarFn deriv;
  double gamma0 = 1.0;
};

// a(r) = beta(r)/r with the removable singularity at 0 replaced by beta'(0).
struct DiffusionA {
  BetaFunction beta;
  double epsilon_a = 1e-8;

  double operator()(double r) const;
};

struct RateB {
  ScalarFn eval;
  ScalarFn deriv;
  double sup_bound = 0.0;
};

// Transport field E for d = 1. div_eval is the analytic derivative.
struct DriftField {
  ScalarFn eval;
  ScalarFn div_eval;
  double sup_bound = 0.0;
  double div_neg_bound = 0.0;
};

// Immutable bundle (beta, a, b, E). Callables must be pure.
struct CoefficientSet {
  std::string name;
  BetaFunction beta;
  DiffusionA a;
  RateB b;
  DriftField E;
  double lipschitz_a_local = 1.0;
  Interval lipschitz_interval{-5.0, 5.0};
};

// a(r); throws DomainError on non-finite r.
double eval_a(const CoefficientSet& coeffs, double r);

struct ConditionResult {
  std::string id;           // "i", "ii", ..., "nondegeneracy"
  std::string description;
  bool passed = false;
  // Signed slack of the check: >= 0 exactly when the condition holds on the
  // sample set. For (ii) this is min difference quotient - gamma0.
  double margin = 0.0;
  // Raw observed quantity (for (ii): the smallest difference quotient seen).
  double observed = 0.0;
  std::vector<double> witness;
  bool surrogate = false;   // check is a stronger pointwise surrogate
};

struct ValidationReport {
  std::string coefficients;
  Interval range;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  std::vector<ConditionResult> conditions;

  bool all_passed() const;
  const ConditionResult& find(const std::string& id) const;
};

// Numerically checks conditions (i)-(v) plus non-degeneracy of a on the
// declared range. Failures are report entries, never exceptions (except for
// invalid arguments: n_samples < 2 or an empty range).
ValidationReport validate_conditions(const CoefficientSet& coeffs, Interval range,
                                     std::size_t n_samples, std::uint64_t seed);

std::vector<std::string> preset_names();

// "linear-heat", "cubic-tanh", "logistic-b"; ConfigError otherwise.
CoefficientSet preset(const std::string& name);

// Inline coefficient description accepted by scenario configs.
struct BSpec {
  std::string kind = "zero";  // zero | constant | rational | logistic
  double scale = 1.0;         // constant value / amplitude
  double width = 1.0;         // rational: scale / (1 + (r/width)^2)
  double rate = 1.0;          // logistic: scale / (1 + exp(-rate r))

  bool operator==(const BSpec&) const = default;
};

struct ESpec {
  std::string kind = "zero";  // zero | constant | neg-tanh | sin-gauss
  double scale = 1.0;

  bool operator==(const ESpec&) const = default;
};

struct CustomCoefficientSpec {
  std::vector<double> beta;   // polynomial coefficients c0 + c1 r + c2 r^2 + ...
  double gamma0 = 1.0;
  BSpec b;
  ESpec E;
  Interval lipschitz_interval{-5.0, 5.0};

  bool operator==(const CustomCoefficientSpec&) const = default;
};

// Builds a coefficient set from the inline form. Bounds (sup |E|, sup b,
// (div E)^-, Lipschitz constant of a) are derived analytically where the
// form allows it and by dense sampling otherwise.
CoefficientSet make_custom(const CustomCoefficientSpec& spec);

}  // namespace nlfp
