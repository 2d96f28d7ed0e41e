#include "nlfp/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nlfp/error.hpp"
#include "nlfp/rng.hpp"

namespace nlfp {

double DiffusionA::operator()(double r) const {
  if (std::abs(r) > epsilon_a) return beta.eval(r) / r;
  return beta.deriv(0.0);
}

double eval_a(const CoefficientSet& coeffs, double r) {
  if (!std::isfinite(r)) throw DomainError("eval_a: non-finite argument");
  return coeffs.a(r);
}

bool ValidationReport::all_passed() const {
  return std::all_of(conditions.begin(), conditions.end(),
                     [](const ConditionResult& c) { return c.passed; });
}

const ConditionResult& ValidationReport::find(const std::string& id) const {
  for (const auto& c : conditions)
    if (c.id == id) return c;
  throw DomainError("ValidationReport: no condition '" + id + "'");
}

namespace {

double central_difference(const ScalarFn& f, double x) {
  const double h = 1e-5 * std::max(1.0, std::abs(x));
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Worst relative mismatch between an analytic derivative and a central
// difference. Relative to max(1, |d|) so near-zero derivatives are compared
// absolutely.
struct DerivCheck {
  double worst = 0.0;
  double at = 0.0;
};

DerivCheck check_derivative(const ScalarFn& f, const ScalarFn& df,
                            const std::vector<double>& points) {
  DerivCheck out;
  for (double x : points) {
    const double d = df(x);
    const double err = std::abs(central_difference(f, x) - d) / std::max(1.0, std::abs(d));
    if (!(err <= out.worst)) {
      out.worst = err;
      out.at = x;
    }
  }
  return out;
}

class Sampler {
 public:
  Sampler(Interval range, std::uint64_t seed) : range_(range), seed_(seed) {}

  double next() {
    const double u = rng::uniform(seed_, counter_++, 0, rng::Stream::kValidation);
    return range_.lo + u * range_.width();
  }

 private:
  Interval range_;
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

std::vector<double> lattice(Interval range, std::size_t n) {
  std::vector<double> pts(n);
  for (std::size_t i = 0; i < n; ++i)
    pts[i] = range.lo + range.width() * static_cast<double>(i) / static_cast<double>(n - 1);
  return pts;
}

}  // namespace

ValidationReport validate_conditions(const CoefficientSet& coeffs, Interval range,
                                     std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 2) throw DomainError("validate_conditions: n_samples must be >= 2");
  if (!(range.hi > range.lo)) throw DomainError("validate_conditions: degenerate range");

  ValidationReport rep;
  rep.coefficients = coeffs.name;
  rep.range = range;
  rep.n_samples = n_samples;
  rep.seed = seed;

  // Odd lattice size so a symmetric range contains 0.
  std::vector<double> points = lattice(range, n_samples | 1U);
  Sampler sampler(range, seed);
  std::vector<double> random_pts(n_samples);
  for (auto& r : random_pts) r = sampler.next();
  std::vector<double> all_pts = points;
  all_pts.insert(all_pts.end(), random_pts.begin(), random_pts.end());

  const double gamma0 = coeffs.beta.gamma0;

  {
    ConditionResult c{"i.beta0", "beta(0) = 0", false, 0.0, 0.0, {0.0}, false};
    const double b0 = coeffs.beta.eval(0.0);
    c.observed = b0;
    c.margin = -std::abs(b0);
    c.passed = b0 == 0.0;
    rep.conditions.push_back(c);
  }
  {
    const auto d = check_derivative(coeffs.beta.eval, coeffs.beta.deriv, all_pts);
    ConditionResult c{"i.c1", "beta' matches central differences (rel 1e-6)", false,
                      1e-6 - d.worst, d.worst, {d.at}, false};
    c.passed = c.margin >= 0.0;
    rep.conditions.push_back(c);
  }
  {
    // Difference quotients on random pairs and adjacent lattice pairs;
    // the diagonal r1 = r2 is covered by beta'(r) on the lattice. Pairs
    // closer than 1e-6 of the range width are left to the diagonal check
    // since their quotient is dominated by rounding.
    double min_q = std::numeric_limits<double>::infinity();
    std::vector<double> witness{0.0, 0.0};
    auto consider = [&](double r1, double r2) {
      double q;
      const double d = r1 - r2;
      if (r1 == r2) {
        q = coeffs.beta.deriv(r1);
      } else if (std::abs(d) < 1e-6 * range.width()) {
        return;
      } else {
        q = (coeffs.beta.eval(r1) - coeffs.beta.eval(r2)) * d / (d * d);
      }
      if (!(q >= min_q)) {
        min_q = q;
        witness = {r1, r2};
      }
    };
    for (double r : points) consider(r, r);
    for (std::size_t i = 0; i + 1 < points.size(); ++i) consider(points[i], points[i + 1]);
    for (std::size_t i = 0; i < n_samples; ++i) consider(sampler.next(), sampler.next());
    ConditionResult c{"ii", "strong monotonicity of beta with gamma0", false, min_q - gamma0,
                      min_q, witness, false};
    c.passed = c.margin >= 0.0;
    rep.conditions.push_back(c);
  }
  {
    double worst = 0.0, at = 0.0;
    double worst_neg = 0.0, at_neg = 0.0;
    double sup_div = 0.0, at_div = 0.0;
    for (double x : all_pts) {
      const double e = std::abs(coeffs.E.eval(x));
      if (!(e <= worst)) worst = e, at = x;
      const double dv = coeffs.E.div_eval(x);
      if (!(std::max(-dv, 0.0) <= worst_neg)) worst_neg = std::max(-dv, 0.0), at_neg = x;
      if (!(std::abs(dv) <= sup_div)) sup_div = std::abs(dv), at_div = x;
    }
    ConditionResult sup{"iii.sup", "|E| <= sup_bound", false, coeffs.E.sup_bound - worst, worst,
                        {at}, false};
    sup.passed = sup.margin >= 0.0;
    ConditionResult neg{"iii.div_neg", "(div E)^- <= div_neg_bound", false,
                        coeffs.E.div_neg_bound - worst_neg, worst_neg, {at_neg}, false};
    neg.passed = neg.margin >= 0.0;

    DerivCheck fd;
    for (double x : all_pts) {
      const double d = coeffs.E.div_eval(x);
      const double err = std::abs(central_difference(coeffs.E.eval, x) - d);
      if (!(err <= fd.worst)) fd.worst = err, fd.at = x;
    }
    ConditionResult cons{"iii.div_fd", "div E matches central differences (1e-5)", false,
                         1e-5 - fd.worst, fd.worst, {fd.at}, false};
    cons.passed = cons.margin >= 0.0;
    // L^2 + L^infinity decomposition replaced by a pointwise bound on the range.
    ConditionResult surr{"iii.div_surrogate", "|div E| bounded on range (surrogate check)",
                         std::isfinite(sup_div), 0.0, sup_div, {at_div}, true};
    rep.conditions.insert(rep.conditions.end(), {sup, neg, cons, surr});
  }
  {
    double lo = std::numeric_limits<double>::infinity(), at_lo = 0.0;
    double hi = -std::numeric_limits<double>::infinity(), at_hi = 0.0;
    for (double r : all_pts) {
      const double v = coeffs.b.eval(r);
      if (!(v >= lo)) lo = v, at_lo = r;
      if (!(v <= hi)) hi = v, at_hi = r;
    }
    const double margin = std::min(lo, coeffs.b.sup_bound - hi);
    ConditionResult range_c{"iv.range", "0 <= b <= sup_bound", margin >= 0.0, margin, hi,
                            {margin == lo ? at_lo : at_hi}, false};
    const auto d = check_derivative(coeffs.b.eval, coeffs.b.deriv, all_pts);
    ConditionResult c1{"iv.c1", "b' matches central differences (rel 1e-6)", false,
                       1e-6 - d.worst, d.worst, {d.at}, false};
    c1.passed = c1.margin >= 0.0;
    rep.conditions.insert(rep.conditions.end(), {range_c, c1});
  }
  {
    const Interval li = coeffs.lipschitz_interval;
    Sampler ls(li, seed ^ 0x5bd1e995ULL);
    const auto lpts = lattice(li, n_samples | 1U);
    double worst = 0.0;
    std::vector<double> witness{li.lo, li.hi};
    auto consider = [&](double r1, double r2) {
      if (r1 == r2) return;
      const double ratio = std::abs(coeffs.a(r1) - coeffs.a(r2)) / std::abs(r1 - r2);
      if (!(ratio <= worst)) worst = ratio, witness = {r1, r2};
    };
    for (std::size_t i = 0; i + 1 < lpts.size(); ++i) consider(lpts[i], lpts[i + 1]);
    for (std::size_t i = 0; i < n_samples; ++i) consider(ls.next(), ls.next());
    const double L = coeffs.lipschitz_a_local;
    ConditionResult c{"v", "a is Lipschitz with the declared constant on its interval", false,
                      L * (1.0 + 1e-9) - worst, worst, witness, false};
    c.passed = c.margin >= 0.0;
    rep.conditions.push_back(c);
  }
  {
    double min_a = std::numeric_limits<double>::infinity(), at = 0.0;
    for (double r : all_pts) {
      const double v = coeffs.a(r);
      if (!(v >= min_a)) min_a = v, at = r;
    }
    ConditionResult c{"nondegeneracy", "a >= gamma0", false, min_a - gamma0, min_a, {at}, false};
    c.passed = c.margin >= -1e-12 * std::max(1.0, gamma0);
    rep.conditions.push_back(c);
  }
  return rep;
}

std::vector<std::string> preset_names() { return {"linear-heat", "cubic-tanh", "logistic-b"}; }

namespace {

ScalarFn constant(double c) {
  return [c](double) { return c; };
}

}  // namespace

CoefficientSet preset(const std::string& name) {
  CoefficientSet c;
  c.name = name;
  if (name == "linear-heat") {
    c.beta = {[](double r) { return r; }, constant(1.0), 1.0};
    c.b = {constant(0.0), constant(0.0), 0.0};
    c.E = {constant(0.0), constant(0.0), 0.0, 0.0};
    // a is constant; any positive constant is a valid certificate.
    c.lipschitz_a_local = 1.0;
  } else if (name == "cubic-tanh") {
    c.beta = {[](double r) { return r + r * r * r; }, [](double r) { return 1.0 + 3.0 * r * r; },
              1.0};
    c.b = {[](double r) { return 1.0 / (1.0 + r * r); },
           [](double r) {
             const double q = 1.0 + r * r;
             return -2.0 * r / (q * q);
           },
           1.0};
    c.E = {[](double x) { return -std::tanh(x); },
           [](double x) {
             const double t = std::tanh(x);
             return -(1.0 - t * t);
           },
           1.0, 1.0};
    // a(r) = 1 + r^2 on [-5, 5].
    c.lipschitz_a_local = 10.0;
  } else if (name == "logistic-b") {
    c.beta = {[](double r) { return 2.0 * r; }, constant(2.0), 2.0};
    c.b = {[](double r) { return 1.0 / (1.0 + std::exp(-r)); },
           [](double r) {
             const double s = 1.0 / (1.0 + std::exp(-r));
             return s * (1.0 - s);
           },
           1.0};
    c.E = {[](double x) { return std::sin(x) * std::exp(-x * x); },
           [](double x) { return std::exp(-x * x) * (std::cos(x) - 2.0 * x * std::sin(x)); },
           0.4, 0.5};
    c.lipschitz_a_local = 1.0;
  } else {
    std::ostringstream msg;
    msg << "unknown coefficient preset '" << name << "'; valid presets:";
    for (const auto& n : preset_names()) msg << ' ' << n;
    throw ConfigError(msg.str());
  }
  c.a = DiffusionA{c.beta, 1e-8};
  return c;
}

namespace {

double polyval(const std::vector<double>& c, double r) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * r + *it;
  return acc;
}

std::vector<double> polyder(const std::vector<double>& c) {
  std::vector<double> d;
  for (std::size_t k = 1; k < c.size(); ++k) d.push_back(static_cast<double>(k) * c[k]);
  if (d.empty()) d.push_back(0.0);
  return d;
}

}  // namespace

CoefficientSet make_custom(const CustomCoefficientSpec& spec) {
  if (spec.beta.size() < 2) throw ConfigError("coefficients.beta: need at least [c0, c1]");
  if (spec.beta[0] != 0.0) throw ConfigError("coefficients.beta: c0 must be 0 (beta(0) = 0)");
  if (!(spec.gamma0 > 0.0)) throw ConfigError("coefficients.gamma0 must be > 0");
  if (!(spec.lipschitz_interval.hi > spec.lipschitz_interval.lo))
    throw ConfigError("coefficients.lipschitz_interval must be nondegenerate");

  CoefficientSet c;
  c.name = "custom";
  const auto bc = spec.beta;
  const auto dc = polyder(bc);
  c.beta = {[bc](double r) { return polyval(bc, r); }, [dc](double r) { return polyval(dc, r); },
            spec.gamma0};

  const BSpec& b = spec.b;
  const double bs = b.scale;
  if (b.kind == "zero") {
    c.b = {constant(0.0), constant(0.0), 0.0};
  } else if (b.kind == "constant") {
    if (bs < 0.0) throw ConfigError("coefficients.b.scale must be >= 0");
    c.b = {constant(bs), constant(0.0), bs};
  } else if (b.kind == "rational") {
    if (bs < 0.0 || !(b.width > 0.0))
      throw ConfigError("coefficients.b: rational needs scale >= 0 and width > 0");
    const double w = b.width;
    c.b = {[bs, w](double r) { return bs / (1.0 + (r / w) * (r / w)); },
           [bs, w](double r) {
             const double q = 1.0 + (r / w) * (r / w);
             return -2.0 * bs * r / (w * w * q * q);
           },
           bs};
  } else if (b.kind == "logistic") {
    if (bs < 0.0) throw ConfigError("coefficients.b.scale must be >= 0");
    const double k = b.rate;
    c.b = {[bs, k](double r) { return bs / (1.0 + std::exp(-k * r)); },
           [bs, k](double r) {
             const double s = 1.0 / (1.0 + std::exp(-k * r));
             return bs * k * s * (1.0 - s);
           },
           bs};
  } else {
    throw ConfigError("coefficients.b.kind '" + b.kind +
                      "' invalid; valid: zero constant rational logistic");
  }

  const double es = spec.E.scale;
  const std::string& ek = spec.E.kind;
  if (ek == "zero") {
    c.E = {constant(0.0), constant(0.0), 0.0, 0.0};
  } else if (ek == "constant") {
    c.E = {constant(es), constant(0.0), std::abs(es), 0.0};
  } else if (ek == "neg-tanh") {
    c.E = {[es](double x) { return -es * std::tanh(x); },
           [es](double x) {
             const double t = std::tanh(x);
             return -es * (1.0 - t * t);
           },
           std::abs(es), std::max(es, 0.0)};
  } else if (ek == "sin-gauss") {
    c.E = {[es](double x) { return es * std::sin(x) * std::exp(-x * x); },
           [es](double x) {
             return es * std::exp(-x * x) * (std::cos(x) - 2.0 * x * std::sin(x));
           },
           0.0, 0.0};
    // Dense scan; the field decays like exp(-x^2) so [-10, 10] covers it.
    double sup = 0.0, neg = 0.0;
    for (int i = 0; i <= 200000; ++i) {
      const double x = -10.0 + 1e-4 * i;
      sup = std::max(sup, std::abs(c.E.eval(x)));
      neg = std::max(neg, -c.E.div_eval(x));
    }
    c.E.sup_bound = sup * (1.0 + 1e-6);
    c.E.div_neg_bound = neg * (1.0 + 1e-6);
  } else {
    throw ConfigError("coefficients.E.kind '" + ek +
                      "' invalid; valid: zero constant neg-tanh sin-gauss");
  }

  c.a = DiffusionA{c.beta, 1e-8};
  c.lipschitz_interval = spec.lipschitz_interval;
  // Lipschitz constant of a from a dense derivative scan, with 5% headroom.
  double L = 0.0;
  const Interval li = spec.lipschitz_interval;
  for (int i = 0; i <= 20000; ++i) {
    const double r = li.lo + li.width() * i / 20000.0;
    L = std::max(L, std::abs(central_difference(c.a, r)));
  }
  c.lipschitz_a_local = std::max(L * 1.05, 1e-12);
  return c;
}

}  // namespace nlfp
