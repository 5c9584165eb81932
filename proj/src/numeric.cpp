#include "wpd/numeric.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "wpd/deriv.hpp"

namespace wpd {

namespace {

Complex int_power(Complex z, long n) {
  if (n < 0) {
    if (std::abs(z) < 1e-300) throw EvaluationError("singularity: division by a value of magnitude < 1e-300");
    return 1.0 / int_power(z, -n);
  }
  Complex r(1, 0);
  while (n > 0) {
    if (n & 1) r *= z;
    z *= z;
    n >>= 1;
  }
  return r;
}

Complex fd_partial(const OpaqueClosure& fn, ArgValues args, MultiIndex index) {
  auto it = std::find_if(index.begin(), index.end(), [](const auto& e) { return e.second > 0; });
  if (it == index.end()) return fn.value(args);
  const std::string var = it->first;
  it->second -= 1;
  ArgValues plus = args, minus = args;
  plus[var] += kOpaqueStep;
  minus[var] -= kOpaqueStep;
  return (fd_partial(fn, plus, index) - fd_partial(fn, minus, index)) / (2 * kOpaqueStep);
}

Complex evaluate_opaque(const Expr& e, const NumericBinding& b) {
  auto fit = b.functions.find(e.symbol().name);
  if (fit == b.functions.end()) throw EvaluationError("unbound opaque function " + e.symbol().name);
  ArgValues args;
  for (const auto& a : e.args()) {
    auto vit = b.values.find(a.name);
    if (vit == b.values.end()) throw EvaluationError("unbound symbol " + a.name);
    args[a.name] = vit->second;
  }
  const OpaqueClosure& fn = fit->second;
  if (e.kind() == ExprKind::apply) return fn.value(args);
  if (fn.derivative)
    if (auto d = fn.derivative(args, e.index())) return *d;
  return fd_partial(fn, args, e.index());
}

Complex evaluate_rec(const Expr& e, const NumericBinding& b) {
  switch (e.kind()) {
    case ExprKind::constant:
      return e.constant_value().to_complex();
    case ExprKind::symbol: {
      auto it = b.values.find(e.symbol().name);
      if (it == b.values.end()) throw EvaluationError("unbound symbol " + e.symbol().name);
      return it->second;
    }
    case ExprKind::apply:
    case ExprKind::partial:
      return evaluate_opaque(e, b);
    case ExprKind::power: {
      Complex z = evaluate_rec(e.base(), b);
      const Rational& q = e.exponent();
      if (q.get_den() == 1) return int_power(z, q.get_num().get_si());
      if (q < 0 && std::abs(z) < 1e-300)
        throw EvaluationError("singularity: division by a value of magnitude < 1e-300");
      return std::pow(z, q.get_d());
    }
    case ExprKind::product: {
      Complex r = e.coefficient().to_complex();
      for (const auto& f : e.items()) r *= evaluate_rec(f, b);
      return r;
    }
    case ExprKind::sum: {
      Complex r(0, 0);
      for (const auto& t : e.items()) r += evaluate_rec(t, b);
      return r;
    }
  }
  return {0, 0};
}

// g(E) * p1 with g's derivatives of any order supplied.
OpaqueClosure separable(std::string label, std::function<Complex(Complex, int)> g) {
  OpaqueClosure c;
  c.label = label;
  c.value = [g](const ArgValues& a) { return g(a.at("E"), 0) * a.at("p1"); };
  c.derivative = [g](const ArgValues& a, const MultiIndex& idx) -> std::optional<Complex> {
    int nE = 0, np = 0;
    for (const auto& [v, k] : idx) {
      if (v == "E") nE = k;
      else if (v == "p1") np = k;
      else if (k > 0) return Complex(0, 0);
    }
    Complex h = np == 0 ? a.at("p1") : (np == 1 ? Complex(1, 0) : Complex(0, 0));
    return g(a.at("E"), nE) * h;
  };
  return c;
}

}  // namespace

Complex evaluate(const Expr& e, const NumericBinding& b) {
  Complex r = evaluate_rec(e, b);
  if (!std::isfinite(r.real()) || !std::isfinite(r.imag())) throw EvaluationError("numeric overflow or singularity");
  return r;
}

OpaqueClosure polynomial_closure() {
  return separable("E^2*p1", [](Complex E, int n) -> Complex {
    switch (n) {
      case 0: return E * E;
      case 1: return 2.0 * E;
      case 2: return 2.0;
      default: return 0.0;
    }
  });
}

OpaqueClosure rational_closure() {
  // 1/(1+E^2) = (1/(2i)) (1/(E-i) - 1/(E+i))
  return separable("p1/(1+E^2)", [](Complex E, int n) -> Complex {
    const Complex I(0, 1);
    double fact = std::tgamma(n + 1.0);
    double sign = (n % 2) ? -1.0 : 1.0;
    Complex d = int_power(E - I, -(n + 1)) - int_power(E + I, -(n + 1));
    return sign * fact * d / (2.0 * I);
  });
}

OpaqueClosure exponential_closure() {
  return separable("exp(E)*p1", [](Complex E, int) -> Complex { return std::exp(E); });
}

std::vector<OpaqueClosure> shipped_closures() {
  return {polynomial_closure(), rational_closure(), exponential_closure()};
}

OpaqueClosure closure_for(const Symbol& fn, const OpaqueClosure& base) {
  if (fn.params.empty()) return base;
  const std::string first = fn.params.front();
  const std::string last = fn.params.back();
  auto rename = [first, last](const ArgValues& a) {
    ArgValues r;
    r["p1"] = a.count(first) ? a.at(first) : Complex(0, 0);
    r["E"] = a.count(last) ? a.at(last) : Complex(0, 0);
    return r;
  };
  OpaqueClosure c;
  c.label = base.label;
  c.value = [base, rename](const ArgValues& a) { return base.value(rename(a)); };
  c.derivative = [base, first, last, rename](const ArgValues& a, const MultiIndex& idx) -> std::optional<Complex> {
    MultiIndex mapped;
    for (const auto& [v, k] : idx) {
      if (v == first && v == last) return std::nullopt;
      if (v == first) mapped = add_to_index(mapped, "p1", k);
      else if (v == last) mapped = add_to_index(mapped, "E", k);
      else if (k > 0) return Complex(0, 0);
    }
    return base.derivative(rename(a), mapped);
  };
  return c;
}

// ---------------------------------------------------------------------------
// Sampling and root solving

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::string describe(const NumericBinding& b) {
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  for (const auto& [k, v] : b.values) {
    os << (first ? "" : ", ") << k << "=" << v.real();
    first = false;
  }
  return os.str();
}

double real_value(const Expr& e, const NumericBinding& b) {
  Complex z = evaluate(e, b);
  if (std::abs(z.imag()) > 1e-12 * std::max(1.0, std::abs(z.real())))
    throw NumericFailure("constraint coefficient is not real at " + describe(b));
  return z.real();
}

}  // namespace

double uniform01(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
  std::uint64_t z = splitmix64(seed);
  z = splitmix64(z ^ (index * 0xD1B54A32D192ED03ULL));
  z = splitmix64(z ^ (stream * 0x8CB92BA72F3D8DD7ULL + 0x1234567ULL));
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

double solve_dependent(const DependencyContext& ctx, const std::string& dep, const NumericBinding& b, int sign,
                       std::optional<double> hint) {
  const Constraint* c = ctx.constraint_for(dep);
  if (!c) throw NumericFailure("no constraint solves " + dep);
  const Expr& g = c->g;
  Expr d1 = plain_partial(g, dep);
  Expr d2 = plain_partial(d1, dep);
  NumericBinding at = b;
  auto g_at = [&](double u) {
    at.values[dep] = u;
    return real_value(g, at);
  };
  auto dg_at = [&](double u) {
    at.values[dep] = u;
    return real_value(d1, at);
  };

  double u = 0;
  at.values[dep] = 0.0;
  if (d2.is_zero()) {
    double slope = real_value(d1, at);
    if (slope == 0) throw NumericFailure("constraint degenerate for " + dep + " at " + describe(b));
    u = -real_value(g, at) / slope;
  } else if (plain_partial(d2, dep).is_zero() && (d1 - d2 * ctx.var(dep)).is_zero()) {
    double a = real_value(d2, at) / 2;
    double c0 = real_value(g, at);
    if (a == 0 || -c0 / a < 0) throw NumericFailure("no real root for " + dep + " at " + describe(b));
    double root = std::sqrt(-c0 / a);
    int s = hint ? (*hint < 0 ? -1 : 1) : (sign < 0 ? -1 : 1);
    u = s * root;
  } else if (hint) {
    u = *hint;
    for (int it = 0; it < 60; ++it) {
      double slope = dg_at(u);
      if (slope == 0) throw NumericFailure("Newton step hit a flat constraint for " + dep + " at " + describe(b));
      double step = g_at(u) / slope;
      u -= step;
      if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(u))) break;
    }
  } else {
    double lo = sign < 0 ? -1e3 : 1e-6, hi = sign < 0 ? -1e-6 : 1e3;
    if (auto it = ctx.bounds().find(dep); it != ctx.bounds().end()) std::tie(lo, hi) = it->second;
    double glo = g_at(lo), ghi = g_at(hi);
    if (glo == 0) return lo;
    if (ghi == 0) return hi;
    if ((glo < 0) == (ghi < 0))
      throw NumericFailure("root solve fails to bracket " + dep + " in [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "] at " + describe(b));
    std::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve([&](double x) { return g_at(x); }, lo, hi, glo, ghi,
                                               boost::math::tools::eps_tolerance<double>(52), iters);
    u = (r.first + r.second) / 2;
  }

  // Polish with Newton steps while the residual shrinks.
  double res = std::abs(g_at(u));
  for (int it = 0; it < 4 && res > 0; ++it) {
    double slope = dg_at(u);
    if (slope == 0) break;
    double cand = u - g_at(u) / slope;
    double cres = std::abs(g_at(cand));
    if (cres >= res) break;
    u = cand;
    res = cres;
  }
  if (!(res <= 1e-12)) throw NumericFailure("constraint residual " + std::to_string(res) + " for " + dep + " at " + describe(b));
  return u;
}

namespace detail {

NumericBinding make_sample(const DependencyContext& ctx, const SampleOptions& opts, std::uint64_t index, bool on_shell) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    NumericBinding b;
    b.on_shell = on_shell;
    std::uint64_t stream = static_cast<std::uint64_t>(attempt) * 1024;
    for (const auto& s : ctx.independents()) b.values[s.name] = -2.0 + 4.0 * uniform01(opts.seed, index, stream++);
    for (const auto& s : ctx.parameters()) b.values[s.name] = 0.5 + 1.5 * uniform01(opts.seed, index, stream++);
    for (const auto& s : ctx.commutator_symbols()) b.values[s.name] = 0.0;
    for (const auto& [k, v] : opts.overrides) b.values[k] = v;
    bool too_small = false;
    for (const auto& d : ctx.dependents()) {
      if (opts.overrides.count(d.name)) continue;
      double u;
      if (on_shell) {
        u = solve_dependent(ctx, d.name, b, opts.sign);
      } else {
        u = (opts.sign < 0 ? -1.0 : 1.0) * (0.5 + 1.5 * uniform01(opts.seed, index, stream++));
      }
      // Branch points of the sheets are excluded.
      if (std::abs(u) < 1e-6) too_small = true;
      b.values[d.name] = u;
    }
    if (!too_small) return b;
  }
  throw NumericFailure("could not draw a sample away from |dependent| < 1e-6");
}

}  // namespace detail

std::vector<NumericBinding> sample_on_shell(const DependencyContext& ctx, const SampleOptions& opts) {
  std::vector<NumericBinding> out;
  for (int k = 0; k < opts.count; ++k) out.push_back(detail::make_sample(ctx, opts, static_cast<std::uint64_t>(k), true));
  return out;
}

std::vector<NumericBinding> sample_off_shell(const DependencyContext& ctx, const SampleOptions& opts) {
  std::vector<NumericBinding> out;
  for (int k = 0; k < opts.count; ++k) out.push_back(detail::make_sample(ctx, opts, static_cast<std::uint64_t>(k), false));
  return out;
}

// ---------------------------------------------------------------------------
// Finite differences

Complex fd_whole(const Expr& e, const std::string& var, const DependencyContext& ctx, const NumericBinding& b,
                 double h) {
  if (!(h > 0) || h < 1e-300) throw NumericFailure("finite-difference step must be positive");
  auto displaced = [&](double delta) {
    NumericBinding d = b;
    auto it = d.values.find(var);
    if (it == d.values.end()) throw EvaluationError("unbound symbol " + var);
    it->second += delta;
    for (const auto& dep : ctx.dependents()) {
      double hint = b.values.at(dep.name).real();
      d.values[dep.name] = solve_dependent(ctx, dep.name, d, hint < 0 ? -1 : 1, hint);
    }
    return evaluate(e, d);
  };
  return (displaced(h) - displaced(-h)) / (2 * h);
}

Complex fd_commutator_pE(const OpaqueClosure& f, int i, const ArgValues& point, double h) {
  const std::string pi = "p" + std::to_string(i);
  if (!point.count(pi) || !point.count("E")) throw EvaluationError("point must bind " + pi + " and E");
  if (std::abs(point.at("E")) < 1e-12) throw NumericFailure("singular E in nested finite differences");
  using Fn = std::function<Complex(const ArgValues&)>;
  auto d = [h](Fn F, std::string var) -> Fn {
    return [F, var, h](const ArgValues& a) {
      ArgValues plus = a, minus = a;
      plus[var] += h;
      minus[var] -= h;
      return (F(plus) - F(minus)) / (2 * h);
    };
  };
  auto whole = [&](Fn F) -> Fn {
    Fn di = d(F, pi), dE = d(F, "E");
    return [di, dE, pi](const ArgValues& a) { return di(a) + (a.at(pi) / a.at("E")) * dE(a); };
  };
  Fn value = f.value;
  Fn lhs = whole(d(value, "E"));
  Fn rhs = d(whole(value), "E");
  return lhs(point) - rhs(point);
}

}  // namespace wpd
