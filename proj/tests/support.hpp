#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "wpd/diffop.hpp"
#include "wpd/scenarios.hpp"
#include "wpd/textio.hpp"

namespace wpd::testing {

inline std::string data_path(const std::string& name) { return std::string(WPD_DATA_DIR) + "/" + name; }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline ContextPtr load(const std::string& name) {
  return std::make_shared<DependencyContext>(parse_context(slurp(data_path(name))));
}

inline ContextPtr mass_shell(int dim = 3, OrderingMode mode = OrderingMode::commuting, bool feynman = false) {
  MassShellScenario s;
  s.dimension = dim;
  s.ordering = mode;
  s.feynman = feynman;
  return build_mass_shell(s);
}

/// Seeded generator of random expressions over a context's symbols.
class ExprGen {
public:
  ExprGen(ContextPtr ctx, std::uint64_t seed) : ctx_(std::move(ctx)), rng_(seed) {
    for (const auto* list : {&ctx_->independents(), &ctx_->dependents(), &ctx_->parameters()})
      for (const auto& s : *list) vars_.push_back(s);
  }

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Rational rational() {
    Rational q(uniform(-9, 9), uniform(1, 4));
    q.canonicalize();
    return q;
  }

  Expr constant() {
    if (uniform(0, 5) == 0) return Expr::constant(GaussRational(rational(), rational()));
    return Expr::constant(GaussRational(rational()));
  }

  Expr var() { return Expr::symbol(vars_[static_cast<size_t>(uniform(0, static_cast<int>(vars_.size()) - 1))]); }

  Expr opaque() {
    const auto& fns = ctx_->opaques();
    const Symbol& fn = fns[static_cast<size_t>(uniform(0, static_cast<int>(fns.size()) - 1))];
    Expr app = ctx_->opaque(fn.name);
    if (uniform(0, 1) == 0) return app;
    MultiIndex index;
    int n = uniform(1, 2);
    for (int k = 0; k < n; ++k) index = add_to_index(index, fn.params[static_cast<size_t>(uniform(0, static_cast<int>(fn.params.size()) - 1))]);
    return Expr::partial(fn, app.args(), index);
  }

  /// Polynomial-ish expression; `with_opaque` allows f and its partials.
  Expr expr(int depth, bool with_opaque = true) {
    int pick = uniform(0, depth <= 0 ? 2 : 7);
    switch (pick) {
      case 0: return constant();
      case 1: return var();
      case 2: return with_opaque && !ctx_->opaques().empty() ? opaque() : var();
      case 3:
      case 4: return expr(depth - 1, with_opaque) + expr(depth - 1, with_opaque);
      case 5: return expr(depth - 1, with_opaque) * expr(depth - 1, with_opaque);
      case 6: {
        static const Rational exps[] = {Rational(2), Rational(-1), Rational(1, 2), Rational(-1, 2), Rational(3),
                                        Rational(-2), Rational(3, 2)};
        Expr base = uniform(0, 2) == 0 ? var() + Expr(uniform(1, 3)) : var();
        return pow(base, exps[uniform(0, 6)]);
      }
      default: return var() * expr(depth - 1, with_opaque);
    }
  }

  /// Coefficient expression without opaque functions or negative powers of sums.
  Expr coefficient(int depth) {
    int pick = uniform(0, depth <= 0 ? 1 : 3);
    switch (pick) {
      case 0: return Expr::constant(GaussRational(rational()));
      case 1: return var();
      case 2: return coefficient(depth - 1) + coefficient(depth - 1);
      default: return coefficient(depth - 1) * coefficient(depth - 1);
    }
  }

  DifferentialOperator generator() {
    std::vector<std::pair<std::string, DerivativeGenerator::Mode>> choices;
    for (const auto& s : ctx_->independents()) {
      choices.emplace_back(s.name, DerivativeGenerator::Mode::whole);
      choices.emplace_back(s.name, DerivativeGenerator::Mode::plain);
    }
    for (const auto& s : ctx_->dependents()) choices.emplace_back(s.name, DerivativeGenerator::Mode::plain);
    const auto& [v, mode] = choices[static_cast<size_t>(uniform(0, static_cast<int>(choices.size()) - 1))];
    return DifferentialOperator::generator(ctx_, v, mode);
  }

  /// Sum of up to three terms, each a coefficient times at most two generators.
  DifferentialOperator op() {
    DifferentialOperator out = DifferentialOperator::zero(ctx_);
    int terms = uniform(1, 3);
    for (int t = 0; t < terms; ++t) {
      DifferentialOperator term = DifferentialOperator::multiplication(ctx_, coefficient(1));
      int gens = uniform(0, 2);
      for (int g = 0; g < gens; ++g) term = compose(term, generator());
      out = out + term;
    }
    return out;
  }

  std::mt19937_64& rng() { return rng_; }

private:
  ContextPtr ctx_;
  std::mt19937_64 rng_;
  std::vector<Symbol> vars_;
};

}  // namespace wpd::testing
