#include "wpd/deriv.hpp"

#include <algorithm>

namespace wpd {

Expr plain_partial(const Expr& e, const std::string& var) {
  switch (e.kind()) {
    case ExprKind::constant:
      return Expr(0);
    case ExprKind::symbol:
      return e.symbol().name == var ? Expr(1) : Expr(0);
    case ExprKind::apply:
    case ExprKind::partial: {
      const auto& args = e.args();
      bool present = std::any_of(args.begin(), args.end(), [&](const Symbol& s) { return s.name == var; });
      if (!present) return Expr(0);
      return Expr::partial(e.symbol(), args, add_to_index(e.index(), var));
    }
    case ExprKind::power: {
      Expr db = plain_partial(e.base(), var);
      if (db.is_zero()) return Expr(0);
      Rational q1 = e.exponent() - 1;
      return Expr::constant(GaussRational(e.exponent())) * pow(e.base(), q1) * db;
    }
    case ExprKind::product: {
      const auto& fs = e.items();
      std::vector<Expr> terms;
      for (size_t i = 0; i < fs.size(); ++i) {
        Expr d = plain_partial(fs[i], var);
        if (d.is_zero()) continue;
        Expr t = Expr::constant(e.coefficient());
        for (size_t j = 0; j < fs.size(); ++j) t = t * (j == i ? d : fs[j]);
        terms.push_back(t);
      }
      return sum_of(terms);
    }
    case ExprKind::sum: {
      std::vector<Expr> terms;
      for (const auto& t : e.items()) terms.push_back(plain_partial(t, var));
      return sum_of(terms);
    }
  }
  return Expr(0);
}

Expr whole_partial(const Expr& e, const std::string& var, const DependencyContext& ctx) {
  if (!ctx.is_independent(var))
    throw DerivativeError("whole derivative variable '" + var + "' is not independent in the context");
  Expr result = plain_partial(e, var);
  for (const auto& u : ctx.dependents()) {
    Expr du = plain_partial(e, u.name);
    if (du.is_zero()) continue;
    result = result + du * ctx.representation(u.name, var).expr;
  }
  return result;
}

Expr whole_partial_wrt_dependent(const Expr& e, const std::string& dependent, const DependencyContext& ctx) {
  if (!ctx.is_dependent(dependent))
    throw DerivativeError("'" + dependent + "' is not a dependent variable of the context");
  return plain_partial(e, dependent);
}

Expr second_whole(const Expr& e, const std::string& outer, const std::string& inner,
                  const DependencyContext& ctx) {
  auto apply_one = [&](const Expr& x, const std::string& v) {
    return ctx.is_dependent(v) ? whole_partial_wrt_dependent(x, v, ctx) : whole_partial(x, v, ctx);
  };
  Expr result = apply_one(apply_one(e, inner), outer);
  if (ctx.ordering() != OrderingMode::paper || !ctx.is_independent(outer) || !ctx.is_independent(inner))
    return result;

  // The operator expansion carries (d_u d_u' e) r(u',inner) r(u,outer);
  // paper mode replaces that product by its symmetrization.
  Expr half = Expr::constant(GaussRational(Rational(1, 2)));
  for (const auto& u : ctx.dependents()) {
    Expr du = plain_partial(e, u.name);
    if (du.is_zero()) continue;
    for (const auto& w : ctx.dependents()) {
      Expr duw = plain_partial(du, w.name);
      if (duw.is_zero()) continue;
      Expr r_outer = ctx.representation(u.name, outer).expr;
      Expr r_inner = ctx.representation(w.name, inner).expr;
      result = result + duw * half * (r_outer * r_inner - r_inner * r_outer);
    }
  }
  return result;
}

Expr order_for_context(const Expr& e, const DependencyContext& ctx) {
  if (!ctx.has_noncommuting()) return e;
  return normal_order(e, ctx.commutators(), ctx.ordering() == OrderingMode::commuting);
}

Expr mixed_difference(const Expr& e, const std::string& v1, const std::string& v2,
                      const DependencyContext& ctx) {
  if (v1 == v2) throw DerivativeError("mixed_difference needs two distinct variables");
  for (const auto& v : {v1, v2})
    if (!ctx.is_independent(v)) throw DerivativeError("'" + v + "' is not independent in the context");
  Expr d = second_whole(e, v1, v2, ctx) - second_whole(e, v2, v1, ctx);
  return order_for_context(d, ctx);
}

Expr instantiate_opaque(const Expr& e, const Symbol& fn, const Expr& body) {
  switch (e.kind()) {
    case ExprKind::constant:
    case ExprKind::symbol:
      return e;
    case ExprKind::apply:
    case ExprKind::partial: {
      if (e.symbol().name != fn.name) return e;
      Expr d = body;
      for (const auto& [var, k] : e.index())
        for (int i = 0; i < k; ++i) d = plain_partial(d, var);
      // Rename declared parameters to the actual argument symbols.
      // Two passes through placeholders so that permuted arguments are not
      // mistaken for a substitution cycle.
      std::map<std::string, Expr> to_tmp, from_tmp;
      const auto& params = fn.params;
      for (size_t i = 0; i < params.size() && i < e.args().size(); ++i) {
        if (params[i] == e.args()[i].name) continue;
        std::string tmp = "__arg" + std::to_string(i);
        to_tmp[params[i]] = Expr::symbol(Symbol(tmp, SymbolKind::parameter));
        from_tmp[tmp] = Expr::symbol(e.args()[i]);
      }
      if (to_tmp.empty()) return d;
      return substitute(substitute(d, to_tmp), from_tmp);
    }
    case ExprKind::power:
      return pow(instantiate_opaque(e.base(), fn, body), e.exponent());
    case ExprKind::product: {
      Expr r = Expr::constant(e.coefficient());
      for (const auto& f : e.items()) r = r * instantiate_opaque(f, fn, body);
      return r;
    }
    case ExprKind::sum: {
      std::vector<Expr> ts;
      for (const auto& t : e.items()) ts.push_back(instantiate_opaque(t, fn, body));
      return sum_of(ts);
    }
  }
  return e;
}

}  // namespace wpd
