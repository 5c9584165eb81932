#include "wpd/diffop.hpp"

#include <map>

#include "wpd/deriv.hpp"

namespace wpd {

namespace {

std::string sequence_key(const std::vector<DerivativeGenerator>& gens) {
  std::string k;
  for (const auto& g : gens) k += g.key() + "|";
  return k;
}

std::vector<OperatorTerm> merge_terms(const std::vector<OperatorTerm>& terms) {
  std::map<std::string, OperatorTerm> merged;
  for (const auto& t : terms) {
    if (t.coefficient.is_zero()) continue;
    auto key = sequence_key(t.generators);
    auto it = merged.find(key);
    if (it == merged.end()) merged.emplace(key, t);
    else it->second.coefficient = it->second.coefficient + t.coefficient;
  }
  std::vector<OperatorTerm> out;
  for (auto& [k, t] : merged)
    if (!t.coefficient.is_zero()) out.push_back(std::move(t));
  return out;
}

void require_same_context(const DifferentialOperator& a, const DifferentialOperator& b) {
  if (a.context() != b.context()) throw OperatorError("operators belong to different contexts");
}

Expr apply_generator(const DerivativeGenerator& g, const Expr& e, const DependencyContext& ctx) {
  if (g.mode == DerivativeGenerator::Mode::plain) return plain_partial(e, g.variable.name);
  if (ctx.is_dependent(g.variable.name)) return whole_partial_wrt_dependent(e, g.variable.name, ctx);
  return whole_partial(e, g.variable.name, ctx);
}

bool whole_independent(const DerivativeGenerator& g, const DependencyContext& ctx) {
  return g.mode == DerivativeGenerator::Mode::whole && ctx.is_independent(g.variable.name);
}

Expr apply_sequence(const std::vector<DerivativeGenerator>& gens, const Expr& e, const DependencyContext& ctx) {
  Expr x = e;
  const bool paper = ctx.ordering() == OrderingMode::paper;
  long i = static_cast<long>(gens.size()) - 1;
  while (i >= 0 && !x.is_zero()) {
    const auto& g = gens[static_cast<size_t>(i)];
    if (paper && i >= 1 && whole_independent(g, ctx) && whole_independent(gens[static_cast<size_t>(i - 1)], ctx)) {
      x = second_whole(x, gens[static_cast<size_t>(i - 1)].variable.name, g.variable.name, ctx);
      i -= 2;
    } else {
      x = apply_generator(g, x, ctx);
      i -= 1;
    }
  }
  return x;
}

// g_1..g_n (b * H) expanded by the ordered Leibniz rule.
void push_through(const std::vector<DerivativeGenerator>& outer, size_t count, const Expr& b,
                  const std::vector<DerivativeGenerator>& inner, const DependencyContext& ctx,
                  std::vector<OperatorTerm>& out, const Expr& left) {
  if (b.is_zero()) return;
  if (count == 0) {
    out.push_back({left * b, inner});
    return;
  }
  const DerivativeGenerator& g = outer[count - 1];
  push_through(outer, count - 1, apply_generator(g, b, ctx), inner, ctx, out, left);
  std::vector<DerivativeGenerator> extended;
  extended.reserve(inner.size() + 1);
  extended.push_back(g);
  extended.insert(extended.end(), inner.begin(), inner.end());
  push_through(outer, count - 1, b, extended, ctx, out, left);
}

Symbol generic_function(const DependencyContext& ctx) {
  std::vector<std::string> params;
  for (const auto* list : {&ctx.independents(), &ctx.dependents(), &ctx.parameters()})
    for (const auto& s : *list) params.push_back(s.name);
  return Symbol("__Phi", SymbolKind::opaque_function, 0, params);
}

Expr generic_application(const DependencyContext& ctx, const Symbol& phi) {
  std::vector<Symbol> args;
  for (const auto& p : phi.params) args.push_back(ctx.symbol(p));
  return Expr::apply(phi, args);
}

}  // namespace

DifferentialOperator::DifferentialOperator(ContextPtr ctx, std::vector<OperatorTerm> terms)
    : ctx_(std::move(ctx)), terms_(merge_terms(terms)) {
  if (!ctx_) throw OperatorError("operator without a context");
}

DifferentialOperator DifferentialOperator::identity(ContextPtr ctx) {
  return multiplication(std::move(ctx), Expr(1));
}

DifferentialOperator DifferentialOperator::multiplication(ContextPtr ctx, const Expr& c) {
  return DifferentialOperator(std::move(ctx), {OperatorTerm{c, {}}});
}

DifferentialOperator DifferentialOperator::generator(ContextPtr ctx, const std::string& var,
                                                     DerivativeGenerator::Mode mode) {
  auto sym = ctx->find(var);
  if (!sym || sym->kind == SymbolKind::opaque_function || sym->kind == SymbolKind::commutator)
    throw OperatorError("derivative variable not in context: " + var);
  if (mode == DerivativeGenerator::Mode::whole && sym->kind == SymbolKind::parameter)
    throw OperatorError("whole derivative needs an independent or dependent variable: " + var);
  Symbol s = *sym;
  return DifferentialOperator(std::move(ctx), {OperatorTerm{Expr(1), {DerivativeGenerator{s, mode}}}});
}

DifferentialOperator operator+(const DifferentialOperator& a, const DifferentialOperator& b) {
  require_same_context(a, b);
  std::vector<OperatorTerm> terms = a.terms_;
  terms.insert(terms.end(), b.terms_.begin(), b.terms_.end());
  return DifferentialOperator(a.ctx_, terms);
}

DifferentialOperator operator*(const Expr& c, const DifferentialOperator& a) {
  std::vector<OperatorTerm> terms;
  for (const auto& t : a.terms_) terms.push_back({c * t.coefficient, t.generators});
  return DifferentialOperator(a.ctx_, terms);
}

DifferentialOperator operator-(const DifferentialOperator& a, const DifferentialOperator& b) {
  return a + Expr(-1) * b;
}

Expr apply(const DifferentialOperator& op, const Expr& e) {
  const DependencyContext& ctx = *op.context();
  std::vector<Expr> parts;
  for (const auto& t : op.terms()) parts.push_back(t.coefficient * apply_sequence(t.generators, e, ctx));
  return order_for_context(sum_of(parts), ctx);
}

DifferentialOperator compose(const DifferentialOperator& a, const DifferentialOperator& b) {
  require_same_context(a, b);
  const DependencyContext& ctx = *a.context();
  std::vector<OperatorTerm> out;
  for (const auto& ta : a.terms())
    for (const auto& tb : b.terms())
      push_through(ta.generators, ta.generators.size(), tb.coefficient, tb.generators, ctx, out, ta.coefficient);
  return DifferentialOperator(a.context(), out);
}

DifferentialOperator commutator(const DifferentialOperator& a, const DifferentialOperator& b) {
  return compose(a, b) - compose(b, a);
}

bool op_equals(const DifferentialOperator& a, const DifferentialOperator& b) {
  require_same_context(a, b);
  const DependencyContext& ctx = *a.context();
  Expr phi = generic_application(ctx, generic_function(ctx));
  return equals_canonical(apply(a, phi), apply(b, phi));
}

DifferentialOperator reduce_to_plain(const DifferentialOperator& op) {
  const DependencyContext& ctx = *op.context();
  Symbol phi_sym = generic_function(ctx);
  Expr phi = generic_application(ctx, phi_sym);
  Expr image = apply(op, phi);

  std::vector<OperatorTerm> out;
  for (const auto& t : terms_of(image)) {
    std::vector<Expr> factors;
    Expr coefficient(1);
    std::optional<Expr> atom;
    if (t.kind() == ExprKind::product) {
      coefficient = Expr::constant(t.coefficient());
      factors = t.items();
    } else {
      factors = {t};
    }
    for (const auto& f : factors) {
      bool is_phi = (f.kind() == ExprKind::apply || f.kind() == ExprKind::partial) && f.symbol().name == phi_sym.name;
      if (is_phi && !atom) atom = f;
      else coefficient = coefficient * f;
    }
    if (!atom) throw OperatorError("operator image is not linear in the test function");
    std::vector<DerivativeGenerator> gens;
    for (const auto& [var, k] : atom->index())
      for (int i = 0; i < k; ++i) gens.push_back({ctx.symbol(var), DerivativeGenerator::Mode::plain});
    out.push_back({coefficient, gens});
  }
  return DifferentialOperator(op.context(), out);
}

}  // namespace wpd
