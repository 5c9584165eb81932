#include "wpd/scenarios.hpp"

#include <cmath>

#include "wpd/deriv.hpp"

namespace wpd {

std::string momentum_name(int i) { return "p" + std::to_string(i); }

namespace {

int levi_civita(int i, int j, int k) {
  if (i == j || j == k || i == k) return 0;
  // Even permutations of (1,2,3).
  if ((i == 1 && j == 2 && k == 3) || (i == 2 && j == 3 && k == 1) || (i == 3 && j == 1 && k == 2)) return 1;
  return -1;
}

}  // namespace

void install_feynman(DependencyContext& ctx) {
  for (int i = 1; i <= 3; ++i)
    if (!ctx.is_independent(momentum_name(i)))
      throw ScenarioError("the Feynman bracket needs independents p1, p2, p3");
  for (int k = 1; k <= 3; ++k)
    if (!ctx.find("B" + std::to_string(k))) ctx.add_parameter("B" + std::to_string(k));
  for (int i = 1; i <= 3; ++i) {
    for (int j = i + 1; j <= 3; ++j) {
      Expr value(0);
      for (int k = 1; k <= 3; ++k) {
        int eps = levi_civita(i, j, k);
        if (eps) value = value + Expr(eps) * Expr::imaginary_unit() * ctx.var("B" + std::to_string(k));
      }
      ctx.declare_commutator(momentum_name(i), momentum_name(j), value);
    }
  }
}

void install_kappa(DependencyContext& ctx) {
  const auto indeps = ctx.independents();
  for (size_t a = 0; a < indeps.size(); ++a) {
    for (size_t b = a + 1; b < indeps.size(); ++b) {
      const std::string& x = indeps[a].name;
      const std::string& y = indeps[b].name;
      if (ctx.commutators().lookup(x, y)) continue;
      std::string suffix = (x.size() == 2 && y.size() == 2 && x[0] == 'p' && y[0] == 'p')
                               ? std::string{x[1], y[1]}
                               : x + "_" + y;
      std::string name = "kappa" + suffix;
      if (!ctx.find(name)) ctx.add_commutator_symbol(name);
      ctx.declare_commutator(x, y, ctx.var(name));
    }
  }
}

std::shared_ptr<DependencyContext> build_mass_shell(const MassShellScenario& s) {
  if (s.dimension < 1) throw ScenarioError("mass-shell dimension must be at least 1");
  if (s.feynman && s.dimension != 3) throw ScenarioError("the Feynman bracket needs dimension 3 (Levi-Civita symbol)");
  auto ctx = std::make_shared<DependencyContext>();
  std::vector<std::string> fargs;
  for (int i = 1; i <= s.dimension; ++i) {
    ctx->add_independent(momentum_name(i));
    fargs.push_back(momentum_name(i));
  }
  ctx->add_parameter("m");
  ctx->add_dependent("E");
  fargs.push_back("E");
  ctx->set_ordering(s.ordering);

  // Brackets first, so that every expression below sees the final classes.
  if (s.feynman) install_feynman(*ctx);
  else if (s.ordering != OrderingMode::commuting) install_kappa(*ctx);

  Expr E = ctx->var("E");
  Expr g = E * E - ctx->var("m") * ctx->var("m");
  for (int i = 1; i <= s.dimension; ++i) g = g - ctx->var(momentum_name(i)) * ctx->var(momentum_name(i));
  ctx->add_constraint(g, "E");
  for (int i = 1; i <= s.dimension; ++i) ctx->set_representation("E", momentum_name(i), ctx->var(momentum_name(i)) / E);
  ctx->add_opaque("f", fargs);
  return ctx;
}

Expr momentum_energy_commutator(const ContextPtr& ctx, int i) {
  auto w = DifferentialOperator::generator(ctx, momentum_name(i), DerivativeGenerator::Mode::whole);
  auto d = DifferentialOperator::generator(ctx, "E", DerivativeGenerator::Mode::plain);
  return apply(commutator(w, d), ctx->opaque("f"));
}

Expr momentum_momentum_commutator(const ContextPtr& ctx, int i, int j) {
  auto wi = DifferentialOperator::generator(ctx, momentum_name(i), DerivativeGenerator::Mode::whole);
  auto wj = DifferentialOperator::generator(ctx, momentum_name(j), DerivativeGenerator::Mode::whole);
  return apply(commutator(wi, wj), ctx->opaque("f"));
}

DifferentialOperator position_operator(const ContextPtr& ctx, int mu) {
  Expr I = Expr::imaginary_unit();
  if (mu == 0) return I * DifferentialOperator::generator(ctx, "E", DerivativeGenerator::Mode::plain);
  return (-I) * DifferentialOperator::generator(ctx, momentum_name(mu), DerivativeGenerator::Mode::whole);
}

PositionCommutatorTable position_commutator_table(const ContextPtr& ctx) {
  PositionCommutatorTable table;
  table.dimension = static_cast<int>(ctx->independents().size());
  std::vector<DifferentialOperator> ops;
  for (int mu = 0; mu <= table.dimension; ++mu) ops.push_back(position_operator(ctx, mu));
  for (int mu = 0; mu <= table.dimension; ++mu) {
    std::vector<DifferentialOperator> row;
    for (int nu = 0; nu <= table.dimension; ++nu) row.push_back(reduce_to_plain(commutator(ops[mu], ops[nu])));
    table.entries.push_back(std::move(row));
  }
  return table;
}

Symbol retarded_time_symbol() { return Symbol("tp", SymbolKind::dependent); }

std::shared_ptr<DependencyContext> build_retarded(const RetardedScenario& s) {
  auto ctx = std::make_shared<DependencyContext>();
  ctx->add_independent("x");
  ctx->add_independent("t");
  ctx->add_dependent("tp");
  if (contains_opaque(s.trajectory)) throw ScenarioError("trajectory must not contain opaque functions");
  for (const auto& name : free_symbols(s.trajectory)) {
    if (name == "tp") continue;
    if (name == "x" || name == "t") throw ScenarioError("trajectory may depend only on tp and parameters, found " + name);
    ctx->add_parameter(name);
  }
  if (!ctx->issues().empty()) throw ScenarioError(ctx->issues().front());

  Expr velocity = plain_partial(s.trajectory, "tp");
  if (velocity.is_constant()) {
    Complex v = velocity.constant_value().to_complex();
    if (std::abs(v) >= 1) throw ScenarioError("degenerate constraint: superluminal trajectory, |dx0/dtp| >= 1");
  }
  // Re-read the trajectory through the context's symbols.
  std::map<std::string, Expr> rebind;
  for (const auto& name : free_symbols(s.trajectory)) rebind[name] = ctx->var(name);
  Expr x0 = substitute(s.trajectory, rebind);

  Expr tp = ctx->var("tp");
  Expr g = tp + (ctx->var("x") - x0) - ctx->var("t");
  ctx->add_constraint(g, "tp");
  ctx->add_opaque("g", {"x", "tp"});
  return ctx;
}

}  // namespace wpd
