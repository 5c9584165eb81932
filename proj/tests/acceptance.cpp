// Acceptance suite: one PASS/FAIL line per criterion; nonzero exit on any failure.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "support.hpp"
#include "wpd/cli.hpp"
#include "wpd/deriv.hpp"
#include "wpd/numeric.hpp"

using namespace wpd;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) detail = what;
    ok = ok && cond;
  }
};

Expr fpartial(const ContextPtr& ctx, const MultiIndex& index) {
  Expr f = ctx->opaque("f");
  return Expr::partial(f.symbol(), f.args(), index);
}

using Mode = DerivativeGenerator::Mode;

DifferentialOperator W(const ContextPtr& ctx, const std::string& v) { return DifferentialOperator::generator(ctx, v, Mode::whole); }
DifferentialOperator D(const ContextPtr& ctx, const std::string& v) { return DifferentialOperator::generator(ctx, v, Mode::plain); }

std::string kappa_name(int i, int j) { return "kappa" + std::to_string(i) + std::to_string(j); }

// [p_i,p_j] expressed through the installed kappa_ab with a < b.
Expr bracket(const ContextPtr& ctx, int i, int j) {
  return i < j ? ctx->var(kappa_name(i, j)) : -ctx->var(kappa_name(j, i));
}

Check criterion1() {
  Check c;
  for (int d = 1; d <= 3; ++d) {
    auto ctx = testing::mass_shell(d);
    Expr f = ctx->opaque("f"), E = ctx->var("E");
    for (int i = 1; i <= d; ++i) {
      auto p = momentum_name(i);
      Expr expected = fpartial(ctx, {{p, 1}}) + fpartial(ctx, {{"E", 1}}) * (ctx->var(p) / E);
      c.require(equals_canonical(apply(W(ctx, p), f), expected), "dimension " + std::to_string(d) + ", " + p);
    }
  }
  return c;
}

Check criterion2() {
  Check c;
  auto ctx = testing::mass_shell();
  Expr E = ctx->var("E"), f = ctx->opaque("f");
  VerifyOptions opts;
  opts.samples = 100;
  opts.seed = 7;
  opts.tol_rel = 1e-9;
  opts.sampler = {SamplerSpec::Kind::off_shell, +1};
  opts.closure_sets = default_closure_sets(*ctx);
  c.require(opts.closure_sets.size() == 3, "three closures");
  for (int i = 1; i <= 3; ++i) {
    Expr lhs = apply(commutator(W(ctx, momentum_name(i)), D(ctx, "E")), f);
    Expr rhs = ctx->var(momentum_name(i)) / (E * E) * fpartial(ctx, {{"E", 1}});
    c.require(equals_canonical(lhs, rhs), "exact form, i=" + std::to_string(i));
    auto rep = verify_identity(lhs, rhs, *ctx, opts);
    c.require(rep.passed() && rep.samples == 300, "numeric check, i=" + std::to_string(i));
  }
  return c;
}

Check criterion3() {
  Check c;
  auto ctx = testing::load("massshell_sqrt.ctx");
  for (int i = 1; i <= 3; ++i) {
    Expr got = apply(commutator(W(ctx, momentum_name(i)), D(ctx, "E")), ctx->opaque("f"));
    c.require(got.is_zero(), "energy-free representation, i=" + std::to_string(i));
  }
  auto shell = testing::mass_shell();
  c.require(!apply(commutator(W(shell, "p1"), D(shell, "E")), shell->opaque("f")).is_zero(), "control is nonzero");
  return c;
}

Check criterion4() {
  Check c;
  auto commuting = testing::mass_shell();
  auto paper = testing::mass_shell(3, OrderingMode::paper);
  auto op = testing::mass_shell(3, OrderingMode::operator_order);
  for (int i = 1; i <= 3; ++i) {
    for (int j = 1; j <= 3; ++j) {
      if (i == j) continue;
      const std::string tag = "(" + std::to_string(i) + "," + std::to_string(j) + ")";
      c.require(momentum_momentum_commutator(commuting, i, j).is_zero(), "commuting " + tag);

      Expr Ep = paper->var("E");
      Expr expected = bracket(paper, i, j) * fpartial(paper, {{"E", 1}}) / pow(Ep, Rational(3));
      c.require(equals_canonical(momentum_momentum_commutator(paper, i, j), expected), "paper " + tag);

      Expr Eo = op->var("E");
      Expr k = bracket(op, i, j);
      Expr got = momentum_momentum_commutator(op, i, j);
      Expr fE = fpartial(op, {{"E", 1}}), fEE = fpartial(op, {{"E", 2}});
      c.require(equals_canonical(got, k * fE / pow(Eo, Rational(3)) - k * fEE / (Eo * Eo)), "operator " + tag);
      // The fE coefficient alone: drop the fEE atom.
      Expr fE_part(0);
      for (const auto& t : terms_of(got)) {
        bool has_fEE = t == fEE;
        if (t.kind() == ExprKind::product)
          for (const auto& x : t.items()) has_fEE = has_fEE || x == fEE;
        if (!has_fEE) fE_part = fE_part + t;
      }
      c.require(equals_canonical(fE_part, k * fE / pow(Eo, Rational(3))), "operator fE coefficient " + tag);
    }
  }
  return c;
}

Check criterion5() {
  Check c;
  auto ctx = testing::mass_shell(3, OrderingMode::paper, true);
  Expr E = ctx->var("E"), I = Expr::imaginary_unit();
  Expr expected = I * ctx->var("B3") * fpartial(ctx, {{"E", 1}}) / pow(E, Rational(3));
  c.require(equals_canonical(momentum_momentum_commutator(ctx, 1, 2), expected), "(1,2)");
  // Same value through the kappa form and the substitution kappa12 -> i B3.
  auto kctx = testing::mass_shell(3, OrderingMode::paper);
  Expr viaKappa = momentum_momentum_commutator(kctx, 1, 2);
  Expr substituted = substitute(viaKappa, {{"kappa12", I * Expr::symbol(Symbol("B3", SymbolKind::parameter))}});
  c.require(print_expr(substituted) == print_expr(expected), "substitution route");
  return c;
}

Check criterion6() {
  Check c;
  for (bool noncommuting : {false, true}) {
    auto ctx = noncommuting ? testing::mass_shell(3, OrderingMode::paper, true) : testing::mass_shell();
    auto table = position_commutator_table(ctx);
    auto zero = DifferentialOperator::zero(ctx);
    for (int a = 0; a <= 3; ++a) {
      c.require(op_equals(table.entries[a][a], zero), "diagonal");
      for (int b = 0; b <= 3; ++b)
        c.require(op_equals(table.entries[a][b], zero - table.entries[b][a]), "antisymmetry");
    }
    Expr E = ctx->var("E"), f = ctx->opaque("f"), fE = fpartial(ctx, {{"E", 1}});
    for (int k = 1; k <= 3; ++k) {
      Expr image = apply(table.entries[0][k], f);
      Expr pk = ctx->var(momentum_name(k));
      // image = phase * (p_k/E^2) fE with a constant phase of modulus one.
      Expr ratio = image * E * E / pk / fE;
      bool constant = ratio.is_constant();
      c.require(constant, "proportional to (p_k/E^2) fE");
      if (constant) c.require(std::abs(std::abs(ratio.constant_value().to_complex()) - 1.0) < 1e-15, "unit phase");
    }
  }
  return c;
}

Check criterion7() {
  Check c;
  auto ctx = testing::mass_shell();
  Expr E = ctx->var("E"), p1 = ctx->var("p1"), p2 = ctx->var("p2"), p3 = ctx->var("p3"), m = ctx->var("m");
  const std::vector<Expr> exprs = {E, p1 * E, sqrt(m * m + p1 * p1 + p2 * p2 + p3 * p3) * p2};
  for (int sign : {+1, -1}) {
    for (const auto& e : exprs) {
      for (int i = 1; i <= 3; ++i) {
        const std::string v = momentum_name(i);
        Expr d = whole_partial(e, v, *ctx);
        VerifyOptions opts;
        opts.samples = 50;
        opts.seed = 1;
        opts.tol_rel = 1e-6;
        opts.tol_abs = 1e-8;
        opts.sampler = {SamplerSpec::Kind::on_shell, sign};
        const DependencyContext& cref = *ctx;
        auto rep = verify_probe(cref, [&](const NumericBinding& b) {
          return std::make_pair(evaluate(d, b), fd_whole(e, v, cref, b, 1e-5));
        }, opts);
        c.require(rep.passed() && rep.samples == 50, "first-order FD " + print_expr(e) + " d" + v);
      }
    }
  }

  // Nested FD commutator against the closed form, three closures.
  auto points = sample_on_shell(*ctx, {50, 2, +1, {}});
  for (const auto& closure : shipped_closures()) {
    for (int i = 1; i <= 3; ++i) {
      for (const auto& b : points) {
        ArgValues at;
        for (const auto& name : {"p1", "p2", "p3", "E"}) at[name] = b.values.at(name);
        Complex fE = *closure.derivative({{"p1", at["p1"]}, {"E", at["E"]}}, {{"E", 1}});
        Complex closed = at[momentum_name(i)] / (at["E"] * at["E"]) * fE;
        Complex fd = fd_commutator_pE(closure, i, at, 1e-4);
        double scale = std::max(std::abs(closed), std::abs(fd));
        double abs_err = std::abs(closed - fd);
        c.require(abs_err <= 1e-8 || abs_err <= 1e-3 * scale, "nested FD " + closure.label);
      }
    }
  }

  // Spot value with f = E^2 at p = (3,0,0), m = 4.
  auto b = sample_on_shell(*ctx, {1, 0, +1, {{"p1", 3}, {"p2", 0}, {"p3", 0}, {"m", 4}}}).front();
  c.require(std::abs(b.values["E"].real() - 5.0) < 1e-12, "E = 5");
  Expr f = ctx->opaque("f");
  Expr symbolic = instantiate_opaque(momentum_energy_commutator(ctx, 1), f.symbol(), E * E);
  c.require(std::abs(evaluate(symbolic, b).real() - 1.2) < 1e-12, "symbolic spot value");
  OpaqueClosure square{"E^2", [](const ArgValues& a) { return a.at("E") * a.at("E"); }, nullptr};
  ArgValues at{{"p1", 3}, {"p2", 0}, {"p3", 0}, {"E", 5}};
  c.require(std::abs(fd_commutator_pE(square, 1, at, 1e-4).real() - 1.2) <= 1.2e-3, "nested FD spot value");
  return c;
}

Check criterion8() {
  Check c;
  SymbolTable symbols;
  symbols.declare(retarded_time_symbol());
  auto ctx = build_retarded({parse_expr("0.5*tp", symbols)});
  Expr rep = ctx->representation("tp", "t").expr;
  c.require(rep == Expr(2), "representation simplifies to 2");
  Expr tp = ctx->var("tp");
  VerifyOptions opts;
  opts.samples = 20;
  opts.seed = 8;
  opts.tol_rel = 1e-5;
  opts.tol_abs = 0;
  const DependencyContext& cref = *ctx;
  auto report = verify_probe(cref, [&](const NumericBinding& b) {
    // Root-solved t' is checked against the closed form before differencing.
    double closed = (b.values.at("t").real() - b.values.at("x").real()) / 0.5;
    if (std::abs(b.values.at("tp").real() - closed) > 1e-12) throw NumericFailure("root solve mismatch");
    return std::make_pair(evaluate(rep, b), fd_whole(tp, "t", cref, b, 1e-5));
  }, opts);
  c.require(report.passed() && report.samples == 20, "root solve + FD");
  return c;
}

Check criterion9() {
  Check c;
  const int N = 200;
  auto ctx = testing::mass_shell();
  testing::ExprGen gen(ctx, 909);
  for (int n = 0; n < N; ++n) {
    Expr a = gen.expr(2), b = gen.expr(2);
    Expr alpha = gen.constant(), beta = gen.constant();
    const std::string v = momentum_name(gen.uniform(1, 3));
    c.require(equals_canonical(whole_partial(alpha * a + beta * b, v, *ctx),
                               alpha * whole_partial(a, v, *ctx) + beta * whole_partial(b, v, *ctx)),
              "linearity");
    c.require(equals_canonical(whole_partial(a * b, v, *ctx),
                               whole_partial(a, v, *ctx) * b + a * whole_partial(b, v, *ctx)),
              "Leibniz");
    const std::string x = gen.uniform(0, 1) ? "E" : momentum_name(gen.uniform(1, 3));
    c.require(equals_canonical(plain_partial(plain_partial(a, v), x), plain_partial(plain_partial(a, x), v)),
              "plain mixed partials");
    const std::string w = momentum_name(gen.uniform(1, 3));
    if (w != v) c.require(mixed_difference(a, v, w, *ctx).is_zero(), "mixed whole, commuting");
  }

  auto octx = testing::mass_shell(2);
  testing::ExprGen ogen(octx, 910);
  auto zero = DifferentialOperator::zero(octx);
  for (int n = 0; n < N; ++n) {
    auto A = ogen.op(), B = ogen.op(), C = ogen.op();
    Expr alpha = Expr::constant(GaussRational(ogen.rational()));
    c.require(op_equals(commutator(A, B), zero - commutator(B, A)), "antisymmetry");
    c.require(op_equals(commutator(A + alpha * B, C), commutator(A, C) + alpha * commutator(B, C)), "bilinearity");
    auto jacobi = commutator(commutator(A, B), C) + commutator(commutator(B, C), A) + commutator(commutator(C, A), B);
    c.require(op_equals(jacobi, zero), "Jacobi");
  }

  for (auto mode : {OrderingMode::paper, OrderingMode::operator_order}) {
    auto nctx = testing::mass_shell(3, mode);
    testing::ExprGen ngen(nctx, 911);
    Expr E = nctx->var("E"), f = nctx->opaque("f");
    Expr fE = fpartial(nctx, {{"E", 1}}), fEE = fpartial(nctx, {{"E", 2}});
    for (int n = 0; n < N; ++n) {
      int i = ngen.uniform(1, 3), j = ngen.uniform(1, 3);
      if (i == j) j = i % 3 + 1;
      Expr k = bracket(nctx, i, j);
      Expr expected = k * fE / pow(E, Rational(3));
      if (mode == OrderingMode::operator_order) expected = expected - k * fEE / (E * E);
      Expr got = mixed_difference(f, momentum_name(i), momentum_name(j), *nctx);
      c.require(equals_canonical(got, expected), std::string("mixed whole, ") + to_string(mode));
      c.require(equals_canonical(got, momentum_momentum_commutator(nctx, i, j)), "agrees with operator commutator");
    }
  }
  return c;
}

std::string capture(const std::string& command, int& status) {
  std::string out;
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) {
    status = -1;
    return out;
  }
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  int raw = pclose(pipe);
  status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return out;
}

Check criterion10() {
  Check c;
  int checked = 0;
  for (auto mode : {OrderingMode::commuting, OrderingMode::paper}) {
    auto ctx = testing::mass_shell(3, mode, mode == OrderingMode::paper);
    SymbolTable symbols = ctx->symbols();
    testing::ExprGen gen(ctx, 1010 + static_cast<int>(mode));
    for (int n = 0; n < 600; ++n) {
      Expr e = gen.expr(3);
      std::string text = print_expr(e);
      try {
        c.require(equals_canonical(parse_expr(text, symbols), e), "round trip of " + text);
      } catch (const ParseError& err) {
        c.require(false, "round trip parse of " + text + ": " + err.what());
      }
      ++checked;
    }
  }
  c.require(checked >= 1000, "corpus size");

  const std::string shell = testing::data_path("massshell.ctx");
  auto code = [](std::vector<std::string> args) {
    std::ostringstream out, err;
    return run_cli(args, out, err);
  };
  c.require(code({"derive", shell, "--expr", "f", "--wrt", "p1"}) == kExitOk, "exit 0");
  c.require(code({"verify", shell, "--lhs", "p1", "--rhs", "p2"}) == kExitVerifyFailed, "exit 1");
  c.require(code({"derive", shell, "--expr", "f", "--wrt", "q"}) == kExitUsage, "exit 2 (unknown variable)");
  c.require(code({"scenario", "unknown"}) == kExitUsage, "exit 2 (unknown scenario)");
  c.require(code({"derive", shell, "--expr", "p1 +* 2", "--wrt", "p1"}) == kExitUsage, "exit 2 (syntax)");
  c.require(code({"derive", testing::data_path("invalid.ctx"), "--expr", "E", "--wrt", "p1"}) == kExitInvalidContext,
            "exit 3");
  c.require(code({"verify", testing::data_path("unsolvable.ctx"), "--lhs", "E", "--rhs", "E"}) == kExitNumeric,
            "exit 4");

  // Two separate processes, same seed: identical bytes.
  const std::string cmd = std::string(WPD_CLI_PATH) + " verify '" + shell +
                          "' --lhs 'W[p1] D[E] - D[E] W[p1] @ f' --rhs '(p1/E^2)*D[f,E]' --samples 100 --seed 7"
                          " --format json";
  int s1 = 0, s2 = 0;
  std::string a = capture(cmd, s1), b = capture(cmd, s2);
  c.require(s1 == 0 && s2 == 0, "verify process exit 0");
  c.require(!a.empty() && a == b, "byte-stable JSON");
  int s3 = 0;
  capture(std::string(WPD_CLI_PATH) + " scenario unknown 2>/dev/null", s3);
  c.require(s3 == kExitUsage, "process exit 2");
  return c;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    Check (*run)();
  };
  const Criterion criteria[] = {
      {1, "whole derivative expands to plain partials plus chain term (dims 1-3)", criterion1},
      {2, "[W_i, D_E] f = (p_i/E^2) f_E, exact and at 100 off-shell points x 3 closures (rel 1e-9)", criterion2},
      {3, "energy-free representation makes [W_i, D_E] f vanish", criterion3},
      {4, "[W_i, W_j] f per ordering mode (commuting, paper, operator)", criterion4},
      {5, "Feynman bracket gives (i B3/E^3) f_E for (1,2)", criterion5},
      {6, "position commutator table antisymmetric, entries[0][k] ~ unit phase (p_k/E^2) D[E]", criterion6},
      {7, "finite differences: whole derivative (rel 1e-6, h 1e-5), nested commutator (rel 1e-3, h 1e-4), spot 1.2",
       criterion7},
      {8, "retarded time: dtp/dt = 2, root solve + FD at 20 points (rel 1e-5)", criterion8},
      {9, "randomized algebraic properties (200 cases each)", criterion9},
      {10, "round trip on 1200 expressions, CLI exit codes, byte-stable JSON", criterion10},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check c;
    try {
      c = cr.run();
    } catch (const std::exception& ex) {
      c.ok = false;
      c.detail = std::string("exception: ") + ex.what();
    }
    std::cout << "criterion " << cr.id << ": " << (c.ok ? "PASS" : "FAIL") << "  " << cr.name;
    if (!c.ok) std::cout << "  [" << c.detail << "]";
    std::cout << std::endl;
    if (!c.ok) ++failed;
  }
  std::cout << (failed ? "acceptance: FAILED " + std::to_string(failed) + " of 10" : "acceptance: all 10 passed")
            << std::endl;
  return failed ? 1 : 0;
}
