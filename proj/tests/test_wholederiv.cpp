#include <gtest/gtest.h>

#include "support.hpp"
#include "wpd/deriv.hpp"
#include "wpd/numeric.hpp"

namespace wpd {
namespace {

class WholeDerivTest : public ::testing::Test {
protected:
  ContextPtr ctx = testing::mass_shell();
  Expr p1 = ctx->var("p1"), p2 = ctx->var("p2"), E = ctx->var("E"), f = ctx->opaque("f");

  Expr fd(const MultiIndex& index) { return Expr::partial(f.symbol(), f.args(), index); }
};

TEST_F(WholeDerivTest, PlainPartialExamples) {
  EXPECT_EQ(plain_partial(p1 * p1 * E, "p1"), Expr(2) * p1 * E);
  EXPECT_EQ(plain_partial(p1 / E, "E"), -p1 / (E * E));
  EXPECT_EQ(plain_partial(f, "E"), fd({{"E", 1}}));
}

TEST_F(WholeDerivTest, WholePartialExamples) {
  EXPECT_EQ(whole_partial(f, "p1", *ctx), fd({{"p1", 1}}) + fd({{"E", 1}}) * (p1 / E));
  EXPECT_EQ(whole_partial(p1 * p1, "p1", *ctx), Expr(2) * p1);
  EXPECT_EQ(whole_partial(E, "p1", *ctx), p1 / E);
}

TEST_F(WholeDerivTest, WholeWithRespectToDependentIsPlain) {
  EXPECT_EQ(whole_partial_wrt_dependent(f, "E", *ctx), fd({{"E", 1}}));
  EXPECT_EQ(whole_partial_wrt_dependent(p1 / E, "E", *ctx), -p1 / (E * E));
  EXPECT_TRUE(whole_partial_wrt_dependent(p1, "E", *ctx).is_zero());
}

TEST_F(WholeDerivTest, MissingRepresentationNamesPair) {
  DependencyContext bare;
  bare.add_independent("p1");
  bare.add_dependent("E");
  try {
    whole_partial(bare.var("E"), "p1", bare);
    FAIL();
  } catch (const MissingRepresentation& e) {
    EXPECT_EQ(e.dependent, "E");
    EXPECT_EQ(e.independent, "p1");
  }
}

TEST_F(WholeDerivTest, MixedDifferenceCommutingIsZero) {
  EXPECT_TRUE(mixed_difference(f, "p1", "p2", *ctx).is_zero());
  EXPECT_TRUE(mixed_difference(p1 * p1 + p2 * p2, "p1", "p2", *ctx).is_zero());
}

TEST(MixedDifference, OperatorAndPaperModes) {
  for (auto mode : {OrderingMode::operator_order, OrderingMode::paper}) {
    auto ctx = testing::mass_shell(3, mode);
    Expr E = ctx->var("E"), k = ctx->var("kappa12"), f = ctx->opaque("f");
    Expr fE = Expr::partial(f.symbol(), f.args(), {{"E", 1}});
    Expr fEE = Expr::partial(f.symbol(), f.args(), {{"E", 2}});
    Expr expected = k * fE / pow(E, Rational(3));
    if (mode == OrderingMode::operator_order) expected = expected - k * fEE / (E * E);
    EXPECT_TRUE(equals_canonical(mixed_difference(f, "p1", "p2", *ctx), expected)) << to_string(mode);
    Expr p1 = ctx->var("p1"), p2 = ctx->var("p2");
    EXPECT_TRUE(mixed_difference(p1 * p1 + p2 * p2, "p1", "p2", *ctx).is_zero()) << to_string(mode);
  }
}

TEST(Properties, LinearityAndLeibniz) {
  auto ctx = testing::mass_shell();
  testing::ExprGen gen(ctx, 77);
  for (int n = 0; n < 200; ++n) {
    Expr a = gen.expr(2), b = gen.expr(2);
    Expr alpha = gen.constant(), beta = gen.constant();
    const std::string v = momentum_name(gen.uniform(1, 3));
    Expr lhs = whole_partial(alpha * a + beta * b, v, *ctx);
    Expr rhs = alpha * whole_partial(a, v, *ctx) + beta * whole_partial(b, v, *ctx);
    EXPECT_TRUE(equals_canonical(lhs, rhs)) << print_expr(a) << " ; " << print_expr(b);
    Expr leibniz = whole_partial(a, v, *ctx) * b + a * whole_partial(b, v, *ctx);
    EXPECT_TRUE(equals_canonical(whole_partial(a * b, v, *ctx), leibniz)) << print_expr(a) << " ; " << print_expr(b);
  }
}

TEST(Properties, PlainMixedPartialsCommute) {
  auto ctx = testing::mass_shell();
  testing::ExprGen gen(ctx, 78);
  const std::vector<std::string> vars = {"p1", "p2", "p3", "E", "m"};
  for (int n = 0; n < 200; ++n) {
    Expr e = gen.expr(3);
    const auto& a = vars[static_cast<size_t>(gen.uniform(0, 4))];
    const auto& b = vars[static_cast<size_t>(gen.uniform(0, 4))];
    EXPECT_TRUE(equals_canonical(plain_partial(plain_partial(e, a), b), plain_partial(plain_partial(e, b), a)));
  }
}

TEST(Properties, NoDependentsMeansPlain) {
  DependencyContext flat;
  for (int i = 1; i <= 3; ++i) flat.add_independent(momentum_name(i));
  flat.add_parameter("m");
  flat.add_parameter("E");
  flat.add_opaque("f", {"p1", "p2", "p3", "E"});
  auto ctx = std::make_shared<DependencyContext>(flat);
  testing::ExprGen gen(ctx, 79);
  for (int n = 0; n < 200; ++n) {
    Expr e = gen.expr(3);
    EXPECT_EQ(whole_partial(e, "p2", *ctx), plain_partial(e, "p2"));
  }
}

TEST(Properties, MixedWholeDerivativesCommuteInCommutingMode) {
  auto ctx = testing::mass_shell();
  testing::ExprGen gen(ctx, 80);
  for (int n = 0; n < 200; ++n) {
    Expr e = gen.expr(2);
    EXPECT_TRUE(equals_canonical(mixed_difference(e, "p1", "p3", *ctx), Expr(0))) << print_expr(e);
  }
}

// Hand expansion checked numerically: nested FD of the explicit closure
// along the shell agrees with the commuting-mode zero.
TEST(MixedDifference, NestedFiniteDifferencesVanishOnShell) {
  auto ctx = testing::mass_shell();
  Expr f = ctx->opaque("f");
  auto closure = closure_for(f.symbol(), polynomial_closure());
  Expr concrete = instantiate_opaque(f, f.symbol(), ctx->var("E") * ctx->var("E") * ctx->var("p1"));
  for (const auto& b0 : sample_on_shell(*ctx, {20, 5, +1, {}})) {
    NumericBinding b = b0;
    b.functions["f"] = closure;
    auto along = [&](const std::string& v, const std::string& w) {
      const double h = 1e-4;
      NumericBinding lo = b, hi = b;
      lo.values[v] -= h;
      hi.values[v] += h;
      lo.values["E"] = solve_dependent(*ctx, "E", lo, +1, b.values["E"].real());
      hi.values["E"] = solve_dependent(*ctx, "E", hi, +1, b.values["E"].real());
      return (fd_whole(concrete, w, *ctx, hi, 1e-4) - fd_whole(concrete, w, *ctx, lo, 1e-4)) / (2 * h);
    };
    Complex d12 = along("p1", "p2"), d21 = along("p2", "p1");
    EXPECT_NEAR(std::abs(d12 - d21), 0.0, 1e-4 * (1 + std::abs(d12)));
  }
}

}  // namespace
}  // namespace wpd
