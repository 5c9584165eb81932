#pragma once

#include <memory>
#include <string>
#include <vector>

#include "wpd/context.hpp"
#include "wpd/expr.hpp"

namespace wpd {

struct DerivativeGenerator {
  enum class Mode { plain, whole };
  Symbol variable;
  Mode mode = Mode::plain;

  std::string key() const { return (mode == Mode::whole ? "W:" : "D:") + variable.name; }
  friend bool operator==(const DerivativeGenerator& a, const DerivativeGenerator& b) {
    return a.mode == b.mode && a.variable == b.variable;
  }
};

/// coefficient * g_1 g_2 ... g_n; g_n acts first.
struct OperatorTerm {
  Expr coefficient;
  std::vector<DerivativeGenerator> generators;
};

struct OperatorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using ContextPtr = std::shared_ptr<const DependencyContext>;

/// Finite sum of coefficient * generator-product terms tied to one context.
/// Terms with identical generator sequences are merged; zero terms pruned.
/// Generators are never reordered.
class DifferentialOperator {
public:
  explicit DifferentialOperator(ContextPtr ctx, std::vector<OperatorTerm> terms = {});

  static DifferentialOperator zero(ContextPtr ctx) { return DifferentialOperator(std::move(ctx)); }
  static DifferentialOperator identity(ContextPtr ctx);
  static DifferentialOperator multiplication(ContextPtr ctx, const Expr& coefficient);
  /// Throws OperatorError when the variable is not in the context, or is not
  /// a variable that the mode supports.
  static DifferentialOperator generator(ContextPtr ctx, const std::string& var, DerivativeGenerator::Mode mode);

  const ContextPtr& context() const { return ctx_; }
  const std::vector<OperatorTerm>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  friend DifferentialOperator operator+(const DifferentialOperator& a, const DifferentialOperator& b);
  friend DifferentialOperator operator-(const DifferentialOperator& a, const DifferentialOperator& b);
  /// Left multiplication by a coefficient.
  friend DifferentialOperator operator*(const Expr& c, const DifferentialOperator& a);

private:
  ContextPtr ctx_;
  std::vector<OperatorTerm> terms_;
};

/// Sum over terms of coefficient * (generators applied right to left).
/// In paper ordering mode each adjacent pair of whole generators is applied
/// through second_whole. The result is ordered per the context.
Expr apply(const DifferentialOperator& op, const Expr& e);

/// Operator equal to A after B, pushing A's generators through B's
/// coefficients by the product rule.
DifferentialOperator compose(const DifferentialOperator& a, const DifferentialOperator& b);

DifferentialOperator commutator(const DifferentialOperator& a, const DifferentialOperator& b);

/// Equality of action: both operators applied to a generic opaque function
/// of every context variable give canonically equal results.
bool op_equals(const DifferentialOperator& a, const DifferentialOperator& b);

/// Equivalent operator written with plain generators only,
/// sum_alpha c_alpha D^alpha with sorted multi-indices.
DifferentialOperator reduce_to_plain(const DifferentialOperator& op);

}  // namespace wpd
