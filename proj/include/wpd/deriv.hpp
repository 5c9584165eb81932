#pragma once

#include <string>

#include "wpd/context.hpp"
#include "wpd/expr.hpp"

namespace wpd {

struct DerivativeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Partial derivative holding every other symbol fixed. Opaque applications
/// turn into (or extend) plain partial atoms.
Expr plain_partial(const Expr& e, const std::string& var);

/// Whole partial derivative with respect to an independent variable:
///   d^e/d^v = de/dv + sum_u (de/du) * rep(u, v)
/// with the representation factor to the right of the plain factor.
Expr whole_partial(const Expr& e, const std::string& var, const DependencyContext& ctx);

/// Whole derivative with respect to a dependent variable. Independents do
/// not react to a dependent, so this is the plain partial.
Expr whole_partial_wrt_dependent(const Expr& e, const std::string& dependent, const DependencyContext& ctx);

/// W[outer] applied after W[inner]. In paper ordering mode the product of
/// the two chain-rule coefficients is symmetrized. No normal ordering.
Expr second_whole(const Expr& e, const std::string& outer, const std::string& inner,
                  const DependencyContext& ctx);

/// W[v1] W[v2] e - W[v2] W[v1] e, ordered per the context's ordering mode.
Expr mixed_difference(const Expr& e, const std::string& v1, const std::string& v2,
                      const DependencyContext& ctx);

/// Normal ordering according to the context: canonical sort in commuting
/// mode, first-order bracket expansion otherwise.
Expr order_for_context(const Expr& e, const DependencyContext& ctx);

/// Replaces the opaque function `fn` by a concrete body written over its
/// declared parameter names; partial atoms become partials of the body.
Expr instantiate_opaque(const Expr& e, const Symbol& fn, const Expr& body);

}  // namespace wpd
