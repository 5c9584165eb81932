#pragma once

#include <memory>
#include <string>
#include <vector>

#include "wpd/context.hpp"
#include "wpd/diffop.hpp"

namespace wpd {

/// Energy-momentum shell E^2 = p^2 + m^2 with c = hbar = 1.
struct MassShellScenario {
  int dimension = 3;
  int sign = +1;
  OrderingMode ordering = OrderingMode::commuting;
  bool feynman = false;
};

struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Independents p1..pd, parameter m, dependent E with constraint
/// E^2 - sum p_i^2 - m^2 = 0, representations dE/dp_i = p_i/E and opaque
/// f(p1..pd, E). Noncommutative orderings install central brackets
/// [p_i,p_j] = kappa_ij; with `feynman` (d = 3 only) [p_i,p_j] = i eps_ijk B_k.
std::shared_ptr<DependencyContext> build_mass_shell(const MassShellScenario& s);

/// Declares B1..B3 and [p_i,p_j] = i eps_ijk B_k on a context with p1..p3.
void install_feynman(DependencyContext& ctx);
/// Declares kappa_ij for every pair of independents without a bracket.
void install_kappa(DependencyContext& ctx);

std::string momentum_name(int i);

/// [W[p_i], D[E]] applied to the context's opaque f.
Expr momentum_energy_commutator(const ContextPtr& ctx, int i);
/// [W[p_i], W[p_j]] applied to f, under the context's ordering mode.
Expr momentum_momentum_commutator(const ContextPtr& ctx, int i, int j);

/// [x^mu, x^nu] for x^0 = i D[E] and x^k = -i W[p_k], each entry reduced to
/// plain generators. Index 0 is time-like.
struct PositionCommutatorTable {
  int dimension = 0;
  std::vector<std::vector<DifferentialOperator>> entries;
};

DifferentialOperator position_operator(const ContextPtr& ctx, int mu);
PositionCommutatorTable position_commutator_table(const ContextPtr& ctx);

/// Source on a straight 1-D line observed at (x, t): t' + (x - x0(t')) - t = 0
/// with c = 1 and x > x0 assumed. The trajectory is written over `tp` and
/// parameters.
struct RetardedScenario {
  Expr trajectory;
};

Symbol retarded_time_symbol();
/// Independents x, t; dependent tp; representations derived from the
/// constraint; opaque g(x, tp). Throws ScenarioError for a superluminal
/// (|x0'| >= 1) constant-velocity trajectory or a malformed trajectory.
std::shared_ptr<DependencyContext> build_retarded(const RetardedScenario& s);

}  // namespace wpd
