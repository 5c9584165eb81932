#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wpd/expr.hpp"

namespace wpd {

/// Convention for products of chain-rule coefficients in second whole
/// derivatives (see wholederiv).
enum class OrderingMode { commuting, paper, operator_order };

const char* to_string(OrderingMode mode);
OrderingMode ordering_from_string(const std::string& s);

struct Representation {
  enum class Origin { declared, derived };
  Symbol dependent;
  Symbol independent;
  Expr expr;
  Origin origin = Origin::declared;
};

struct Constraint {
  Expr g;  // g == 0 on the constraint surface
  std::string solves;
};

struct Diagnostic {
  enum class Severity { error, warning };
  Severity severity = Severity::error;
  std::string message;

  bool is_error() const { return severity == Severity::error; }
};

struct MissingRepresentation : std::runtime_error {
  MissingRepresentation(const std::string& dep, const std::string& indep)
      : std::runtime_error("missing representation (" + dep + "," + indep + ")"),
        dependent(dep),
        independent(indep) {}
  std::string dependent, independent;
};

struct ConstraintError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Lookup table from names to symbols used by the expression parser.
class SymbolTable {
public:
  void declare(const Symbol& s) { symbols_[s.name] = s; }
  const Symbol* find(const std::string& name) const {
    auto it = symbols_.find(name);
    return it == symbols_.end() ? nullptr : &it->second;
  }
  const std::map<std::string, Symbol>& all() const { return symbols_; }

private:
  std::map<std::string, Symbol> symbols_;
};

/// Declares which symbols are independent, which are dependent, and how the
/// partials of dependents are represented. Representations are expressions
/// and are differentiated exactly as written.
class DependencyContext {
public:
  void add_independent(const std::string& name);
  void add_parameter(const std::string& name);
  void add_dependent(const std::string& name);
  void add_opaque(const std::string& name, std::vector<std::string> params);
  /// Declares [a,b] = value; marks a and b noncommuting.
  void declare_commutator(const std::string& a, const std::string& b, const Expr& value);
  /// Registers a central commutator symbol (kappa_ij).
  void add_commutator_symbol(const std::string& name);
  void set_representation(const std::string& dependent, const std::string& independent, const Expr& expr);
  void add_constraint(const Expr& g, const std::string& solves);
  void set_ordering(OrderingMode mode) { ordering_ = mode; }
  void set_bounds(const std::string& dependent, double lo, double hi) { bounds_[dependent] = {lo, hi}; }
  /// Records a semantic problem found while building; reported by validate().
  void add_issue(const std::string& message) { issues_.push_back(message); }

  const std::vector<Symbol>& independents() const { return independents_; }
  const std::vector<Symbol>& parameters() const { return parameters_; }
  const std::vector<Symbol>& dependents() const { return dependents_; }
  const std::vector<Symbol>& opaques() const { return opaques_; }
  const std::vector<Symbol>& commutator_symbols() const { return commutator_symbols_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const std::map<std::pair<std::string, std::string>, Expr>& declared_representations() const {
    return declared_;
  }
  const CommutatorTable& commutators() const { return commutators_; }
  OrderingMode ordering() const { return ordering_; }
  const std::map<std::string, std::pair<double, double>>& bounds() const { return bounds_; }
  const std::vector<std::string>& issues() const { return issues_; }

  bool is_independent(const std::string& name) const;
  bool is_dependent(const std::string& name) const;
  bool is_parameter(const std::string& name) const;
  bool has_noncommuting() const;
  std::optional<Symbol> find(const std::string& name) const;
  Symbol symbol(const std::string& name) const;  // throws std::out_of_range
  Expr var(const std::string& name) const { return Expr::symbol(symbol(name)); }
  /// Application of a declared opaque function to its declared arguments.
  Expr opaque(const std::string& name) const;
  SymbolTable symbols() const;

  const Constraint* constraint_for(const std::string& dependent) const;
  /// Declared representation if present, otherwise derived from a
  /// constraint through implicit_partial. Throws MissingRepresentation.
  Representation representation(const std::string& dependent, const std::string& independent) const;
  bool has_representation(const std::string& dependent, const std::string& independent) const;

private:
  bool declare_symbol(const Symbol& s, std::vector<Symbol>& into);
  Symbol* find_mutable(const std::string& name);

  std::vector<Symbol> independents_, parameters_, dependents_, opaques_, commutator_symbols_;
  std::map<std::pair<std::string, std::string>, Expr> declared_;
  std::vector<Constraint> constraints_;
  CommutatorTable commutators_;
  OrderingMode ordering_ = OrderingMode::commuting;
  std::map<std::string, std::pair<double, double>> bounds_;
  std::vector<std::string> issues_;
};

/// -plain_partial(g, v) / plain_partial(g, u). Throws ConstraintError when
/// g does not determine u.
Expr implicit_partial(const Expr& g, const std::string& u, const std::string& v);

/// Empty iff the context is complete and consistent. Declared
/// representations that coexist with a constraint are checked numerically
/// on the positive sheet; mismatches are warnings.
std::vector<Diagnostic> validate(const DependencyContext& ctx);

bool has_errors(const std::vector<Diagnostic>& diags);

}  // namespace wpd
