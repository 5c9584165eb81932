#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wpd/scalar.hpp"
#include "wpd/symbol.hpp"

namespace wpd {

enum class ExprKind { constant, symbol, apply, partial, power, product, sum };

struct Node;

/// Immutable expression in canonical expanded form.
///
/// Every value produced by the constructors and arithmetic below is already
/// canonical: sums are flat with like terms merged and sorted, products are
/// flat with central factors sorted and noncommuting factors kept in written
/// order per commutativity class, products of sums are expanded, and
/// positive integer powers of sums are expanded. Exponents are exact
/// rationals; a square root is the power 1/2. `(x^2)^(1/2)` is never folded.
class Expr {
public:
  Expr();  // zero
  Expr(long v);  // NOLINT(implicit)
  Expr(GaussRational c);  // NOLINT(implicit)

  static Expr constant(GaussRational c);
  static Expr imaginary_unit();
  static Expr symbol(const Symbol& s);
  /// Opaque function applied to argument symbols.
  static Expr apply(const Symbol& fn, std::vector<Symbol> args);
  /// Plain partial derivative atom of an opaque function application.
  static Expr partial(const Symbol& fn, std::vector<Symbol> args, MultiIndex index);

  ExprKind kind() const;
  const std::string& key() const;

  bool is_zero() const;
  bool is_one() const;
  bool is_constant() const { return kind() == ExprKind::constant; }
  const GaussRational& constant_value() const;  // constant only

  const Symbol& symbol() const;            // symbol, apply, partial (function)
  const std::vector<Symbol>& args() const; // apply, partial
  const MultiIndex& index() const;         // partial
  const Expr& base() const;                // power
  const Rational& exponent() const;        // power
  const GaussRational& coefficient() const;// product
  const std::vector<Expr>& items() const;  // product factors, sum terms

  const Node& node() const { return *node_; }

  friend bool operator==(const Expr& a, const Expr& b) { return a.key() == b.key(); }
  friend bool operator<(const Expr& a, const Expr& b) { return a.key() < b.key(); }

private:
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;

  friend struct ExprFactory;
};

struct Node {
  ExprKind kind = ExprKind::constant;
  GaussRational value;  // constant value, or product coefficient
  Symbol symbol;
  std::vector<Symbol> args;
  MultiIndex index;
  std::vector<Expr> items;  // power: {base}; product: factors; sum: terms
  Rational exponent;
  std::string key;
  std::string monomial_key;  // key of the term without its coefficient
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr pow(const Expr& base, const Rational& exponent);
Expr sqrt(const Expr& e);
Expr sum_of(const std::vector<Expr>& terms);
Expr product_of(const std::vector<Expr>& factors);

/// Terms of a sum, or the expression itself as a single term (empty for 0).
std::vector<Expr> terms_of(const Expr& e);
/// Splits a term into (coefficient, monomial with unit coefficient).
std::pair<GaussRational, Expr> split_term(const Expr& term);

/// Rebuilds `e` through the canonical constructors.
Expr normalize(const Expr& e);

struct SubstitutionCycle : std::runtime_error {
  explicit SubstitutionCycle(const std::string& cycle)
      : std::runtime_error("cyclic substitution: " + cycle) {}
};

/// Simultaneous substitution of symbols by expressions. Opaque applications
/// and their partial atoms are left untouched.
Expr substitute(const Expr& e, const std::map<std::string, Expr>& bindings);

/// True iff a - b reduces to zero after clearing sum denominators.
bool equals_canonical(const Expr& a, const Expr& b);

/// Names of symbols occurring outside opaque atoms.
std::set<std::string> free_symbols(const Expr& e);
/// Names of opaque functions occurring in e.
std::set<std::string> opaque_functions(const Expr& e);
bool mentions(const Expr& e, const std::string& name);
/// Like mentions, but also looks through opaque-function arguments.
bool depends_on(const Expr& e, const std::string& name);
bool contains_opaque(const Expr& e);

/// Declared commutators between noncommuting symbols; antisymmetric.
class CommutatorTable {
public:
  void declare(const std::string& a, const std::string& b, const Expr& value);
  /// [a,b], or nullopt when undeclared.
  std::optional<Expr> lookup(const std::string& a, const std::string& b) const;
  bool empty() const { return entries_.empty(); }
  const std::map<std::pair<std::string, std::string>, Expr>& entries() const { return entries_; }

private:
  std::map<std::pair<std::string, std::string>, Expr> entries_;  // first < second
};

struct UndeclaredCommutator : std::runtime_error {
  UndeclaredCommutator(const std::string& a, const std::string& b)
      : std::runtime_error("no commutator declared for [" + a + "," + b + "]"), first(a), second(b) {}
  std::string first, second;
};

/// Reorders noncommuting symbols into canonical (name) order, emitting
/// commutator terms, to first order in commutators: monomials carrying two
/// or more commutator symbols or two or more emitted brackets are dropped.
/// With `commuting` set, every bracket is taken as zero.
Expr normal_order(const Expr& e, const CommutatorTable& table, bool commuting = false);

}  // namespace wpd
