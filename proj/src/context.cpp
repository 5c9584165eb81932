#include "wpd/context.hpp"

#include <algorithm>
#include <cmath>

#include "wpd/deriv.hpp"
#include "wpd/numeric.hpp"

namespace wpd {

const char* to_string(OrderingMode mode) {
  switch (mode) {
    case OrderingMode::commuting: return "commuting";
    case OrderingMode::paper: return "paper";
    case OrderingMode::operator_order: return "operator";
  }
  return "?";
}

OrderingMode ordering_from_string(const std::string& s) {
  if (s == "commuting") return OrderingMode::commuting;
  if (s == "paper") return OrderingMode::paper;
  if (s == "operator") return OrderingMode::operator_order;
  throw std::invalid_argument("unknown ordering mode '" + s + "' (expected commuting, paper or operator)");
}

bool DependencyContext::declare_symbol(const Symbol& s, std::vector<Symbol>& into) {
  if (find(s.name)) {
    add_issue("duplicate symbol " + s.name);
    return false;
  }
  into.push_back(s);
  return true;
}

void DependencyContext::add_independent(const std::string& name) {
  declare_symbol(Symbol(name, SymbolKind::independent), independents_);
}

void DependencyContext::add_parameter(const std::string& name) {
  declare_symbol(Symbol(name, SymbolKind::parameter), parameters_);
}

void DependencyContext::add_dependent(const std::string& name) {
  declare_symbol(Symbol(name, SymbolKind::dependent), dependents_);
}

void DependencyContext::add_opaque(const std::string& name, std::vector<std::string> params) {
  declare_symbol(Symbol(name, SymbolKind::opaque_function, 0, std::move(params)), opaques_);
}

void DependencyContext::add_commutator_symbol(const std::string& name) {
  declare_symbol(Symbol(name, SymbolKind::commutator), commutator_symbols_);
}

Symbol* DependencyContext::find_mutable(const std::string& name) {
  for (auto* list : {&independents_, &parameters_, &dependents_, &opaques_, &commutator_symbols_})
    for (auto& s : *list)
      if (s.name == name) return &s;
  return nullptr;
}

void DependencyContext::declare_commutator(const std::string& a, const std::string& b, const Expr& value) {
  for (const auto& n : {a, b}) {
    Symbol* s = find_mutable(n);
    if (!s) {
      add_issue("commutator refers to undeclared symbol " + n);
      return;
    }
    if (s->kind == SymbolKind::opaque_function || s->kind == SymbolKind::commutator) {
      add_issue("commutator bracket entry " + n + " must be a variable or parameter");
      return;
    }
    s->commutativity_class = 1;
  }
  if (a == b) {
    add_issue("commutator [" + a + "," + b + "] of a symbol with itself");
    return;
  }
  commutators_.declare(a, b, value);
}

void DependencyContext::set_representation(const std::string& dependent, const std::string& independent,
                                           const Expr& expr) {
  auto key = std::make_pair(dependent, independent);
  if (declared_.count(key)) {
    add_issue("duplicate representation d" + dependent + "/d" + independent);
    return;
  }
  declared_[key] = expr;
}

void DependencyContext::add_constraint(const Expr& g, const std::string& solves) {
  if (constraint_for(solves)) {
    add_issue("more than one constraint solves " + solves);
    return;
  }
  constraints_.push_back({g, solves});
}

bool DependencyContext::is_independent(const std::string& name) const {
  return std::any_of(independents_.begin(), independents_.end(), [&](const Symbol& s) { return s.name == name; });
}

bool DependencyContext::is_dependent(const std::string& name) const {
  return std::any_of(dependents_.begin(), dependents_.end(), [&](const Symbol& s) { return s.name == name; });
}

bool DependencyContext::is_parameter(const std::string& name) const {
  return std::any_of(parameters_.begin(), parameters_.end(), [&](const Symbol& s) { return s.name == name; });
}

bool DependencyContext::has_noncommuting() const { return !commutators_.empty(); }

std::optional<Symbol> DependencyContext::find(const std::string& name) const {
  for (const auto* list : {&independents_, &parameters_, &dependents_, &opaques_, &commutator_symbols_})
    for (const auto& s : *list)
      if (s.name == name) return s;
  return std::nullopt;
}

Symbol DependencyContext::symbol(const std::string& name) const {
  auto s = find(name);
  if (!s) throw std::out_of_range("unknown symbol " + name);
  return *s;
}

Expr DependencyContext::opaque(const std::string& name) const {
  Symbol fn = symbol(name);
  if (fn.kind != SymbolKind::opaque_function) throw std::invalid_argument(name + " is not an opaque function");
  std::vector<Symbol> args;
  for (const auto& p : fn.params) args.push_back(symbol(p));
  return Expr::apply(fn, std::move(args));
}

SymbolTable DependencyContext::symbols() const {
  SymbolTable t;
  for (const auto* list : {&independents_, &parameters_, &dependents_, &opaques_, &commutator_symbols_})
    for (const auto& s : *list) t.declare(s);
  return t;
}

const Constraint* DependencyContext::constraint_for(const std::string& dependent) const {
  for (const auto& c : constraints_)
    if (c.solves == dependent) return &c;
  return nullptr;
}

Representation DependencyContext::representation(const std::string& dependent,
                                                 const std::string& independent) const {
  auto it = declared_.find({dependent, independent});
  if (it != declared_.end())
    return {symbol(dependent), symbol(independent), it->second, Representation::Origin::declared};
  if (const Constraint* c = constraint_for(dependent)) {
    return {symbol(dependent), symbol(independent), implicit_partial(c->g, dependent, independent),
            Representation::Origin::derived};
  }
  throw MissingRepresentation(dependent, independent);
}

bool DependencyContext::has_representation(const std::string& dependent, const std::string& independent) const {
  return declared_.count({dependent, independent}) || constraint_for(dependent);
}

Expr implicit_partial(const Expr& g, const std::string& u, const std::string& v) {
  Expr gu = plain_partial(g, u);
  if (gu.is_zero()) throw ConstraintError("constraint does not determine " + u);
  return -plain_partial(g, v) / gu;
}

bool has_errors(const std::vector<Diagnostic>& diags) {
  return std::any_of(diags.begin(), diags.end(), [](const Diagnostic& d) { return d.is_error(); });
}

std::vector<Diagnostic> validate(const DependencyContext& ctx) {
  std::vector<Diagnostic> out;
  auto error = [&](const std::string& m) { out.push_back({Diagnostic::Severity::error, m}); };
  auto warning = [&](const std::string& m) { out.push_back({Diagnostic::Severity::warning, m}); };

  for (const auto& issue : ctx.issues()) error(issue);

  for (const auto& fn : ctx.opaques()) {
    std::vector<std::string> seen;
    for (const auto& p : fn.params) {
      auto s = ctx.find(p);
      if (!s || s->kind == SymbolKind::opaque_function || s->kind == SymbolKind::commutator)
        error("opaque " + fn.name + " argument " + p + " is not a declared variable or parameter");
      if (std::find(seen.begin(), seen.end(), p) != seen.end())
        error("opaque " + fn.name + " repeats argument " + p);
      seen.push_back(p);
    }
  }

  for (const auto& [key, expr] : ctx.declared_representations()) {
    const auto& [dep, var] = key;
    if (!ctx.is_dependent(dep)) error("representation d" + dep + "/d" + var + ": " + dep + " is not dependent");
    if (ctx.is_dependent(var))
      error("representation d" + dep + "/d" + var + ": dependent-on-dependent chains are not supported");
    else if (!ctx.is_independent(var))
      error("representation d" + dep + "/d" + var + ": " + var + " is not independent");
    if (contains_opaque(expr)) error("representation d" + dep + "/d" + var + " mentions an opaque function");
    for (const auto& d : ctx.dependents())
      if (d.name != dep && mentions(expr, d.name))
        error("representation d" + dep + "/d" + var + " mentions dependent " + d.name +
              ": dependent-on-dependent chains are not supported");
  }

  for (const auto& c : ctx.constraints()) {
    if (!ctx.is_dependent(c.solves)) {
      error("constraint solves " + c.solves + ", which is not a dependent variable");
      continue;
    }
    if (contains_opaque(c.g)) error("constraint for " + c.solves + " mentions an opaque function");
    for (const auto& d : ctx.dependents())
      if (d.name != c.solves && mentions(c.g, d.name))
        error("constraint for " + c.solves + " mentions dependent " + d.name +
              ": dependent-on-dependent chains are not supported");
    if (plain_partial(c.g, c.solves).is_zero()) error("constraint does not determine " + c.solves);
  }

  for (const auto& d : ctx.dependents())
    for (const auto& v : ctx.independents())
      if (!ctx.has_representation(d.name, v.name)) error("missing representation (" + d.name + "," + v.name + ")");

  if (has_errors(out)) return out;

  // Declared representations next to a constraint must agree on shell.
  std::vector<std::pair<std::string, std::string>> checked;
  for (const auto& [key, expr] : ctx.declared_representations())
    if (ctx.constraint_for(key.first)) checked.push_back(key);
  if (checked.empty()) return out;

  std::vector<NumericBinding> samples;
  try {
    samples = sample_on_shell(ctx, SampleOptions{8, 0, +1, {}});
  } catch (const std::exception& ex) {
    warning(std::string("could not sample the constraint surface: ") + ex.what());
    return out;
  }
  for (const auto& [dep, var] : checked) {
    Expr declared = ctx.declared_representations().at({dep, var});
    Expr derived = implicit_partial(ctx.constraint_for(dep)->g, dep, var);
    for (const auto& b : samples) {
      try {
        Complex x = evaluate(declared, b);
        Complex y = evaluate(derived, b);
        double scale = std::max({std::abs(x), std::abs(y), 1e-300});
        if (std::abs(x - y) / scale > 1e-9) {
          warning("declared representation d" + dep + "/d" + var +
                  " disagrees with the constraint-derived one on shell");
          break;
        }
      } catch (const std::exception& ex) {
        warning("representation d" + dep + "/d" + var + " could not be evaluated on shell: " + ex.what());
        break;
      }
    }
  }
  return out;
}

}  // namespace wpd
