#include <sstream>

#include "wpd/textio.hpp"

namespace wpd {

namespace {

bool is_central(const Expr& e) {
  switch (e.kind()) {
    case ExprKind::symbol:
      return e.symbol().central();
    case ExprKind::power:
      return is_central(e.base());
    case ExprKind::product:
    case ExprKind::sum:
      for (const auto& x : e.items())
        if (!is_central(x)) return false;
      return true;
    default:
      return true;
  }
}

bool bare_args(const Expr& e) {
  const auto& params = e.symbol().params;
  if (params.size() != e.args().size()) return false;
  for (size_t i = 0; i < params.size(); ++i)
    if (params[i] != e.args()[i].name) return false;
  return true;
}

std::string args_list(const Expr& e) {
  std::string s = "(";
  for (size_t i = 0; i < e.args().size(); ++i) s += (i ? "," : "") + e.args()[i].name;
  return s + ")";
}

bool opaque_atom(const Expr& e) { return e.kind() == ExprKind::apply || e.kind() == ExprKind::partial; }

std::vector<Expr> factors_of(const Expr& monomial) {
  if (monomial.is_one()) return {};
  if (monomial.kind() == ExprKind::product) return monomial.items();
  return {monomial};
}

bool simple_token(const std::string& s) {
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return !s.empty();
}

// ---------------------------------------------------------------- text

std::string text(const Expr& e);

std::string text_base(const Expr& b) {
  if (b.kind() == ExprKind::symbol || opaque_atom(b)) return text(b);
  if (b.is_constant() && b.constant_value().is_integer() && sgn(b.constant_value().re()) >= 0) return text(b);
  return "(" + text(b) + ")";
}

std::string text_power(const Expr& base, const Rational& k) {
  if (k == 1) return text_base(base);
  if (k == Rational(1, 2)) return "sqrt(" + text(base) + ")";
  if (k.get_den() == 1 && sgn(k) > 0) return text_base(base) + "^" + k.get_num().get_str();
  return text_base(base) + "^(" + rational_to_string(k) + ")";
}

std::string text_factor(const Expr& f) {
  switch (f.kind()) {
    case ExprKind::symbol:
      return f.symbol().name;
    case ExprKind::apply:
      return bare_args(f) ? f.symbol().name : f.symbol().name + args_list(f);
    case ExprKind::partial: {
      std::string s = "D[" + f.symbol().name + (bare_args(f) ? "" : args_list(f));
      for (const auto& [v, k] : f.index())
        for (int i = 0; i < k; ++i) s += "," + v;
      return s + "]";
    }
    case ExprKind::power:
      return text_power(f.base(), f.exponent());
    default:
      return "(" + text(f) + ")";
  }
}

// Magnitude of a term and whether it carries a leading minus.
std::pair<bool, std::string> text_term(const Expr& term) {
  auto [c, monomial] = split_term(term);
  bool negative = false;
  std::vector<std::string> num, den, atoms;

  if (c.is_real()) {
    negative = sgn(c.re()) < 0;
    Rational a = abs(c.re());
    if (a.get_num() != 1) num.push_back(a.get_num().get_str());
    if (a.get_den() != 1) den.push_back(a.get_den().get_str());
  } else if (sgn(c.re()) == 0) {
    negative = sgn(c.im()) < 0;
    Rational a = abs(c.im());
    if (a.get_num() != 1) num.push_back(a.get_num().get_str());
    num.push_back("i");
    if (a.get_den() != 1) den.push_back(a.get_den().get_str());
  } else {
    std::string im = rational_to_string(abs(c.im()));
    num.push_back("(" + rational_to_string(c.re()) + (sgn(c.im()) < 0 ? " - " : " + ") + im + "*i)");
  }

  std::vector<std::string> words;
  for (const auto& f : factors_of(monomial)) {
    if (opaque_atom(f)) {
      atoms.push_back(text_factor(f));
    } else if (f.kind() == ExprKind::power && sgn(f.exponent()) < 0 && is_central(f)) {
      den.push_back(text_power(f.base(), -f.exponent()));
    } else if (is_central(f)) {
      num.push_back(text_factor(f));
    } else {
      words.push_back(text_factor(f));
    }
  }
  num.insert(num.end(), words.begin(), words.end());

  auto join = [](const std::vector<std::string>& xs) {
    std::string s;
    for (size_t i = 0; i < xs.size(); ++i) s += (i ? "*" : "") + xs[i];
    return s;
  };
  std::string body = num.empty() ? "1" : join(num);
  if (!den.empty()) body += "/" + (den.size() == 1 ? den[0] : "(" + join(den) + ")");

  if (atoms.empty()) return {negative, body};
  if (body == "1") return {negative, join(atoms)};
  if (!simple_token(body)) body = "(" + body + ")";
  return {negative, body + "*" + join(atoms)};
}

std::string text(const Expr& e) {
  const auto terms = terms_of(e);
  if (terms.empty()) return "0";
  std::string s;
  for (size_t i = 0; i < terms.size(); ++i) {
    auto [neg, mag] = text_term(terms[i]);
    if (i == 0) s += (neg ? "-" : "") + mag;
    else s += (neg ? " - " : " + ") + mag;
  }
  return s;
}

// ---------------------------------------------------------------- latex

std::string latex(const Expr& e);

std::string latex_rational(const Rational& q) {
  if (q.get_den() == 1) return q.get_num().get_str();
  return "\\frac{" + q.get_num().get_str() + "}{" + q.get_den().get_str() + "}";
}

std::string latex_base(const Expr& b) {
  if (b.kind() == ExprKind::symbol || opaque_atom(b)) return latex(b);
  if (b.is_constant() && b.constant_value().is_integer() && sgn(b.constant_value().re()) >= 0) return latex(b);
  return "\\left(" + latex(b) + "\\right)";
}

std::string latex_power(const Expr& base, const Rational& k) {
  if (k == 1) return latex_base(base);
  if (k == Rational(1, 2)) return "\\sqrt{" + latex(base) + "}";
  return latex_base(base) + "^{" + rational_to_string(k) + "}";
}

std::string latex_factor(const Expr& f) {
  switch (f.kind()) {
    case ExprKind::symbol:
      return f.symbol().name;
    case ExprKind::apply:
      return bare_args(f) ? f.symbol().name : f.symbol().name + args_list(f);
    case ExprKind::partial: {
      int n = total_order(f.index());
      std::string fn = bare_args(f) ? f.symbol().name : f.symbol().name + args_list(f);
      std::string top = "\\partial" + (n > 1 ? "^{" + std::to_string(n) + "}" : std::string()) + " " + fn;
      std::string bottom;
      for (const auto& [v, k] : f.index()) {
        if (!bottom.empty()) bottom += " ";
        bottom += "\\partial " + v + (k > 1 ? "^{" + std::to_string(k) + "}" : "");
      }
      return "\\frac{" + top + "}{" + bottom + "}";
    }
    case ExprKind::power:
      return latex_power(f.base(), f.exponent());
    default:
      return "\\left(" + latex(f) + "\\right)";
  }
}

std::pair<bool, std::string> latex_term(const Expr& term) {
  auto [c, monomial] = split_term(term);
  bool negative = false;
  std::vector<std::string> num, den;
  Rational mag;
  bool imag = false;
  if (c.is_real()) {
    negative = sgn(c.re()) < 0;
    mag = abs(c.re());
  } else if (sgn(c.re()) == 0) {
    negative = sgn(c.im()) < 0;
    mag = abs(c.im());
    imag = true;
  } else {
    mag = 1;
    num.push_back("\\left(" + latex_rational(c.re()) + (sgn(c.im()) < 0 ? " - " : " + ") +
                  latex_rational(abs(c.im())) + " i\\right)");
  }
  if (mag.get_num() != 1) num.push_back(mag.get_num().get_str());
  if (imag) num.push_back("i");
  if (mag.get_den() != 1) den.push_back(mag.get_den().get_str());
  for (const auto& f : factors_of(monomial)) {
    if (f.kind() == ExprKind::power && sgn(f.exponent()) < 0 && is_central(f))
      den.push_back(latex_power(f.base(), -f.exponent()));
    else
      num.push_back(latex_factor(f));
  }
  auto join = [](const std::vector<std::string>& xs) {
    std::string s;
    for (size_t i = 0; i < xs.size(); ++i) s += (i ? " " : "") + xs[i];
    return s;
  };
  std::string top = num.empty() ? "1" : join(num);
  if (den.empty()) return {negative, top};
  return {negative, "\\frac{" + top + "}{" + join(den) + "}"};
}

std::string latex(const Expr& e) {
  const auto terms = terms_of(e);
  if (terms.empty()) return "0";
  std::string s;
  for (size_t i = 0; i < terms.size(); ++i) {
    auto [neg, mag] = latex_term(terms[i]);
    if (i == 0) s += (neg ? "-" : "") + mag;
    else s += (neg ? " - " : " + ") + mag;
  }
  return s;
}

nlohmann::json gauss_json(const GaussRational& c) {
  return {{"re", rational_to_string(c.re())}, {"im", rational_to_string(c.im())}};
}

std::string generator_text(const DerivativeGenerator& g) {
  return std::string(g.mode == DerivativeGenerator::Mode::whole ? "W[" : "D[") + g.variable.name + "]";
}

std::string generator_latex(const DerivativeGenerator& g) {
  return std::string(g.mode == DerivativeGenerator::Mode::whole ? "\\hat{\\partial}_{" : "\\partial_{") +
         g.variable.name + "}";
}

}  // namespace

Format format_from_string(const std::string& s) {
  if (s == "text") return Format::text;
  if (s == "json") return Format::json;
  if (s == "latex") return Format::latex;
  throw std::invalid_argument("unknown format: " + s);
}

nlohmann::json expr_json(const Expr& e) {
  using nlohmann::json;
  switch (e.kind()) {
    case ExprKind::constant:
      return {{"const", gauss_json(e.constant_value())}};
    case ExprKind::symbol:
      return {{"sym", e.symbol().name}};
    case ExprKind::apply: {
      json args = json::array();
      for (const auto& a : e.args()) args.push_back(a.name);
      return {{"apply", {{"fn", e.symbol().name}, {"args", args}}}};
    }
    case ExprKind::partial: {
      json args = json::array();
      for (const auto& a : e.args()) args.push_back(a.name);
      json index = json::array();
      for (const auto& [v, k] : e.index()) index.push_back(json::array({v, k}));
      return {{"partial", {{"fn", e.symbol().name}, {"args", args}, {"index", index}}}};
    }
    case ExprKind::power:
      return {{"pow", {{"base", expr_json(e.base())}, {"exp", rational_to_string(e.exponent())}}}};
    case ExprKind::product: {
      json factors = json::array();
      for (const auto& f : e.items()) factors.push_back(expr_json(f));
      return {{"prod", {{"coef", gauss_json(e.coefficient())}, {"factors", factors}}}};
    }
    case ExprKind::sum: {
      json terms = json::array();
      for (const auto& t : e.items()) terms.push_back(expr_json(t));
      return {{"sum", terms}};
    }
  }
  return nullptr;
}

std::string print_expr(const Expr& e, Format format) {
  switch (format) {
    case Format::text:
      return text(e);
    case Format::latex:
      return latex(e);
    case Format::json:
      return expr_json(e).dump();
  }
  return text(e);
}

nlohmann::json operator_json(const DifferentialOperator& op) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : op.terms()) {
    nlohmann::json gens = nlohmann::json::array();
    for (const auto& g : t.generators)
      gens.push_back({{"mode", g.mode == DerivativeGenerator::Mode::whole ? "whole" : "plain"},
                      {"var", g.variable.name}});
    terms.push_back({{"coef", expr_json(t.coefficient)}, {"generators", gens}});
  }
  return {{"terms", terms}};
}

std::string print_operator(const DifferentialOperator& op, Format format) {
  if (format == Format::json) return operator_json(op).dump();
  if (op.terms().empty()) return "0";
  const bool tex = format == Format::latex;
  std::string s;
  bool first = true;
  for (const auto& t : op.terms()) {
    std::string gens;
    for (const auto& g : t.generators) gens += (gens.empty() ? "" : " ") + (tex ? generator_latex(g) : generator_text(g));
    bool negative = false;
    std::string coef;
    const auto cterms = terms_of(t.coefficient);
    if (cterms.size() == 1) {
      auto [neg, mag] = tex ? latex_term(cterms[0]) : text_term(cterms[0]);
      negative = neg;
      coef = mag;
    } else {
      coef = tex ? latex(t.coefficient) : text(t.coefficient);
    }
    std::string piece;
    const bool digits = coef.find_first_not_of("0123456789") == std::string::npos;
    if (gens.empty()) piece = digits || tex ? coef : "(" + coef + ")";
    else if (coef == "1") piece = gens;
    else if (tex) piece = "\\left(" + coef + "\\right) " + gens;
    else piece = "(" + coef + ")*" + gens;
    if (first) s += (negative ? "-" : "") + piece;
    else s += (negative ? " - " : " + ") + piece;
    first = false;
  }
  return s;
}

std::string print_context(const DependencyContext& ctx) {
  std::ostringstream out;
  auto names = [](const std::vector<Symbol>& xs) {
    std::string s;
    for (const auto& x : xs) s += " " + x.name;
    return s;
  };
  if (!ctx.independents().empty()) out << "independent" << names(ctx.independents()) << "\n";
  if (!ctx.parameters().empty()) out << "param" << names(ctx.parameters()) << "\n";
  for (const auto& d : ctx.dependents()) out << "dependent " << d.name << "\n";
  if (ctx.ordering() != OrderingMode::commuting) out << "ordering " << to_string(ctx.ordering()) << "\n";
  for (const auto& [pair, value] : ctx.commutators().entries())
    out << "commutator [" << pair.first << "," << pair.second << "] = " << print_expr(value) << "\n";
  for (const auto& [pair, e] : ctx.declared_representations())
    out << "representation d" << pair.first << "/d" << pair.second << " = " << print_expr(e) << "\n";
  for (const auto& c : ctx.constraints()) out << "constraint " << print_expr(c.g) << " = 0 solves " << c.solves << "\n";
  for (const auto& [dep, b] : ctx.bounds()) {
    std::ostringstream lo, hi;
    lo.precision(17);
    hi.precision(17);
    lo << b.first;
    hi << b.second;
    out << "bounds " << dep << " " << lo.str() << " " << hi.str() << "\n";
  }
  for (const auto& f : ctx.opaques()) {
    out << "opaque " << f.name << "(";
    for (size_t i = 0; i < f.params.size(); ++i) out << (i ? "," : "") << f.params[i];
    out << ")\n";
  }
  return out.str();
}

}  // namespace wpd
