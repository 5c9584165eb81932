#include <algorithm>
#include <cctype>

#include "wpd/textio.hpp"

namespace wpd {

namespace {

struct Token {
  enum class Kind { end, number, ident, punct };
  Kind kind = Kind::end;
  std::string text;
  Rational value;
  SourceSpan span;

  bool is(char c) const { return kind == Kind::punct && text.size() == 1 && text[0] == c; }
  bool is_ident(const char* name) const { return kind == Kind::ident && text == name; }
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

Rational pow10(long k) {
  mpz_class p;
  mpz_ui_pow_ui(p.get_mpz_t(), 10, static_cast<unsigned long>(k < 0 ? -k : k));
  return k < 0 ? Rational(mpz_class(1), p) : Rational(p);
}

std::vector<Token> lex(std::string_view text, std::size_t begin, std::size_t end) {
  std::vector<Token> out;
  std::size_t i = begin;
  while (i < end) {
    char c = text[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++i;
      continue;
    }
    Token t;
    t.span.start = i;
    if (digit(c) || (c == '.' && i + 1 < end && digit(text[i + 1]))) {
      std::string digits;
      long frac = 0;
      while (i < end && digit(text[i])) digits += text[i++];
      if (i < end && text[i] == '.') {
        ++i;
        while (i < end && digit(text[i])) {
          digits += text[i++];
          ++frac;
        }
      }
      long exp10 = 0;
      if (i < end && (text[i] == 'e' || text[i] == 'E')) {
        std::size_t j = i + 1;
        bool neg = false;
        if (j < end && (text[j] == '+' || text[j] == '-')) neg = text[j++] == '-';
        if (j < end && digit(text[j])) {
          std::string ed;
          while (j < end && digit(text[j])) ed += text[j++];
          exp10 = std::stol(ed) * (neg ? -1 : 1);
          i = j;
        }
      }
      if (digits.empty()) digits = "0";
      t.kind = Token::Kind::number;
      t.value = Rational(mpz_class(digits)) * pow10(exp10 - frac);
      t.value.canonicalize();
    } else if (ident_start(c)) {
      while (i < end && ident_char(text[i])) ++i;
      t.kind = Token::Kind::ident;
    } else if (std::string_view("+-*/^()[],=").find(c) != std::string_view::npos) {
      ++i;
      t.kind = Token::Kind::punct;
    } else {
      throw ParseError(std::string("unexpected character '") + c + "'", {i, i + 1});
    }
    t.span.end = i;
    t.text = std::string(text.substr(t.span.start, i - t.span.start));
    out.push_back(std::move(t));
  }
  Token eof;
  eof.span = {end, end};
  out.push_back(eof);
  return out;
}

class Parser {
public:
  Parser(std::string_view text, std::size_t begin, std::size_t end, const SymbolTable& symbols, ParseOptions opts)
      : tokens_(lex(text, begin, end)), symbols_(symbols), opts_(opts) {}

  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  const Token& next() { return tokens_[std::min(pos_++, tokens_.size() - 1)]; }
  bool at_end() const { return peek().kind == Token::Kind::end; }

  [[noreturn]] void fail(const std::string& msg, const Token& t) const {
    if (t.kind == Token::Kind::end) throw ParseError(msg + " at end of input", t.span);
    throw ParseError(msg + " at '" + t.text + "'", t.span);
  }

  void expect(char c) {
    if (!peek().is(c)) fail(std::string("expected '") + c + "'", peek());
    next();
  }

  std::string expect_ident() {
    if (peek().kind != Token::Kind::ident) fail("expected identifier", peek());
    return next().text;
  }

  void expect_end() {
    if (!at_end()) fail("unexpected token", peek());
  }

  Expr sum() {
    Expr r = product();
    while (peek().is('+') || peek().is('-')) {
      bool minus = next().is('-');
      Expr rhs = product();
      r = minus ? r - rhs : r + rhs;
    }
    return r;
  }

  Expr product() {
    Expr r = unary();
    while (peek().is('*') || peek().is('/')) {
      bool divide = next().is('/');
      const Token& at = peek();
      Expr rhs = unary();
      if (divide) {
        try {
          r = r / rhs;
        } catch (const std::domain_error&) {
          fail("division by zero", at);
        }
      } else {
        r = r * rhs;
      }
    }
    return r;
  }

  Expr unary() {
    if (peek().is('-')) {
      next();
      return -unary();
    }
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (!peek().is('^')) return base;
    next();
    Token start = peek();
    Expr exponent = unary();
    SourceSpan span{start.span.start, tokens_[pos_ - 1].span.end};
    if (!exponent.is_constant() || !exponent.constant_value().is_real())
      throw ParseError("exponent must be a rational constant", span);
    try {
      return pow(base, exponent.constant_value().re());
    } catch (const std::domain_error& ex) {
      throw ParseError(ex.what(), span);
    }
  }

  std::vector<Symbol> argument_list() {
    std::vector<Symbol> args;
    expect('(');
    if (!peek().is(')')) {
      for (;;) {
        const Token& t = peek();
        args.push_back(resolve_variable(expect_ident(), t));
        if (peek().is(',')) {
          next();
          continue;
        }
        break;
      }
    }
    expect(')');
    return args;
  }

  Symbol resolve_variable(const std::string& name, const Token& t) const {
    const Symbol* s = symbols_.find(name);
    if (!s) {
      if (opts_.lenient) return Symbol(name, opts_.lenient_kind);
      throw ParseError("unknown identifier '" + name + "'", t.span);
    }
    if (s->kind == SymbolKind::opaque_function) throw ParseError("'" + name + "' is a function, not a variable", t.span);
    return *s;
  }

  Expr application(const Symbol& fn, const Token& at) {
    std::vector<Symbol> args;
    if (peek().is('(')) {
      std::size_t open = peek().span.start;
      args = argument_list();
      if (args.size() != fn.params.size()) {
        throw ParseError("arity mismatch: " + fn.name + " takes " + std::to_string(fn.params.size()) +
                             " arguments, got " + std::to_string(args.size()),
                         {at.span.start, tokens_[pos_ - 1].span.end > open ? tokens_[pos_ - 1].span.end : open});
      }
      for (size_t i = 0; i < args.size(); ++i)
        for (size_t j = i + 1; j < args.size(); ++j)
          if (args[i] == args[j]) throw ParseError("repeated argument " + args[i].name, at.span);
    } else {
      for (const auto& p : fn.params) {
        const Symbol* s = symbols_.find(p);
        args.push_back(s ? *s : Symbol(p, SymbolKind::parameter));
      }
    }
    return Expr::apply(fn, args);
  }

  Expr partial_atom(const Token& at) {
    expect('[');
    const Token& ft = peek();
    std::string fname = expect_ident();
    const Symbol* fn = symbols_.find(fname);
    if (!fn || fn->kind != SymbolKind::opaque_function)
      throw ParseError("'" + fname + "' is not an opaque function", ft.span);
    Expr app = application(*fn, ft);
    MultiIndex index;
    if (!peek().is(',')) fail("expected ',' and a derivative variable", peek());
    while (peek().is(',')) {
      next();
      const Token& vt = peek();
      std::string v = expect_ident();
      resolve_variable(v, vt);
      index = add_to_index(index, v);
    }
    expect(']');
    for (const auto& [v, k] : index) {
      bool found = std::any_of(app.args().begin(), app.args().end(), [&](const Symbol& s) { return s.name == v; });
      if (!found) return Expr(0);
    }
    (void)at;
    return Expr::partial(app.symbol(), app.args(), index);
  }

  Expr primary() {
    const Token t = peek();
    switch (t.kind) {
      case Token::Kind::number:
        next();
        return Expr::constant(GaussRational(t.value));
      case Token::Kind::ident: {
        next();
        if (t.text == "i") return Expr::imaginary_unit();
        if (t.text == "sqrt" && peek().is('(') && !symbols_.find("sqrt")) {
          next();
          Expr inner = sum();
          expect(')');
          return wpd::sqrt(inner);
        }
        if (t.text == "D" && peek().is('[')) return partial_atom(t);
        const Symbol* s = symbols_.find(t.text);
        if (s && s->kind == SymbolKind::opaque_function) return application(*s, t);
        if (!s && opts_.lenient) return Expr::symbol(Symbol(t.text, opts_.lenient_kind));
        if (!s) throw ParseError("unknown identifier '" + t.text + "'", t.span);
        return Expr::symbol(*s);
      }
      case Token::Kind::punct:
        if (t.is('(')) {
          next();
          Expr inner = sum();
          expect(')');
          return inner;
        }
        fail("syntax error: unexpected", t);
      case Token::Kind::end:
        fail("syntax error: expected an expression", t);
    }
    fail("syntax error", t);
  }

  // Operator grammar.
  DifferentialOperator op_sum(const ContextPtr& ctx) {
    DifferentialOperator r = DifferentialOperator::zero(ctx);
    bool first = true;
    for (;;) {
      bool minus = false;
      if (peek().is('+') || peek().is('-')) {
        minus = next().is('-');
      } else if (!first) {
        break;
      }
      DifferentialOperator term = op_product(ctx);
      r = minus ? r - term : r + term;
      first = false;
      if (!(peek().is('+') || peek().is('-'))) break;
    }
    return r;
  }

  bool starts_op_factor() const {
    const Token& t = peek();
    if (t.is('(')) return true;
    if (t.kind == Token::Kind::number) return true;
    if (t.kind == Token::Kind::ident && (t.text == "W" || t.text == "D" || t.text == "i")) return true;
    return false;
  }

  DifferentialOperator op_product(const ContextPtr& ctx) {
    if (!starts_op_factor()) fail("syntax error: expected an operator factor", peek());
    DifferentialOperator r = op_factor(ctx);
    for (;;) {
      if (peek().is('*')) {
        next();
        r = compose(r, op_factor(ctx));
      } else if (starts_op_factor()) {
        r = compose(r, op_factor(ctx));
      } else {
        break;
      }
    }
    return r;
  }

  DifferentialOperator op_factor(const ContextPtr& ctx) {
    const Token t = peek();
    if (t.is('(')) {
      next();
      Expr c = sum();
      expect(')');
      return DifferentialOperator::multiplication(ctx, c);
    }
    if (t.kind == Token::Kind::number) {
      next();
      return DifferentialOperator::multiplication(ctx, Expr::constant(GaussRational(t.value)));
    }
    if (t.is_ident("i")) {
      next();
      return DifferentialOperator::multiplication(ctx, Expr::imaginary_unit());
    }
    if (t.is_ident("W") || t.is_ident("D")) {
      next();
      expect('[');
      const Token vt = peek();
      std::string var = expect_ident();
      expect(']');
      auto mode = t.text == "W" ? DerivativeGenerator::Mode::whole : DerivativeGenerator::Mode::plain;
      DifferentialOperator g = DifferentialOperator::identity(ctx);
      try {
        g = DifferentialOperator::generator(ctx, var, mode);
      } catch (const OperatorError& ex) {
        throw ParseError(ex.what(), vt.span);
      }
      if (peek().is('^')) {
        next();
        const Token nt = peek();
        if (nt.kind != Token::Kind::number || nt.value.get_den() != 1 || nt.value < 1 || nt.value > 64)
          fail("generator power must be a positive integer", nt);
        next();
        DifferentialOperator p = g;
        for (long k = 1; k < nt.value.get_num().get_si(); ++k) p = compose(p, g);
        return p;
      }
      return g;
    }
    fail("syntax error: expected an operator factor", t);
  }

private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  const SymbolTable& symbols_;
  ParseOptions opts_;
};

struct Line {
  std::size_t begin, end;  // content without comment or line break
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    std::size_t stop = nl == std::string_view::npos ? text.size() : nl;
    std::size_t content_end = stop;
    std::size_t hash = text.substr(start, stop - start).find('#');
    if (hash != std::string_view::npos) content_end = start + hash;
    while (content_end > start && (text[content_end - 1] == '\r' || text[content_end - 1] == ' ' ||
                                   text[content_end - 1] == '\t'))
      --content_end;
    lines.push_back({start, content_end});
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return lines;
}

// Position of the first top-level '=' token in [begin, end).
std::size_t find_equals(std::string_view text, std::size_t begin, std::size_t end) {
  for (std::size_t i = begin; i < end; ++i)
    if (text[i] == '=') return i;
  return std::string_view::npos;
}

}  // namespace

Expr parse_expr(std::string_view text, const SymbolTable& symbols, const ParseOptions& opts) {
  Parser p(text, 0, text.size(), symbols, opts);
  Expr e = p.sum();
  p.expect_end();
  return e;
}

Symbol parse_identifier(std::string_view text, const SymbolTable& symbols) {
  Parser p(text, 0, text.size(), symbols, {});
  const Token t = p.peek();
  std::string name = p.expect_ident();
  p.expect_end();
  const Symbol* s = symbols.find(name);
  if (!s) throw ParseError("unknown identifier '" + name + "'", t.span);
  return *s;
}

DifferentialOperator parse_operator(std::string_view text, const ContextPtr& ctx) {
  SymbolTable table = ctx->symbols();
  Parser p(text, 0, text.size(), table, {});
  DifferentialOperator op = p.op_sum(ctx);
  p.expect_end();
  return op;
}

DependencyContext parse_context(std::string_view text) {
  DependencyContext ctx;
  const auto lines = split_lines(text);
  SymbolTable empty;

  struct Deferred {
    enum class Kind { representation, constraint, commutator } kind;
    Line line;
    std::size_t expr_begin, expr_end;
    std::string a, b;
  };
  std::vector<Deferred> deferred;

  // Pass 1: declarations and statement shapes.
  for (const auto& line : lines) {
    if (line.begin >= line.end) continue;
    Parser p(text, line.begin, line.end, empty, {});
    const Token kw = p.peek();
    if (kw.kind != Token::Kind::ident) p.fail("expected a statement keyword", kw);
    p.next();
    const std::string& k = kw.text;
    if (k == "independent" || k == "param" || k == "dependent") {
      if (p.at_end()) p.fail("expected identifier", p.peek());
      while (!p.at_end()) {
        const Token t = p.peek();
        std::string name = p.expect_ident();
        if (name == "i") throw ParseError("'i' is reserved for the imaginary unit", t.span);
        if (k == "independent") ctx.add_independent(name);
        else if (k == "param") ctx.add_parameter(name);
        else ctx.add_dependent(name);
      }
    } else if (k == "opaque") {
      std::string name = p.expect_ident();
      std::vector<std::string> params;
      p.expect('(');
      if (!p.peek().is(')')) {
        for (;;) {
          params.push_back(p.expect_ident());
          if (!p.peek().is(',')) break;
          p.next();
        }
      }
      p.expect(')');
      p.expect_end();
      ctx.add_opaque(name, params);
    } else if (k == "representation") {
      const Token dt = p.peek();
      std::string dep = p.expect_ident();
      p.expect('/');
      const Token vt = p.peek();
      std::string var = p.expect_ident();
      if (dep.size() < 2 || dep[0] != 'd') throw ParseError("expected d<dependent>", dt.span);
      if (var.size() < 2 || var[0] != 'd') throw ParseError("expected d<independent>", vt.span);
      const Token eq = p.peek();
      p.expect('=');
      deferred.push_back({Deferred::Kind::representation, line, eq.span.end, line.end, dep.substr(1), var.substr(1)});
    } else if (k == "constraint") {
      std::size_t eq = find_equals(text, kw.span.end, line.end);
      if (eq == std::string_view::npos) throw ParseError("expected '= 0 solves <dependent>'", {line.end, line.end});
      Parser tail(text, eq + 1, line.end, empty, {});
      const Token zero = tail.peek();
      if (zero.kind != Token::Kind::number || zero.value != 0) tail.fail("expected 0", zero);
      tail.next();
      const Token sv = tail.peek();
      if (!sv.is_ident("solves")) tail.fail("expected 'solves'", sv);
      tail.next();
      std::string dep = tail.expect_ident();
      tail.expect_end();
      deferred.push_back({Deferred::Kind::constraint, line, kw.span.end, eq, dep, ""});
    } else if (k == "commutator") {
      p.expect('[');
      std::string a = p.expect_ident();
      p.expect(',');
      std::string b = p.expect_ident();
      p.expect(']');
      const Token eq = p.peek();
      p.expect('=');
      deferred.push_back({Deferred::Kind::commutator, line, eq.span.end, line.end, a, b});
    } else if (k == "ordering") {
      const Token mt = p.peek();
      std::string mode = p.expect_ident();
      p.expect_end();
      try {
        ctx.set_ordering(ordering_from_string(mode));
      } catch (const std::invalid_argument& ex) {
        throw ParseError(ex.what(), mt.span);
      }
    } else if (k == "bounds") {
      std::string dep = p.expect_ident();
      double vals[2];
      for (double& v : vals) {
        bool neg = false;
        if (p.peek().is('-')) {
          p.next();
          neg = true;
        }
        const Token nt = p.peek();
        if (nt.kind != Token::Kind::number) p.fail("expected a number", nt);
        p.next();
        v = (neg ? -1 : 1) * nt.value.get_d();
      }
      p.expect_end();
      ctx.set_bounds(dep, vals[0], vals[1]);
    } else {
      throw ParseError("unknown statement '" + k + "'", kw.span);
    }
  }

  // Brackets mark their symbols noncommuting before any expression is read.
  for (const auto& d : deferred) {
    if (d.kind != Deferred::Kind::commutator) continue;
    SymbolTable table = ctx.symbols();
    Parser p(text, d.expr_begin, d.expr_end, table, {true, SymbolKind::commutator});
    Expr rhs = p.sum();
    p.expect_end();
    for (const auto& name : free_symbols(rhs))
      if (!ctx.find(name)) ctx.add_commutator_symbol(name);
    ctx.declare_commutator(d.a, d.b, Expr(0));
  }

  // Pass 2: expressions, against the final symbol table.
  SymbolTable table = ctx.symbols();
  DependencyContext out;
  for (const auto& s : ctx.independents()) out.add_independent(s.name);
  for (const auto& s : ctx.parameters()) out.add_parameter(s.name);
  for (const auto& s : ctx.dependents()) out.add_dependent(s.name);
  for (const auto& s : ctx.commutator_symbols()) out.add_commutator_symbol(s.name);
  for (const auto& s : ctx.opaques()) out.add_opaque(s.name, s.params);
  for (const auto& issue : ctx.issues()) out.add_issue(issue);
  out.set_ordering(ctx.ordering());
  for (const auto& [dep, b] : ctx.bounds()) out.set_bounds(dep, b.first, b.second);

  std::vector<std::pair<const Deferred*, Expr>> commutators, others;
  for (const auto& d : deferred) {
    Parser p(text, d.expr_begin, d.expr_end, table, {});
    Expr e = p.sum();
    p.expect_end();
    if (d.kind == Deferred::Kind::commutator) commutators.emplace_back(&d, e);
    else others.emplace_back(&d, e);
  }
  for (const auto& [d, e] : commutators) out.declare_commutator(d->a, d->b, e);
  for (const auto& [d, e] : others) {
    if (d->kind == Deferred::Kind::representation) out.set_representation(d->a, d->b, e);
    else out.add_constraint(e, d->a);
  }
  return out;
}

std::string annotate(std::string_view text, const ParseError& err) {
  std::size_t start = std::min(err.span.start, text.size());
  std::size_t line_begin = text.rfind('\n', start == 0 ? 0 : start - 1);
  line_begin = (line_begin == std::string_view::npos || start == 0) ? 0 : line_begin + 1;
  if (start > 0 && text[start - 1] == '\n') line_begin = start;
  std::size_t line_end = text.find('\n', start);
  if (line_end == std::string_view::npos) line_end = text.size();
  std::size_t line_no = static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(line_begin), '\n')) + 1;
  std::string line(text.substr(line_begin, line_end - line_begin));
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::size_t width = std::max<std::size_t>(1, std::min(err.span.end, line_end) - start);
  std::string out = std::string(err.what()) + " (line " + std::to_string(line_no) + ", bytes " +
                    std::to_string(err.span.start) + "-" + std::to_string(err.span.end) + ")\n";
  out += "  " + line + "\n";
  out += "  " + std::string(start - line_begin, ' ') + std::string(width, '^') + "\n";
  return out;
}

}  // namespace wpd
