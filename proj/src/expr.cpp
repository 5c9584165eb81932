#include "wpd/expr.hpp"

#include <algorithm>
#include <functional>

namespace wpd {

const char* to_string(SymbolKind kind) {
  switch (kind) {
    case SymbolKind::independent: return "independent";
    case SymbolKind::dependent: return "dependent";
    case SymbolKind::parameter: return "parameter";
    case SymbolKind::opaque_function: return "opaque";
    case SymbolKind::commutator: return "commutator";
  }
  return "?";
}

MultiIndex add_to_index(MultiIndex index, const std::string& var, int order) {
  auto it = std::lower_bound(index.begin(), index.end(), var,
                             [](const auto& entry, const std::string& v) { return entry.first < v; });
  if (it != index.end() && it->first == var) {
    it->second += order;
  } else {
    index.insert(it, {var, order});
  }
  return index;
}

int total_order(const MultiIndex& index) {
  int n = 0;
  for (const auto& [var, k] : index) n += k;
  return n;
}

struct ExprFactory {
  static Expr make(Node n) { return Expr(std::make_shared<const Node>(std::move(n))); }
};

namespace {

std::string args_key(const std::vector<Symbol>& args) {
  std::string k;
  for (size_t i = 0; i < args.size(); ++i) {
    if (i) k += ',';
    k += args[i].name;
  }
  return k;
}

Expr make_constant(const GaussRational& c) {
  Node n;
  n.kind = ExprKind::constant;
  n.value = c;
  n.key = "#" + c.key();
  n.monomial_key = "";
  return ExprFactory::make(std::move(n));
}

const Expr& zero_expr() {
  static const Expr z = make_constant(GaussRational(0));
  return z;
}

bool is_atom(ExprKind k) {
  return k == ExprKind::symbol || k == ExprKind::apply || k == ExprKind::partial;
}

// One factor of a monomial: base^exp with exp != 0.
struct Factor {
  Expr base;
  Rational exp;
};

int factor_class(const Factor& f) {
  if (f.base.kind() == ExprKind::symbol) return f.base.symbol().commutativity_class;
  return 0;
}

bool is_integer(const Rational& q) { return q.get_den() == 1; }

Expr factor_expr(const Factor& f) {
  if (f.exp == 1 && is_atom(f.base.kind())) return f.base;
  Node n;
  n.kind = ExprKind::power;
  n.items = {f.base};
  n.exponent = f.exp;
  n.key = "^(" + f.base.key() + ")" + rational_to_string(f.exp);
  n.monomial_key = n.key;
  return ExprFactory::make(std::move(n));
}

Factor as_factor(const Expr& e) {
  if (e.kind() == ExprKind::power) return {e.base(), e.exponent()};
  return {e, Rational(1)};
}

struct Monomial {
  GaussRational coef{1};
  std::vector<Factor> central;
  std::map<int, std::vector<Factor>> words;
};

Monomial decompose(const Expr& term) {
  Monomial m;
  switch (term.kind()) {
    case ExprKind::constant:
      m.coef = term.constant_value();
      break;
    case ExprKind::sum:
      throw std::logic_error("decompose: sum is not a monomial");
    case ExprKind::product:
      m.coef = term.coefficient();
      for (const auto& f : term.items()) {
        Factor fa = as_factor(f);
        int cls = factor_class(fa);
        if (cls == 0) m.central.push_back(fa);
        else m.words[cls].push_back(fa);
      }
      break;
    default: {
      Factor fa = as_factor(term);
      int cls = factor_class(fa);
      if (cls == 0) m.central.push_back(fa);
      else m.words[cls].push_back(fa);
    }
  }
  return m;
}

Expr build_monomial(const Monomial& m) {
  if (m.coef.is_zero()) return zero_expr();
  std::vector<Factor> central = m.central;
  std::sort(central.begin(), central.end(),
            [](const Factor& a, const Factor& b) { return a.base.key() < b.base.key(); });
  std::vector<Expr> factors;
  for (const auto& f : central) factors.push_back(factor_expr(f));
  for (const auto& [cls, word] : m.words)
    for (const auto& f : word) factors.push_back(factor_expr(f));
  if (factors.empty()) return make_constant(m.coef);
  if (factors.size() == 1 && m.coef.is_one()) return factors.front();
  Node n;
  n.kind = ExprKind::product;
  n.value = m.coef;
  n.items = std::move(factors);
  // A lone factor keeps its own key so that c*x and x merge in sums.
  std::string mk;
  if (n.items.size() == 1) {
    mk = n.items.front().key();
  } else {
    mk = "*(";
    for (size_t i = 0; i < n.items.size(); ++i) {
      if (i) mk += ';';
      mk += n.items[i].key();
    }
    mk += ")";
  }
  n.monomial_key = mk;
  n.key = "#" + m.coef.key() + mk;
  return ExprFactory::make(std::move(n));
}

// A compound base with an integer exponent is folded back through pow(),
// except negative powers of sums, which stay as rational-function atoms.
bool needs_refold(const Factor& f) {
  if (!is_integer(f.exp)) return false;
  ExprKind k = f.base.kind();
  if (is_atom(k)) return false;
  if (k == ExprKind::sum && f.exp < 0) return false;
  return true;
}

bool positive_real_constant(const Expr& e) {
  return e.kind() == ExprKind::constant && e.constant_value().is_real() &&
         sgn(e.constant_value().re()) > 0;
}

Rational floor_of(const Rational& q) {
  mpz_class fl;
  mpz_fdiv_q(fl.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return Rational(fl);
}

class MonomialBuilder {
public:
  explicit MonomialBuilder(Monomial m) : m_(std::move(m)) {}

  void scale(const GaussRational& c) { m_.coef *= c; }

  void insert(const Factor& f) {
    if (f.exp == 0) return;
    int cls = factor_class(f);
    if (cls != 0) {
      auto& word = m_.words[cls];
      if (!word.empty() && word.back().base == f.base) {
        word.back().exp += f.exp;
        word.back().exp.canonicalize();
        if (word.back().exp == 0) word.pop_back();
      } else {
        word.push_back(f);
      }
      if (word.empty()) m_.words.erase(cls);
      return;
    }
    auto it = std::find_if(m_.central.begin(), m_.central.end(),
                           [&](const Factor& g) { return g.base == f.base; });
    Factor merged = f;
    if (it != m_.central.end()) {
      merged.exp = it->exp + f.exp;
      merged.exp.canonicalize();
      m_.central.erase(it);
    }
    if (merged.exp == 0) return;
    if (needs_refold(merged)) {
      pending_.push_back(pow(merged.base, merged.exp));
      return;
    }
    // Positive constant bases keep a fractional exponent in (0,1).
    if (positive_real_constant(merged.base) && (merged.exp < 0 || merged.exp > 1)) {
      Rational whole = floor_of(merged.exp);
      m_.coef *= merged.base.constant_value().pow(whole.get_num().get_si());
      merged.exp -= whole;
      merged.exp.canonicalize();
      if (merged.exp == 0) return;
    }
    m_.central.push_back(merged);
  }

  void insert_all(const Monomial& other) {
    scale(other.coef);
    for (const auto& f : other.central) insert(f);
    for (const auto& [cls, word] : other.words)
      for (const auto& f : word) insert(f);
  }

  Expr build() const {
    Expr result = build_monomial(m_);
    for (const auto& p : pending_) result = result * p;
    return result;
  }

private:
  Monomial m_;
  std::vector<Expr> pending_;
};

Expr with_unit_coefficient(const Expr& term) {
  if (term.kind() == ExprKind::constant) return make_constant(GaussRational(1));
  if (term.kind() != ExprKind::product) return term;
  Monomial m = decompose(term);
  m.coef = GaussRational(1);
  return build_monomial(m);
}

Expr scale_term(const Expr& unit_term, const GaussRational& c) {
  if (c.is_zero()) return zero_expr();
  if (c.is_one()) return unit_term;
  Monomial m = decompose(unit_term);
  m.coef = m.coef * c;
  return build_monomial(m);
}

Expr multiply_terms(const Expr& a, const Expr& b) {
  MonomialBuilder builder(decompose(a));
  builder.insert_all(decompose(b));
  return builder.build();
}

Expr power_by_squaring(const Expr& base, long n) {
  Expr result(1);
  Expr acc = base;
  while (n > 0) {
    if (n & 1) result = result * acc;
    n >>= 1;
    if (n) acc = acc * acc;
  }
  return result;
}

Expr raw_power(const Expr& base, const Rational& q) { return factor_expr({base, q}); }

Expr pow_constant(const GaussRational& c, const Rational& q) {
  if (is_integer(q)) {
    if (c.is_zero() && q < 0) throw std::domain_error("zero raised to a negative power");
    return make_constant(c.pow(q.get_num().get_si()));
  }
  if (c.is_zero()) {
    if (q < 0) throw std::domain_error("zero raised to a negative power");
    return zero_expr();
  }
  if (c.is_one()) return Expr(1);
  if (c.is_real() && sgn(c.re()) > 0) {
    Rational root;
    if (q.get_den().fits_ulong_p() && exact_root(c.re(), q.get_den().get_ui(), root)) {
      return make_constant(GaussRational(root).pow(q.get_num().get_si()));
    }
    MonomialBuilder b(Monomial{});
    b.insert({make_constant(c), q});
    return b.build();
  }
  return raw_power(make_constant(c), q);
}

// Inverse of a monomial, reversing the order of noncommuting words.
Expr inverse_monomial(const Expr& term) {
  Monomial m = decompose(term);
  Monomial inv;
  inv.coef = m.coef.inverse();
  for (const auto& f : m.central) inv.central.push_back({f.base, -f.exp});
  for (const auto& [cls, word] : m.words) {
    auto& w = inv.words[cls];
    for (auto it = word.rbegin(); it != word.rend(); ++it) w.push_back({it->base, -it->exp});
  }
  MonomialBuilder b(Monomial{inv.coef, {}, {}});
  for (const auto& f : inv.central) b.insert(f);
  for (const auto& [cls, word] : inv.words)
    for (const auto& f : word) b.insert(f);
  return b.build();
}

}  // namespace

// ---------------------------------------------------------------------------
// Expr basics

Expr::Expr() : node_(zero_expr().node_) {}
Expr::Expr(long v) : Expr(make_constant(GaussRational(v))) {}
Expr::Expr(GaussRational c) : Expr(make_constant(c)) {}

Expr Expr::constant(GaussRational c) { return make_constant(c); }
Expr Expr::imaginary_unit() { return make_constant(GaussRational::imaginary_unit()); }

Expr Expr::symbol(const Symbol& s) {
  Node n;
  n.kind = ExprKind::symbol;
  n.symbol = s;
  n.key = "$" + s.name;
  n.monomial_key = n.key;
  return ExprFactory::make(std::move(n));
}

Expr Expr::apply(const Symbol& fn, std::vector<Symbol> args) {
  Node n;
  n.kind = ExprKind::apply;
  n.symbol = fn;
  n.args = std::move(args);
  n.key = "@" + fn.name + "(" + args_key(n.args) + ")";
  n.monomial_key = n.key;
  return ExprFactory::make(std::move(n));
}

Expr Expr::partial(const Symbol& fn, std::vector<Symbol> args, MultiIndex index) {
  std::sort(index.begin(), index.end());
  index.erase(std::remove_if(index.begin(), index.end(), [](const auto& e) { return e.second == 0; }),
              index.end());
  if (index.empty()) return apply(fn, std::move(args));
  Node n;
  n.kind = ExprKind::partial;
  n.symbol = fn;
  n.args = std::move(args);
  n.index = std::move(index);
  std::string ik;
  for (const auto& [v, k] : n.index) ik += v + ":" + std::to_string(k) + ";";
  n.key = "d@" + fn.name + "(" + args_key(n.args) + ")[" + ik + "]";
  n.monomial_key = n.key;
  return ExprFactory::make(std::move(n));
}

ExprKind Expr::kind() const { return node_->kind; }
const std::string& Expr::key() const { return node_->key; }
bool Expr::is_zero() const { return kind() == ExprKind::constant && node_->value.is_zero(); }
bool Expr::is_one() const { return kind() == ExprKind::constant && node_->value.is_one(); }
const GaussRational& Expr::constant_value() const { return node_->value; }
const Symbol& Expr::symbol() const { return node_->symbol; }
const std::vector<Symbol>& Expr::args() const { return node_->args; }
const MultiIndex& Expr::index() const { return node_->index; }
const Expr& Expr::base() const { return node_->items.front(); }
const Rational& Expr::exponent() const { return node_->exponent; }
const GaussRational& Expr::coefficient() const { return node_->value; }
const std::vector<Expr>& Expr::items() const { return node_->items; }

// ---------------------------------------------------------------------------
// Arithmetic

std::vector<Expr> terms_of(const Expr& e) {
  if (e.kind() == ExprKind::sum) return e.items();
  if (e.is_zero()) return {};
  return {e};
}

std::pair<GaussRational, Expr> split_term(const Expr& term) {
  switch (term.kind()) {
    case ExprKind::constant: return {term.constant_value(), Expr(1)};
    case ExprKind::product: return {term.coefficient(), with_unit_coefficient(term)};
    case ExprKind::sum: throw std::logic_error("split_term: sum");
    default: return {GaussRational(1), term};
  }
}

Expr sum_of(const std::vector<Expr>& terms) {
  std::map<std::string, std::pair<GaussRational, Expr>> collected;
  std::function<void(const Expr&)> add = [&](const Expr& t) {
    if (t.kind() == ExprKind::sum) {
      for (const auto& s : t.items()) add(s);
      return;
    }
    if (t.is_zero()) return;
    auto [c, unit] = split_term(t);
    const std::string& mk = t.node().monomial_key;
    auto it = collected.find(mk);
    if (it == collected.end()) collected.emplace(mk, std::make_pair(c, unit));
    else it->second.first += c;
  };
  for (const auto& t : terms) add(t);

  std::vector<Expr> out;
  for (auto& [mk, cu] : collected) {
    if (cu.first.is_zero()) continue;
    out.push_back(scale_term(cu.second, cu.first));
  }
  if (out.empty()) return zero_expr();
  if (out.size() == 1) return out.front();
  // Sort by monomial key so that the term order is independent of coefficients.
  std::sort(out.begin(), out.end(), [](const Expr& a, const Expr& b) {
    return a.node().monomial_key < b.node().monomial_key;
  });
  Node n;
  n.kind = ExprKind::sum;
  n.items = std::move(out);
  std::string k = "+(";
  for (size_t i = 0; i < n.items.size(); ++i) {
    if (i) k += ';';
    k += n.items[i].key();
  }
  k += ")";
  n.key = k;
  n.monomial_key = k;
  return ExprFactory::make(std::move(n));
}

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  return sum_of({a, b});
}

Expr operator-(const Expr& a) { return Expr(-1) * a; }
Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_zero() || b.is_zero()) return zero_expr();
  if (a.is_one()) return b;
  if (b.is_one()) return a;
  auto ta = terms_of(a);
  auto tb = terms_of(b);
  if (ta.size() == 1 && tb.size() == 1) return multiply_terms(ta[0], tb[0]);
  std::vector<Expr> products;
  products.reserve(ta.size() * tb.size());
  for (const auto& x : ta)
    for (const auto& y : tb) products.push_back(multiply_terms(x, y));
  return sum_of(products);
}

Expr operator/(const Expr& a, const Expr& b) { return a * pow(b, Rational(-1)); }

Expr product_of(const std::vector<Expr>& factors) {
  Expr r(1);
  for (const auto& f : factors) r = r * f;
  return r;
}

Expr pow(const Expr& base, const Rational& exponent_in) {
  Rational q = exponent_in;
  q.canonicalize();
  if (q == 0) return Expr(1);
  if (q == 1) return base;

  switch (base.kind()) {
    case ExprKind::constant:
      return pow_constant(base.constant_value(), q);

    case ExprKind::symbol:
    case ExprKind::apply:
    case ExprKind::partial:
      return raw_power(base, q);

    case ExprKind::power:
      if (is_integer(q)) {
        Rational e = base.exponent() * q;
        e.canonicalize();
        MonomialBuilder b(Monomial{});
        b.insert({base.base(), e});
        return b.build();
      }
      return raw_power(base, q);

    case ExprKind::product: {
      Monomial m = decompose(base);
      if (is_integer(q)) {
        long n = q.get_num().get_si();
        if (m.words.empty()) {
          MonomialBuilder b(Monomial{m.coef.pow(n), {}, {}});
          for (const auto& f : m.central) {
            Rational e = f.exp * q;
            e.canonicalize();
            b.insert({f.base, e});
          }
          return b.build();
        }
        Expr unit = n > 0 ? base : inverse_monomial(base);
        return power_by_squaring(unit, n > 0 ? n : -n);
      }
      if (m.coef.is_real() && sgn(m.coef.re()) > 0 && !m.coef.is_one()) {
        Monomial rest = m;
        rest.coef = GaussRational(1);
        return pow_constant(m.coef, q) * pow(build_monomial(rest), q);
      }
      return raw_power(base, q);
    }

    case ExprKind::sum: {
      if (is_integer(q) && q > 0) return power_by_squaring(base, q.get_num().get_si());
      // Normalize the content so that c*s and s share one base.
      GaussRational lead = split_term(base.items().front()).first;
      GaussRational content;
      if (is_integer(q)) content = lead;
      else if (lead.is_real()) content = GaussRational(abs(lead.re()));
      else content = GaussRational(1);
      if (content.is_one()) return raw_power(base, q);
      Expr primitive = base * Expr::constant(content.inverse());
      return pow_constant(content, q) * raw_power(primitive, q);
    }
  }
  return raw_power(base, q);
}

Expr sqrt(const Expr& e) { return pow(e, Rational(1, 2)); }

// ---------------------------------------------------------------------------
// Structural utilities

Expr normalize(const Expr& e) { return substitute(e, {}); }

namespace {

Expr rebuild(const Expr& e, const std::map<std::string, Expr>& bindings) {
  switch (e.kind()) {
    case ExprKind::constant:
    case ExprKind::apply:
    case ExprKind::partial:
      return e;
    case ExprKind::symbol: {
      auto it = bindings.find(e.symbol().name);
      return it == bindings.end() ? e : it->second;
    }
    case ExprKind::power:
      return pow(rebuild(e.base(), bindings), e.exponent());
    case ExprKind::product: {
      Expr r = Expr::constant(e.coefficient());
      for (const auto& f : e.items()) r = r * rebuild(f, bindings);
      return r;
    }
    case ExprKind::sum: {
      std::vector<Expr> ts;
      for (const auto& t : e.items()) ts.push_back(rebuild(t, bindings));
      return sum_of(ts);
    }
  }
  return e;
}

void collect_symbols(const Expr& e, std::set<std::string>& out, bool through_opaque) {
  switch (e.kind()) {
    case ExprKind::constant: return;
    case ExprKind::symbol: out.insert(e.symbol().name); return;
    case ExprKind::apply:
    case ExprKind::partial:
      if (through_opaque)
        for (const auto& a : e.args()) out.insert(a.name);
      return;
    default:
      for (const auto& i : e.items()) collect_symbols(i, out, through_opaque);
  }
}

}  // namespace

Expr substitute(const Expr& e, const std::map<std::string, Expr>& bindings) {
  // Reject cycles among the bound names (including self-reference).
  std::map<std::string, std::set<std::string>> edges;
  for (const auto& [name, value] : bindings) {
    if (value.kind() == ExprKind::symbol && value.symbol().name == name) continue;
    for (const auto& s : free_symbols(value))
      if (bindings.count(s)) edges[name].insert(s);
  }
  std::map<std::string, int> state;  // 0 new, 1 on stack, 2 done
  std::vector<std::string> stack;
  std::function<void(const std::string&)> visit = [&](const std::string& n) {
    state[n] = 1;
    stack.push_back(n);
    for (const auto& m : edges[n]) {
      if (state[m] == 1) {
        std::string cyc;
        auto it = std::find(stack.begin(), stack.end(), m);
        for (; it != stack.end(); ++it) cyc += *it + " -> ";
        throw SubstitutionCycle(cyc + m);
      }
      if (state[m] == 0) visit(m);
    }
    stack.pop_back();
    state[n] = 2;
  };
  for (const auto& [name, v] : edges)
    if (state[name] == 0) visit(name);
  return rebuild(e, bindings);
}

std::set<std::string> free_symbols(const Expr& e) {
  std::set<std::string> out;
  collect_symbols(e, out, false);
  return out;
}

std::set<std::string> opaque_functions(const Expr& e) {
  std::set<std::string> out;
  std::function<void(const Expr&)> walk = [&](const Expr& x) {
    if (x.kind() == ExprKind::apply || x.kind() == ExprKind::partial) out.insert(x.symbol().name);
    else if (x.kind() != ExprKind::constant && x.kind() != ExprKind::symbol)
      for (const auto& i : x.items()) walk(i);
  };
  walk(e);
  return out;
}

bool mentions(const Expr& e, const std::string& name) { return free_symbols(e).count(name) > 0; }

bool depends_on(const Expr& e, const std::string& name) {
  std::set<std::string> out;
  collect_symbols(e, out, true);
  return out.count(name) > 0;
}

bool contains_opaque(const Expr& e) { return !opaque_functions(e).empty(); }

// ---------------------------------------------------------------------------
// Canonical equality

namespace {

void collect_sum_denominators(const Expr& e, std::map<std::string, std::pair<Expr, Rational>>& out) {
  for (const auto& t : terms_of(e)) {
    if (t.kind() == ExprKind::constant || t.kind() == ExprKind::sum) continue;
    Monomial m = decompose(t);
    for (const auto& f : m.central) {
      if (f.base.kind() != ExprKind::sum || !is_integer(f.exp) || f.exp > 0) continue;
      Rational k = -f.exp;
      auto it = out.find(f.base.key());
      if (it == out.end()) out.emplace(f.base.key(), std::make_pair(f.base, k));
      else if (it->second.second < k) it->second.second = k;
    }
  }
}

Expr multiply_by_factor(const Expr& e, const Expr& base, const Rational& exp) {
  std::vector<Expr> out;
  for (const auto& t : terms_of(e)) {
    MonomialBuilder b(decompose(t));
    b.insert({base, exp});
    out.push_back(b.build());
  }
  return sum_of(out);
}

}  // namespace

bool equals_canonical(const Expr& a, const Expr& b) {
  Expr d = a - b;
  if (d.is_zero()) return true;
  // Clear sum denominators and compare the numerator.
  for (int round = 0; round < 4; ++round) {
    std::map<std::string, std::pair<Expr, Rational>> dens;
    collect_sum_denominators(d, dens);
    if (dens.empty()) return false;
    for (const auto& [k, be] : dens) d = multiply_by_factor(d, be.first, be.second);
    if (d.is_zero()) return true;
  }
  return d.is_zero();
}

// ---------------------------------------------------------------------------
// Normal ordering

void CommutatorTable::declare(const std::string& a, const std::string& b, const Expr& value) {
  if (a == b) throw std::invalid_argument("commutator of a symbol with itself");
  if (a < b) entries_[{a, b}] = value;
  else entries_[{b, a}] = -value;
}

std::optional<Expr> CommutatorTable::lookup(const std::string& a, const std::string& b) const {
  if (a == b) return Expr(0);
  if (a < b) {
    auto it = entries_.find({a, b});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }
  auto it = entries_.find({b, a});
  if (it == entries_.end()) return std::nullopt;
  return -it->second;
}

namespace {

int commutator_symbol_count(const Monomial& m) {
  long n = 0;
  for (const auto& f : m.central) {
    if (f.base.kind() == ExprKind::symbol && f.base.symbol().kind == SymbolKind::commutator) {
      if (!is_integer(f.exp) || f.exp < 0) return 0;
      n += f.exp.get_num().get_si();
    }
  }
  return static_cast<int>(n);
}

Expr order_term(const Expr& term, int emitted, const CommutatorTable& table, bool commuting) {
  if (term.kind() == ExprKind::constant || term.kind() == ExprKind::sum) return term;
  Monomial m = decompose(term);
  if (emitted + commutator_symbol_count(m) >= 2) return Expr(0);

  for (auto& [cls, word] : m.words) {
    for (size_t i = 0; i + 1 < word.size(); ++i) {
      const Factor& x = word[i];
      const Factor& y = word[i + 1];
      if (!(y.base.key() < x.base.key())) continue;

      // x^a y^b = y^b x^a + a b [x,y] x^(a-1) y^(b-1), to first order.
      Monomial swapped = m;
      std::swap(swapped.words[cls][i], swapped.words[cls][i + 1]);
      MonomialBuilder sb(Monomial{swapped.coef, swapped.central, {}});
      for (const auto& [c2, w2] : swapped.words)
        for (const auto& f : w2) sb.insert(f);
      Expr result = order_term(sb.build(), emitted, table, commuting);

      std::optional<Expr> bracket =
          commuting ? std::optional<Expr>(Expr(0))
                    : table.lookup(x.base.symbol().name, y.base.symbol().name);
      if (!bracket) throw UndeclaredCommutator(x.base.symbol().name, y.base.symbol().name);
      if (bracket->is_zero()) return result;

      Monomial reduced = m;
      auto& rw = reduced.words[cls];
      Rational xa = x.exp, yb = y.exp;
      rw.erase(rw.begin() + static_cast<long>(i), rw.begin() + static_cast<long>(i) + 2);
      std::vector<Factor> middle;
      Rational xa1 = xa - 1, yb1 = yb - 1;
      xa1.canonicalize();
      yb1.canonicalize();
      if (xa1 != 0) middle.push_back({x.base, xa1});
      if (yb1 != 0) middle.push_back({y.base, yb1});
      rw.insert(rw.begin() + static_cast<long>(i), middle.begin(), middle.end());
      Rational ab = xa * yb;
      MonomialBuilder cb(Monomial{reduced.coef * GaussRational(ab), reduced.central, {}});
      for (const auto& [c2, w2] : reduced.words)
        for (const auto& f : w2) cb.insert(f);
      // A bracket valued in commutator symbols is already counted by them.
      bool carries_symbol = false;
      for (const auto& bt : terms_of(*bracket))
        if (commutator_symbol_count(decompose(bt)) > 0) carries_symbol = true;
      Expr extra = cb.build() * *bracket;
      const int next = emitted + (carries_symbol ? 0 : 1);
      for (const auto& t : terms_of(extra)) result = result + order_term(t, next, table, commuting);
      return result;
    }
  }
  return term;
}

}  // namespace

Expr normal_order(const Expr& e, const CommutatorTable& table, bool commuting) {
  std::vector<Expr> out;
  for (const auto& t : terms_of(e)) out.push_back(order_term(t, 0, table, commuting));
  return sum_of(out);
}

}  // namespace wpd
