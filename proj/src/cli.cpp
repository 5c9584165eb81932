#include "wpd/cli.hpp"

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "wpd/deriv.hpp"
#include "wpd/diffop.hpp"
#include "wpd/numeric.hpp"
#include "wpd/scenarios.hpp"
#include "wpd/textio.hpp"

namespace wpd {

namespace {

using nlohmann::json;

// Carries an exit code out of a command body.
struct Exit {
  int code;
  std::string message;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Exit{kExitUsage, "cannot read context file: " + path};
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Exit{kExitUsage, "cannot write " + path.string()};
  out << content;
}

[[noreturn]] void parse_failure(const std::string& label, const std::string& text, const ParseError& e) {
  throw Exit{kExitUsage, label + ": " + annotate(text, e)};
}

std::shared_ptr<DependencyContext> load_context_text(const std::string& text, const std::string& label,
                                                     std::ostream& err) {
  std::shared_ptr<DependencyContext> ctx;
  try {
    ctx = std::make_shared<DependencyContext>(parse_context(text));
  } catch (const ParseError& e) {
    parse_failure(label, text, e);
  }
  auto diags = validate(*ctx);
  for (const auto& d : diags)
    if (!d.is_error()) err << "warning: " << d.message << "\n";
  if (has_errors(diags)) {
    std::string msg = "invalid context " + label + ":";
    for (const auto& d : diags)
      if (d.is_error()) msg += "\n  " + d.message;
    throw Exit{kExitInvalidContext, msg};
  }
  return ctx;
}

// Adds brackets requested by --ordering/--feynman as extra statements, so the
// context is re-read with every noncommuting symbol known up front.
std::string augment_context(const std::string& text, const std::string& label, const std::string& ordering,
                            bool feynman) {
  if (ordering.empty() && !feynman) return text;
  DependencyContext base;
  try {
    base = parse_context(text);
  } catch (const ParseError& e) {
    parse_failure(label, text, e);
  }
  DependencyContext extended = base;
  OrderingMode mode = base.ordering();
  if (!ordering.empty()) mode = ordering_from_string(ordering);
  try {
    if (feynman) install_feynman(extended);
    else if (mode != OrderingMode::commuting && base.commutators().empty()) install_kappa(extended);
  } catch (const ScenarioError& e) {
    throw Exit{kExitInvalidContext, e.what()};
  }
  std::string extra = "\n";
  for (const auto& p : extended.parameters())
    if (!base.find(p.name)) extra += "param " + p.name + "\n";
  for (const auto& [pair, value] : extended.commutators().entries()) {
    auto old = base.commutators().lookup(pair.first, pair.second);
    if (old && *old == value) continue;
    extra += "commutator [" + pair.first + "," + pair.second + "] = " + print_expr(value) + "\n";
  }
  extra += std::string("ordering ") + to_string(mode) + "\n";
  return text + extra;
}

Expr parse_user_expr(const std::string& label, const std::string& text, const DependencyContext& ctx) {
  try {
    return parse_expr(text, ctx.symbols());
  } catch (const ParseError& e) {
    parse_failure(label, text, e);
  }
}

DifferentialOperator parse_user_operator(const std::string& label, const std::string& text, const ContextPtr& ctx) {
  try {
    return parse_operator(text, ctx);
  } catch (const ParseError& e) {
    parse_failure(label, text, e);
  }
}

// "<operator> @ <expr>" applies the operator; anything else is an expression.
Expr parse_side(const std::string& label, const std::string& text, const ContextPtr& ctx) {
  auto at = text.find('@');
  if (at == std::string::npos) return parse_user_expr(label, text, *ctx);
  auto op = parse_user_operator(label, text.substr(0, at), ctx);
  Expr e = parse_user_expr(label, text.substr(at + 1), *ctx);
  return apply(op, e);
}

Format parse_format(const std::string& s) {
  try {
    return format_from_string(s);
  } catch (const std::invalid_argument& e) {
    throw Exit{kExitUsage, e.what()};
  }
}

json envelope(const std::string& command, const std::string& context, json result) {
  json j;
  j["command"] = command;
  j["context"] = context;
  j["result"] = std::move(result);
  return j;
}

std::string render(const Expr& e, Format f) {
  return f == Format::json ? expr_json(e).dump() : print_expr(e, f);
}

// Maps library exceptions thrown while computing to exit codes.
template <typename F>
int guarded(F&& body, std::ostream& err) {
  try {
    return body();
  } catch (const Exit& e) {
    if (!e.message.empty()) err << "error: " << e.message << (e.message.back() == '\n' ? "" : "\n");
    return e.code;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const MissingRepresentation& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidContext;
  } catch (const ConstraintError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidContext;
  } catch (const ScenarioError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidContext;
  } catch (const UndeclaredCommutator& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidContext;
  } catch (const OperatorError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DerivativeError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidContext;
  } catch (const NumericFailure& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const EvaluationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

struct DeriveArgs {
  std::string ctx, expr, wrt, format = "text";
  bool plain = false;
};

int cmd_derive(const DeriveArgs& a, std::ostream& out, std::ostream& err) {
  Format fmt = parse_format(a.format);
  auto ctx = load_context_text(read_file(a.ctx), a.ctx, err);
  Expr e = parse_user_expr("--expr", a.expr, *ctx);
  Symbol v;
  try {
    v = parse_identifier(a.wrt, ctx->symbols());
  } catch (const ParseError& pe) {
    parse_failure("--wrt", a.wrt, pe);
  }
  auto mode = a.plain || v.kind == SymbolKind::parameter ? DerivativeGenerator::Mode::plain
                                                          : DerivativeGenerator::Mode::whole;
  DifferentialOperator op = DifferentialOperator::identity(ctx);
  try {
    op = DifferentialOperator::generator(ctx, v.name, mode);
  } catch (const OperatorError& oe) {
    throw Exit{kExitUsage, std::string("--wrt: ") + oe.what()};
  }
  Expr d = apply(op, e);
  if (fmt == Format::json) {
    json r = {{"expr", print_expr(e)},
              {"wrt", v.name},
              {"mode", mode == DerivativeGenerator::Mode::whole ? "whole" : "plain"},
              {"derivative", expr_json(d)},
              {"text", print_expr(d)}};
    out << envelope("derive", a.ctx, r).dump(2) << "\n";
  } else {
    out << render(d, fmt) << "\n";
  }
  return kExitOk;
}

struct CommutatorArgs {
  std::string ctx, a, b, apply_to, ordering, format = "text";
  bool feynman = false;
};

int cmd_commutator(const CommutatorArgs& a, std::ostream& out, std::ostream& err) {
  Format fmt = parse_format(a.format);
  if (!a.ordering.empty()) {
    try {
      ordering_from_string(a.ordering);
    } catch (const std::invalid_argument& e) {
      throw Exit{kExitUsage, e.what()};
    }
  }
  std::string text = augment_context(read_file(a.ctx), a.ctx, a.ordering, a.feynman);
  auto ctx = load_context_text(text, a.ctx, err);
  auto A = parse_user_operator("--a", a.a, ctx);
  auto B = parse_user_operator("--b", a.b, ctx);
  auto C = commutator(A, B);
  json r = {{"a", print_operator(A)}, {"b", print_operator(B)}, {"ordering", to_string(ctx->ordering())}};
  std::string shown;
  if (!a.apply_to.empty()) {
    Expr e = parse_user_expr("--apply", a.apply_to, *ctx);
    Expr v = apply(C, e);
    r["apply"] = print_expr(e);
    r["value"] = expr_json(v);
    r["text"] = print_expr(v);
    shown = render(v, fmt);
  } else {
    auto reduced = reduce_to_plain(C);
    r["operator"] = operator_json(reduced);
    r["text"] = print_operator(reduced);
    shown = print_operator(reduced, fmt);
  }
  if (fmt == Format::json) out << envelope("commutator", a.ctx, r).dump(2) << "\n";
  else out << shown << "\n";
  return kExitOk;
}

struct ScenarioArgs {
  std::string name, ordering = "commuting", trajectory = "0.5*tp", out_dir, format = "text";
  int dim = 3, sign = 1;
  bool feynman = false;
};

int cmd_scenario(const ScenarioArgs& a, std::ostream& out, std::ostream&) {
  Format fmt = parse_format(a.format);
  if (a.name != "mass-shell" && a.name != "retarded") throw Exit{kExitUsage, "unknown scenario: " + a.name};
  json r;
  std::string text_out;
  std::string ctx_text;
  std::vector<std::pair<std::string, std::string>> files;

  if (a.name == "mass-shell") {
    MassShellScenario s;
    s.dimension = a.dim;
    if (a.sign != 1 && a.sign != -1) throw Exit{kExitUsage, "--sign must be +1 or -1"};
    s.sign = a.sign;
    try {
      s.ordering = ordering_from_string(a.ordering);
    } catch (const std::invalid_argument& e) {
      throw Exit{kExitUsage, e.what()};
    }
    s.feynman = a.feynman;
    auto ctx = build_mass_shell(s);
    ctx_text = print_context(*ctx);
    auto table = position_commutator_table(ctx);
    json entries = json::array();
    std::string table_text;
    for (int mu = 0; mu <= table.dimension; ++mu) {
      json row = json::array();
      for (int nu = 0; nu <= table.dimension; ++nu) {
        const auto& op = table.entries[static_cast<size_t>(mu)][static_cast<size_t>(nu)];
        row.push_back({{"operator", operator_json(op)}, {"text", print_operator(op)}});
        table_text += "[x" + std::to_string(mu) + ",x" + std::to_string(nu) + "] = " +
                      print_operator(op, fmt == Format::latex ? Format::latex : Format::text) + "\n";
      }
      entries.push_back(row);
    }
    json table_json = {{"dimension", table.dimension}, {"ordering", to_string(s.ordering)},
                       {"feynman", s.feynman}, {"entries", entries}};
    r = {{"scenario", a.name}, {"ctx", ctx_text}, {"table", table_json}};
    text_out = table_text;
    files = {{"mass-shell.ctx", ctx_text},
             {"mass-shell-table.json", table_json.dump(2) + "\n"},
             {"mass-shell-table.txt", table_text}};
  } else {
    SymbolTable symbols;
    symbols.declare(retarded_time_symbol());
    Expr trajectory;
    try {
      trajectory = parse_expr(a.trajectory, symbols, {true, SymbolKind::parameter});
    } catch (const ParseError& e) {
      parse_failure("--trajectory", a.trajectory, e);
    }
    auto ctx = build_retarded({trajectory});
    ctx_text = print_context(*ctx);
    json reps = json::object();
    std::string reps_text;
    for (const auto& v : ctx->independents()) {
      Expr rep = ctx->representation("tp", v.name).expr;
      std::string lhs = "dtp/d" + v.name;
      reps[lhs] = {{"expr", expr_json(rep)}, {"text", print_expr(rep)}};
      reps_text += lhs + " = " + print_expr(rep, fmt == Format::latex ? Format::latex : Format::text) + "\n";
    }
    r = {{"scenario", a.name}, {"ctx", ctx_text}, {"representations", reps}};
    text_out = reps_text;
    files = {{"retarded.ctx", ctx_text},
             {"retarded-representations.json", reps.dump(2) + "\n"},
             {"retarded-representations.txt", reps_text}};
  }

  if (!a.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(a.out_dir, ec);
    for (const auto& [name, content] : files) write_file(std::filesystem::path(a.out_dir) / name, content);
  }
  if (fmt == Format::json) out << envelope("scenario", a.name, r).dump(2) << "\n";
  else out << text_out;
  return kExitOk;
}

struct VerifyArgs {
  std::string ctx, lhs, rhs, sampler = "on-shell", fd_wrt, format = "text";
  int samples = 100;
  double tol = 1e-6, tol_abs = 1e-8;
  std::uint64_t seed = 0;
};

json failure_json(const FailureRecord& f) {
  json binding = json::object();
  for (const auto& [k, v] : f.binding) binding[k] = v;
  return {{"sample", f.sample},
          {"binding", binding},
          {"lhs", {f.lhs.real(), f.lhs.imag()}},
          {"rhs", {f.rhs.real(), f.rhs.imag()}},
          {"message", f.message}};
}

int cmd_verify(const VerifyArgs& a, std::ostream& out, std::ostream& err) {
  Format fmt = parse_format(a.format);
  if (a.samples < 1) throw Exit{kExitUsage, "--samples must be positive"};
  VerifyOptions opts;
  opts.samples = a.samples;
  opts.seed = a.seed;
  opts.tol_rel = a.tol;
  opts.tol_abs = a.tol_abs;
  if (a.sampler == "on-shell") opts.sampler = {SamplerSpec::Kind::on_shell, +1};
  else if (a.sampler == "on-shell-neg") opts.sampler = {SamplerSpec::Kind::on_shell, -1};
  else if (a.sampler == "off-shell") opts.sampler = {SamplerSpec::Kind::off_shell, +1};
  else throw Exit{kExitUsage, "unknown sampler: " + a.sampler};

  auto ctx = load_context_text(read_file(a.ctx), a.ctx, err);
  opts.closure_sets = default_closure_sets(*ctx);

  Expr lhs = parse_side("--lhs", a.lhs, ctx);
  VerificationReport rep;
  std::string rhs_text;
  if (!a.fd_wrt.empty()) {
    if (opts.sampler.kind != SamplerSpec::Kind::on_shell)
      throw Exit{kExitUsage, "--fd-wrt needs an on-shell sampler"};
    Symbol v;
    try {
      v = parse_identifier(a.fd_wrt, ctx->symbols());
    } catch (const ParseError& pe) {
      parse_failure("--fd-wrt", a.fd_wrt, pe);
    }
    Expr d = apply(DifferentialOperator::generator(ctx, v.name, DerivativeGenerator::Mode::whole), lhs);
    rhs_text = "fd_whole(" + print_expr(lhs) + ", " + v.name + ")";
    const DependencyContext& c = *ctx;
    SampleProbe probe = [d, lhs, v, &c](const NumericBinding& b) {
      return std::make_pair(evaluate(d, b), fd_whole(lhs, v.name, c, b));
    };
    rep = verify_probe(*ctx, probe, opts);
    lhs = d;
  } else {
    if (a.rhs.empty()) throw Exit{kExitUsage, "--rhs is required unless --fd-wrt is given"};
    Expr rhs = parse_side("--rhs", a.rhs, ctx);
    rhs_text = print_expr(rhs);
    rep = verify_identity(lhs, rhs, *ctx, opts);
  }

  const bool numeric_failure = rep.errors > 0;
  const char* verdict = rep.passed() ? "pass" : (numeric_failure ? "error" : "fail");
  if (fmt == Format::json) {
    json diags = json::array();
    for (const auto& f : rep.diagnostics) diags.push_back(failure_json(f));
    json r = {{"lhs", print_expr(lhs)},
              {"rhs", rhs_text},
              {"seed", a.seed},
              {"sampler", a.sampler},
              {"tol_rel", rep.tol_rel},
              {"tol_abs", rep.tol_abs},
              {"closure_sets", opts.closure_sets.size()},
              {"errors", rep.errors},
              {"diagnostics", diags}};
    json j = envelope("verify", a.ctx, r);
    j["samples"] = rep.samples;
    j["failures"] = rep.failures;
    j["max_abs_err"] = rep.max_abs_error;
    j["max_rel_err"] = rep.max_rel_error;
    j["verdict"] = verdict;
    out << j.dump(2) << "\n";
  } else {
    std::ostringstream s;
    s.precision(6);
    s << verdict << ": " << rep.samples << " samples, " << rep.failures << " failures, max_abs_err "
      << rep.max_abs_error << ", max_rel_err " << rep.max_rel_error << "\n";
    for (const auto& f : rep.diagnostics) {
      s << "  sample " << f.sample << ":";
      for (const auto& [k, v] : f.binding) s << " " << k << "=" << v;
      s << " lhs=" << f.lhs.real() << "+" << f.lhs.imag() << "i rhs=" << f.rhs.real() << "+" << f.rhs.imag()
        << "i " << f.message << "\n";
    }
    out << s.str();
  }
  if (rep.passed()) return kExitOk;
  return numeric_failure ? kExitNumeric : kExitVerifyFailed;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Whole-partial derivative toolkit", "wpd"};
  app.require_subcommand(1);

  DeriveArgs derive;
  auto* d = app.add_subcommand("derive", "Whole (default) or plain partial derivative of an expression");
  d->add_option("ctx", derive.ctx, "Context file")->required();
  d->add_option("--expr", derive.expr, "Expression")->required();
  d->add_option("--wrt", derive.wrt, "Variable")->required();
  d->add_flag("--plain", derive.plain, "Plain partial instead of whole");
  d->add_option("--format", derive.format, "text | json | latex");

  CommutatorArgs comm;
  auto* c = app.add_subcommand("commutator", "Commutator of two operator literals");
  c->add_option("ctx", comm.ctx, "Context file")->required();
  c->add_option("--a", comm.a, "First operator")->required();
  c->add_option("--b", comm.b, "Second operator")->required();
  c->add_option("--apply", comm.apply_to, "Expression to apply the commutator to");
  c->add_option("--ordering", comm.ordering, "commuting | paper | operator");
  c->add_flag("--feynman", comm.feynman, "Use [p_i,p_j] = i eps_ijk B_k");
  c->add_option("--format", comm.format, "text | json | latex");

  ScenarioArgs scen;
  auto* s = app.add_subcommand("scenario", "Built-in scenarios: mass-shell, retarded");
  s->add_option("name", scen.name, "Scenario name")->required();
  s->add_option("--dim", scen.dim, "Number of momentum components");
  s->add_option("--sign", scen.sign, "Mass-shell sheet, +1 or -1");
  s->add_option("--ordering", scen.ordering, "commuting | paper | operator");
  s->add_flag("--feynman", scen.feynman, "Use [p_i,p_j] = i eps_ijk B_k");
  s->add_option("--trajectory", scen.trajectory, "Source trajectory x0(tp)");
  s->add_option("--out", scen.out_dir, "Directory for the generated files");
  s->add_option("--format", scen.format, "text | json | latex");

  VerifyArgs ver;
  auto* v = app.add_subcommand("verify", "Numeric check of lhs == rhs on sampled points");
  v->add_option("ctx", ver.ctx, "Context file")->required();
  v->add_option("--lhs", ver.lhs, "Expression, or '<operator> @ <expr>'")->required();
  v->add_option("--rhs", ver.rhs, "Expression, or '<operator> @ <expr>'");
  v->add_option("--samples", ver.samples, "Sample points");
  v->add_option("--tol", ver.tol, "Relative tolerance");
  v->add_option("--tol-abs", ver.tol_abs, "Absolute tolerance");
  v->add_option("--seed", ver.seed, "Random seed");
  v->add_option("--sampler", ver.sampler, "on-shell | on-shell-neg | off-shell");
  v->add_option("--fd-wrt", ver.fd_wrt, "Compare the whole derivative of --lhs with finite differences");
  v->add_option("--format", ver.format, "text | json | latex");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  if (d->parsed()) return guarded([&] { return cmd_derive(derive, out, err); }, err);
  if (c->parsed()) return guarded([&] { return cmd_commutator(comm, out, err); }, err);
  if (s->parsed()) return guarded([&] { return cmd_scenario(scen, out, err); }, err);
  return guarded([&] { return cmd_verify(ver, out, err); }, err);
}

}  // namespace wpd
