#include <cmath>
#include <limits>

#include "wpd/numeric.hpp"

namespace wpd {

namespace detail {
NumericBinding make_sample(const DependencyContext& ctx, const SampleOptions& opts, std::uint64_t index, bool on_shell);
}

namespace {

struct SampleResult {
  bool failed = false;
  bool error = false;
  double abs_err = 0;
  double rel_err = 0;
  FailureRecord record;
};

SampleResult run_sample(const DependencyContext& ctx, const SampleProbe& probe, const VerifyOptions& opts,
                        std::size_t idx) {
  const std::size_t nsets = std::max<std::size_t>(1, opts.closure_sets.size());
  const std::size_t point = idx / nsets;
  const std::size_t set = idx % nsets;
  SampleResult r;
  r.record.sample = idx;
  NumericBinding b;
  try {
    SampleOptions so{1, opts.seed, opts.sampler.sign, opts.overrides};
    b = detail::make_sample(ctx, so, point, opts.sampler.kind == SamplerSpec::Kind::on_shell);
    if (!opts.closure_sets.empty()) b.functions = opts.closure_sets[set];
    for (const auto& [k, v] : b.values) r.record.binding[k] = v.real();
    auto [lhs, rhs] = probe(b);
    r.record.lhs = lhs;
    r.record.rhs = rhs;
    double abs_err = std::abs(lhs - rhs);
    double scale = std::max(std::abs(lhs), std::abs(rhs));
    double rel_err = scale > 0 ? abs_err / scale : 0.0;
    if (!std::isfinite(abs_err)) {
      r.failed = true;
      r.record.message = "non-finite value";
      r.abs_err = r.rel_err = std::numeric_limits<double>::infinity();
      return r;
    }
    r.abs_err = abs_err;
    r.rel_err = rel_err;
    if (abs_err > opts.tol_abs && rel_err > opts.tol_rel) {
      r.failed = true;
      r.record.message = "mismatch";
    }
  } catch (const std::exception& ex) {
    r.failed = true;
    r.error = true;
    r.record.message = ex.what();
  }
  return r;
}

// Folds per-sample results in index order, so serial and parallel runs agree.
VerificationReport reduce(const std::vector<SampleResult>& results, const VerifyOptions& opts) {
  VerificationReport rep;
  rep.samples = results.size();
  rep.tol_rel = opts.tol_rel;
  rep.tol_abs = opts.tol_abs;
  for (const auto& r : results) {
    rep.max_abs_error = std::max(rep.max_abs_error, r.abs_err);
    rep.max_rel_error = std::max(rep.max_rel_error, r.rel_err);
    if (!r.failed) continue;
    ++rep.failures;
    if (r.error) ++rep.errors;
    if (rep.diagnostics.size() < VerificationReport::kMaxDiagnostics) rep.diagnostics.push_back(r.record);
  }
  return rep;
}

std::size_t total_samples(const VerifyOptions& opts) {
  return static_cast<std::size_t>(std::max(0, opts.samples)) * std::max<std::size_t>(1, opts.closure_sets.size());
}

SampleProbe identity_probe(const Expr& lhs, const Expr& rhs) {
  return [lhs, rhs](const NumericBinding& b) { return std::make_pair(evaluate(lhs, b), evaluate(rhs, b)); };
}

}  // namespace

VerificationReport verify_probe(const DependencyContext& ctx, const SampleProbe& probe, const VerifyOptions& opts) {
  const std::size_t n = total_samples(opts);
  std::vector<SampleResult> results(n);
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 4)
  for (long i = 0; i < count; ++i) results[static_cast<std::size_t>(i)] = run_sample(ctx, probe, opts, static_cast<std::size_t>(i));
  return reduce(results, opts);
}

VerificationReport verify_probe_serial(const DependencyContext& ctx, const SampleProbe& probe,
                                       const VerifyOptions& opts) {
  const std::size_t n = total_samples(opts);
  std::vector<SampleResult> results(n);
  for (std::size_t i = 0; i < n; ++i) results[i] = run_sample(ctx, probe, opts, i);
  return reduce(results, opts);
}

VerificationReport verify_identity(const Expr& lhs, const Expr& rhs, const DependencyContext& ctx,
                                   const VerifyOptions& opts) {
  return verify_probe(ctx, identity_probe(lhs, rhs), opts);
}

VerificationReport verify_identity_serial(const Expr& lhs, const Expr& rhs, const DependencyContext& ctx,
                                          const VerifyOptions& opts) {
  return verify_probe_serial(ctx, identity_probe(lhs, rhs), opts);
}

std::vector<std::map<std::string, OpaqueClosure>> default_closure_sets(const DependencyContext& ctx) {
  std::vector<std::map<std::string, OpaqueClosure>> sets;
  if (ctx.opaques().empty()) return sets;
  for (const auto& c : shipped_closures()) {
    std::map<std::string, OpaqueClosure> set;
    for (const auto& fn : ctx.opaques()) set[fn.name] = closure_for(fn, c);
    sets.push_back(std::move(set));
  }
  return sets;
}

}  // namespace wpd
