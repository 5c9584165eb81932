#include <benchmark/benchmark.h>

#include "wpd/deriv.hpp"
#include "wpd/numeric.hpp"
#include "wpd/scenarios.hpp"

using namespace wpd;

namespace {

struct Fixture {
  ContextPtr ctx = build_mass_shell(MassShellScenario{});
  Expr lhs, rhs;
  VerifyOptions opts;

  explicit Fixture(int samples) {
    Expr E = ctx->var("E"), f = ctx->opaque("f");
    lhs = momentum_energy_commutator(ctx, 1);
    rhs = ctx->var("p1") / (E * E) * Expr::partial(f.symbol(), f.args(), {{"E", 1}});
    opts.samples = samples;
    opts.seed = 7;
    opts.closure_sets = default_closure_sets(*ctx);
  }
};

void BM_VerifyParallel(benchmark::State& state) {
  Fixture fx(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(verify_identity(fx.lhs, fx.rhs, *fx.ctx, fx.opts));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 3);
}

void BM_VerifySerial(benchmark::State& state) {
  Fixture fx(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(verify_identity_serial(fx.lhs, fx.rhs, *fx.ctx, fx.opts));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 3);
}

// Finite-difference probe: each sample root-solves E twice per direction.
void probe_bench(benchmark::State& state, bool parallel) {
  auto ctx = build_mass_shell(MassShellScenario{});
  Expr m = ctx->var("m"), p1 = ctx->var("p1"), p2 = ctx->var("p2"), p3 = ctx->var("p3");
  Expr e = sqrt(m * m + p1 * p1 + p2 * p2 + p3 * p3) * p2 * ctx->var("E");
  Expr d = whole_partial(e, "p1", *ctx);
  VerifyOptions opts;
  opts.samples = static_cast<std::size_t>(state.range(0));
  opts.tol_rel = 1e-6;
  const DependencyContext& c = *ctx;
  SampleProbe probe = [&](const NumericBinding& b) { return std::make_pair(evaluate(d, b), fd_whole(e, "p1", c, b)); };
  for (auto _ : state)
    benchmark::DoNotOptimize(parallel ? verify_probe(c, probe, opts) : verify_probe_serial(c, probe, opts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_FdProbeParallel(benchmark::State& state) { probe_bench(state, true); }
void BM_FdProbeSerial(benchmark::State& state) { probe_bench(state, false); }

}  // namespace

BENCHMARK(BM_VerifyParallel)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VerifySerial)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FdProbeParallel)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FdProbeSerial)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
