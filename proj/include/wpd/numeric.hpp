#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wpd/context.hpp"
#include "wpd/expr.hpp"

namespace wpd {

using ArgValues = std::map<std::string, Complex>;

/// Concrete stand-in for an opaque function. `derivative` may return
/// nullopt for index combinations it does not know; those fall back to
/// nested central differences of `value`.
struct OpaqueClosure {
  std::string label;
  std::function<Complex(const ArgValues&)> value;
  std::function<std::optional<Complex>(const ArgValues&, const MultiIndex&)> derivative;
};

struct NumericBinding {
  std::map<std::string, Complex> values;
  std::map<std::string, OpaqueClosure> functions;
  bool on_shell = false;
};

struct EvaluationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Step used for finite-difference partials of closures without derivatives.
inline constexpr double kOpaqueStep = 1e-5;

Complex evaluate(const Expr& e, const NumericBinding& b);

/// Test closures over (p1, E): E^2 p1, p1/(1+E^2), exp(E) p1.
OpaqueClosure polynomial_closure();
OpaqueClosure rational_closure();
OpaqueClosure exponential_closure();
std::vector<OpaqueClosure> shipped_closures();
/// Binds an opaque function name to a closure written over (p1, E), using
/// the function's declared argument names.
OpaqueClosure closure_for(const Symbol& fn, const OpaqueClosure& over_p1_E);

// ---------------------------------------------------------------------------
// Constraint surfaces

struct SampleOptions {
  int count = 1;
  std::uint64_t seed = 0;
  int sign = +1;
  /// Fixed values for chosen independents or parameters.
  std::map<std::string, double> overrides;
};

/// Deterministic per-(seed, index, stream) uniform in [0,1).
double uniform01(std::uint64_t seed, std::uint64_t index, std::uint64_t stream);

/// Solves the constraint for `dependent` at the given binding. With a
/// hint, the nearest root (same sheet) is returned; otherwise the sign
/// selects the sheet. Throws NumericFailure.
double solve_dependent(const DependencyContext& ctx, const std::string& dependent, const NumericBinding& b,
                       int sign, std::optional<double> hint = std::nullopt);

/// Independents uniform in [-2,2], parameters in [1/2,2], dependents solved
/// from their constraints; |g| <= 1e-12 at every returned binding.
std::vector<NumericBinding> sample_on_shell(const DependencyContext& ctx, const SampleOptions& opts);

/// Off-shell box: as above, but dependents drawn in sign*[1/2,2].
std::vector<NumericBinding> sample_off_shell(const DependencyContext& ctx, const SampleOptions& opts);

// ---------------------------------------------------------------------------
// Finite differences

inline constexpr double kFirstOrderStep = 1e-5;
inline constexpr double kNestedStep = 1e-4;

/// Centered difference of e along `var` with dependents re-solved from their
/// constraints at each displaced point.
Complex fd_whole(const Expr& e, const std::string& var, const DependencyContext& ctx, const NumericBinding& b,
                 double h = kFirstOrderStep);

/// Nested finite differences of [W_i, d/dE] f for an explicit function of
/// (p, E), with W_i g = d_i g + (p_i/E) d_E g. Arguments named p<i> and E.
Complex fd_commutator_pE(const OpaqueClosure& f, int i, const ArgValues& point, double h = kNestedStep);

// ---------------------------------------------------------------------------
// Verification

struct SamplerSpec {
  enum class Kind { on_shell, off_shell };
  Kind kind = Kind::on_shell;
  int sign = +1;
};

struct FailureRecord {
  std::size_t sample = 0;
  std::map<std::string, double> binding;
  Complex lhs{0, 0};
  Complex rhs{0, 0};
  std::string message;
};

struct VerificationReport {
  std::size_t samples = 0;
  std::size_t failures = 0;
  std::size_t errors = 0;  // failures raised as exceptions (no comparison made)
  double max_abs_error = 0;
  double max_rel_error = 0;
  double tol_rel = 0;
  double tol_abs = 0;
  std::vector<FailureRecord> diagnostics;  // at most kMaxDiagnostics, lowest sample index first

  bool passed() const { return failures == 0; }
  static constexpr std::size_t kMaxDiagnostics = 10;
};

struct VerifyOptions {
  int samples = 100;
  std::uint64_t seed = 0;
  double tol_rel = 1e-6;
  double tol_abs = 1e-8;
  SamplerSpec sampler;
  /// Each entry binds every opaque function; one sample is evaluated per
  /// (point, closure set). Empty means no opaque bindings.
  std::vector<std::map<std::string, OpaqueClosure>> closure_sets;
  std::map<std::string, double> overrides;
};

/// Pair of numbers to compare at one binding.
using SampleProbe = std::function<std::pair<Complex, Complex>(const NumericBinding&)>;

/// Evaluates the probe at every sample; OpenMP-parallel over samples.
VerificationReport verify_probe(const DependencyContext& ctx, const SampleProbe& probe, const VerifyOptions& opts);
/// Serial reference producing the identical report.
VerificationReport verify_probe_serial(const DependencyContext& ctx, const SampleProbe& probe,
                                       const VerifyOptions& opts);

/// Compares two expressions numerically; commutator symbols are bound to 0.
VerificationReport verify_identity(const Expr& lhs, const Expr& rhs, const DependencyContext& ctx,
                                   const VerifyOptions& opts);
VerificationReport verify_identity_serial(const Expr& lhs, const Expr& rhs, const DependencyContext& ctx,
                                          const VerifyOptions& opts);

/// Default closure sets: each shipped closure bound to every opaque function of ctx.
std::vector<std::map<std::string, OpaqueClosure>> default_closure_sets(const DependencyContext& ctx);

}  // namespace wpd
