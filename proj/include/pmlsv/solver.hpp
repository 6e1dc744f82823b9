#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pmlsv/poisson_model.hpp"

namespace pmlsv {

/// Thrown when an iterate's entry sum hits zero and the radial projection
/// onto the fixed-intensity set is undefined.
class DegenerateIterateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when every measurement is zero and the initializer has nothing to
/// back-project: the signal is unidentifiable at this intensity.
class UnidentifiableMeasurementsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// What a failed descent attempt reruns after growing L.
///   rethreshold — keep C from the original step and redo only the singular
///                 value shrinkage with the new lambda/L;
///   recompute   — rebuild C = m - (1/L) grad with the new L, then shrink.
enum class BacktrackMode { rethreshold, recompute };

/// Stopping tolerance for |F_k - F_{k-1}|: either 0.5 / max_iters
/// (budget_scaled) or an explicit absolute value.
enum class StopRule { budget_scaled, absolute };

enum class StopReason { converged, max_iters, backtrack_exhausted };

const char* to_string(StopReason reason);
const char* to_string(BacktrackMode mode);
BacktrackMode parse_backtrack_mode(const std::string& name);

struct SolverConfig {
  double lambda = defaults::kLambda;
  double step_l = defaults::kStepL;  // initial L; gradient scale is 1/L
  double gamma = defaults::kGamma;   // multiplies L after a failed attempt
  int max_iters = defaults::kMaxIters;
  StopRule stop_rule = StopRule::budget_scaled;
  double stop_tol = 0.0;             // used when stop_rule == absolute
  BacktrackMode backtrack_mode = BacktrackMode::rethreshold;
  int max_backtracks = defaults::kMaxBacktracks;
  double target_intensity = 0.0;     // I, required > 0
  /// Observer invoked with the initializer (iter 0) and every accepted
  /// iterate, for auditing and instrumentation.
  std::function<void(int iter, const Matrix& iterate, double objective)> on_accept;
};

struct TraceRow {
  int iter = 0;
  double objective = 0.0;
  double step_l = 0.0;
  int rank = 0;           // post-threshold rank of the accepted iterate
  int backtracks = 0;     // failed attempts before this acceptance
  double min_entry = 0.0; // most negative entry of the iterate
  double elapsed_ms = 0.0;
};

struct SolverTrace {
  std::vector<TraceRow> rows;  // row 0 is the initializer
  StopReason stop_reason = StopReason::max_iters;
};

struct SolveResult {
  Matrix estimate;
  SolverTrace trace;
};

/// Radial projection (I / entry_sum_norm(m)) * m onto the fixed-intensity
/// set. Inputs already within tol::kIntensityProjection of I pass through
/// unchanged, which makes the projection idempotent bit for bit.
Matrix project_intensity(const Matrix& m, double intensity);

/// M_0 = project_intensity(adjoint(y), I); every singular value is kept.
Matrix initialize(const SensingOperator& op, const MeasurementSet& y, double intensity);

/// One descent step at fixed L: project_intensity(svt(m_prev - (1/L) grad f,
/// lambda / L), I). No backtracking; exposed for composition tests.
Matrix step(const SensingOperator& op, const MeasurementSet& y, const Matrix& m_prev,
            double l, const SolverConfig& cfg);

/// Full iteration: start from the back-projection, take SVT steps, grow L by
/// gamma whenever F fails to decrease (rerunning per backtrack_mode), accept
/// only strict decreases, and stop on |dF| below the tolerance, on the
/// iteration budget, or after max_backtracks consecutive failed retries.
/// Returns the last accepted iterate and the per-iteration trace.
SolveResult solve(const SensingOperator& op, const MeasurementSet& y,
                  const SolverConfig& cfg);

/// CSV with header iter,objective,step_L,rank,backtracks,min_entry,elapsed_ms.
void write_trace_csv(const SolverTrace& trace, const std::string& path);

}  // namespace pmlsv
