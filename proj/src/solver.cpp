#include "pmlsv/solver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace pmlsv {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void check_solver_config(const SolverConfig& cfg) {
  if (!(cfg.lambda >= 0.0)) {
    throw std::invalid_argument("solver: lambda must be nonnegative");
  }
  if (!(cfg.step_l > 0.0)) {
    throw std::invalid_argument("solver: step_l must be positive");
  }
  if (!(cfg.gamma > 1.0)) {
    throw std::invalid_argument("solver: gamma must exceed 1");
  }
  if (cfg.max_iters < 1) {
    throw std::invalid_argument("solver: max_iters must be >= 1");
  }
  if (cfg.max_backtracks < 0) {
    throw std::invalid_argument("solver: max_backtracks must be >= 0");
  }
  if (!(cfg.target_intensity > 0.0)) {
    throw std::invalid_argument("solver: target_intensity must be positive");
  }
  if (cfg.stop_rule == StopRule::absolute && !(cfg.stop_tol > 0.0)) {
    throw std::invalid_argument("solver: absolute stop rule needs stop_tol > 0");
  }
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(),
                     sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::converged: return "converged";
    case StopReason::max_iters: return "max_iters";
    case StopReason::backtrack_exhausted: return "backtrack_exhausted";
  }
  return "unknown";
}

const char* to_string(BacktrackMode mode) {
  switch (mode) {
    case BacktrackMode::rethreshold: return "rethreshold";
    case BacktrackMode::recompute: return "recompute";
  }
  return "unknown";
}

BacktrackMode parse_backtrack_mode(const std::string& name) {
  if (name == "rethreshold") return BacktrackMode::rethreshold;
  if (name == "recompute") return BacktrackMode::recompute;
  throw std::invalid_argument("unknown backtrack mode '" + name +
                              "' (expected rethreshold or recompute)");
}

Matrix project_intensity(const Matrix& m, double intensity) {
  if (!(intensity > 0.0)) {
    throw std::invalid_argument("project_intensity: intensity must be positive");
  }
  const double s = entry_sum_norm(m);
  if (s == 0.0 || !std::isfinite(s)) {
    throw DegenerateIterateError(
        "project_intensity: iterate has zero (or non-finite) entry sum");
  }
  if (std::abs(s - intensity) <= tol::kIntensityProjection * intensity) {
    return m;
  }
  return (intensity / s) * m;
}

Matrix initialize(const SensingOperator& op, const MeasurementSet& y, double intensity) {
  if (static_cast<int>(y.counts.size()) != op.n_meas()) {
    throw std::invalid_argument("initialize: measurement count does not match N");
  }
  bool any = false;
  for (const std::uint64_t c : y.counts) {
    if (c != 0) { any = true; break; }
  }
  if (!any) {
    throw UnidentifiableMeasurementsError(
        "initialize: every measurement is zero; the signal is unidentifiable "
        "at this intensity");
  }
  return project_intensity(adjoint(op, counts_as_reals(y)), intensity);
}

Matrix step(const SensingOperator& op, const MeasurementSet& y, const Matrix& m_prev,
            double l, const SolverConfig& cfg) {
  if (!(l > 0.0)) {
    throw std::invalid_argument("step: L must be positive");
  }
  const ObjectiveParams params{cfg.lambda,
                               default_rate_floor(cfg.target_intensity, op.n_meas())};
  const Matrix grad = gradient(op, y, m_prev, params);
  const Matrix c = m_prev - (1.0 / l) * grad;
  return project_intensity(svt(c, cfg.lambda / l), cfg.target_intensity);
}

SolveResult solve(const SensingOperator& op, const MeasurementSet& y,
                  const SolverConfig& cfg) {
  check_solver_config(cfg);
  const double intensity = cfg.target_intensity;
  const ObjectiveParams params{cfg.lambda, default_rate_floor(intensity, op.n_meas())};
  const Vector yv = counts_as_reals(y);
  const double stop_tol = cfg.stop_rule == StopRule::budget_scaled
                              ? 0.5 / cfg.max_iters
                              : cfg.stop_tol;

  const auto t0 = Clock::now();

  Matrix m = initialize(op, y, intensity);
  Vector rates = forward(op, m);
  double f_prev;
  SolverTrace trace;
  {
    const SvdFactors f0 = svd(m);
    f_prev = detail::nll_from_rates(rates, yv, params.rate_floor) +
             cfg.lambda * f0.sigma.sum();
    trace.rows.push_back({0, f_prev, cfg.step_l,
                          numerical_rank(f0.sigma, tol::kRankRelative), 0,
                          m.minCoeff(), ms_since(t0)});
  }
  if (cfg.on_accept) cfg.on_accept(0, m, f_prev);

  double l = cfg.step_l;
  StopReason reason = StopReason::max_iters;

  for (int k = 1; k <= cfg.max_iters; ++k) {
    const Matrix grad = detail::gradient_from_rates(op, rates, yv, params.rate_floor);
    const Matrix c = m - (1.0 / l) * grad;

    int rank = 0;
    int backtracks = 0;
    Matrix cand;
    Vector cand_rates;
    double f_new = 0.0;
    bool accepted = false;
    bool fixed_point = false;
    for (;;) {
      const double tau = cfg.lambda / l;
      // Same composition as project_intensity(svt(base, tau), I), unrolled so
      // the candidate's nuclear norm falls out of the already-thresholded
      // spectrum instead of a second decomposition.
      const SvdFactors f =
          (cfg.backtrack_mode == BacktrackMode::recompute && backtracks > 0)
              ? svd(m - (1.0 / l) * grad)
              : svd(c);
      const Vector shrunk_sigma = (f.sigma.array() - tau).max(0.0).matrix();
      rank = static_cast<int>((f.sigma.array() > tau).count());
      const Matrix shrunk = f.u * shrunk_sigma.asDiagonal() * f.v.transpose();
      const double s = entry_sum_norm(shrunk);
      if (s == 0.0 || !std::isfinite(s)) {
        throw DegenerateIterateError(
            "project_intensity: iterate has zero (or non-finite) entry sum");
      }
      const bool on_target = std::abs(s - intensity) <= tol::kIntensityProjection * intensity;
      cand = on_target ? shrunk : Matrix((intensity / s) * shrunk);
      const double cand_nuclear =
          (on_target ? 1.0 : std::abs(intensity / s)) * shrunk_sigma.sum();
      cand_rates = forward(op, cand);
      f_new = detail::nll_from_rates(cand_rates, yv, params.rate_floor) +
              cfg.lambda * cand_nuclear;
      if (f_new < f_prev) {
        accepted = true;
        break;
      }
      // Exact fixed point: |dF| is below any tolerance, so the stopping rule
      // fires instead of burning the backtrack budget.
      if (bitwise_equal(cand, m)) {
        fixed_point = true;
        break;
      }
      if (backtracks >= cfg.max_backtracks) break;
      ++backtracks;
      l *= cfg.gamma;
    }
    if (fixed_point) {
      reason = StopReason::converged;
      break;
    }
    if (!accepted) {
      reason = StopReason::backtrack_exhausted;
      break;
    }

    const double delta = std::abs(f_new - f_prev);
    m = std::move(cand);
    rates = std::move(cand_rates);
    f_prev = f_new;
    trace.rows.push_back({k, f_new, l, rank, backtracks, m.minCoeff(), ms_since(t0)});
    if (cfg.on_accept) cfg.on_accept(k, m, f_new);
    if (delta < stop_tol) {
      reason = StopReason::converged;
      break;
    }
  }

  trace.stop_reason = reason;
  return {std::move(m), std::move(trace)};
}

void write_trace_csv(const SolverTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trace_csv: cannot open " + path);
  out << "iter,objective,step_L,rank,backtracks,min_entry,elapsed_ms\n";
  char buf[256];
  for (const TraceRow& row : trace.rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%d,%d,%.17g,%.3f\n", row.iter,
                  row.objective, row.step_l, row.rank, row.backtracks, row.min_entry,
                  row.elapsed_ms);
    out << buf;
  }
  if (!out) throw std::runtime_error("write_trace_csv: write failed for " + path);
}

}  // namespace pmlsv
