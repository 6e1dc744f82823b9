#pragma once

#include "pmlsv/sensing.hpp"

namespace pmlsv {

struct ObjectiveParams {
  double lambda = 0.0;        // nuclear-norm weight
  double rate_floor = 1e-12;  // lower clamp applied to measured rates
};

/// Default floor: defaults::kRateFloorScale * (I / N), i.e. twelve orders of
/// magnitude below the expected per-measurement rate. Keeps log(rate) finite
/// when a mask misses the support of m without biasing healthy instances.
double default_rate_floor(double intensity, int n_meas);

/// f(m) = sum_j (r_j - y_j log r_j) with r_j = max(forward(m)_j, floor).
/// The measurement-only constant sum_j log(y_j!) is dropped, so values are
/// comparable only across evaluations with the same y.
double neg_log_likelihood(const SensingOperator& op, const MeasurementSet& y,
                          const Matrix& m, const ObjectiveParams& params);

/// grad f(m) = adjoint(g) with g_j = 1 - y_j / r_j, rates floored as above.
Matrix gradient(const SensingOperator& op, const MeasurementSet& y,
                const Matrix& m, const ObjectiveParams& params);

/// F(m) = f(m) + lambda * ||m||_*.
double objective(const SensingOperator& op, const MeasurementSet& y,
                 const Matrix& m, const ObjectiveParams& params);

namespace detail {

// Shared kernels so the solver can reuse cached rates and still produce
// bit-identical values to the public entry points.
double nll_from_rates(const Vector& rates, const Vector& y, double rate_floor);
Matrix gradient_from_rates(const SensingOperator& op, const Vector& rates,
                           const Vector& y, double rate_floor);

}  // namespace detail

}  // namespace pmlsv
