#include "pmlsv/poisson_model.hpp"

#include <cmath>

namespace pmlsv {

namespace {

void check_inputs(const SensingOperator& op, const MeasurementSet& y, const Matrix& m) {
  if (m.rows() != op.rows() || m.cols() != op.cols()) {
    throw std::invalid_argument("poisson model: matrix shape does not match the operator");
  }
  if (static_cast<int>(y.counts.size()) != op.n_meas()) {
    throw std::invalid_argument("poisson model: measurement count does not match N");
  }
}

void check_params(const ObjectiveParams& params) {
  if (!(params.rate_floor > 0.0)) {
    throw std::invalid_argument("poisson model: rate_floor must be positive");
  }
  if (!(params.lambda >= 0.0)) {
    throw std::invalid_argument("poisson model: lambda must be nonnegative");
  }
}

}  // namespace

double default_rate_floor(double intensity, int n_meas) {
  if (!(intensity > 0.0) || n_meas < 1) {
    throw std::invalid_argument("default_rate_floor: need intensity > 0 and N >= 1");
  }
  return defaults::kRateFloorScale * (intensity / n_meas);
}

namespace detail {

double nll_from_rates(const Vector& rates, const Vector& y, double rate_floor) {
  // Neumaier-compensated sum; objective differences near convergence are many
  // orders below the objective itself.
  double sum = 0.0;
  double comp = 0.0;
  auto add = [&](double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  };
  for (Eigen::Index j = 0; j < rates.size(); ++j) {
    const double r = std::max(rates[j], rate_floor);
    add(r);
    if (y[j] != 0.0) add(-y[j] * std::log(r));
  }
  return sum + comp;
}

Matrix gradient_from_rates(const SensingOperator& op, const Vector& rates,
                           const Vector& y, double rate_floor) {
  Vector g(rates.size());
  for (Eigen::Index j = 0; j < rates.size(); ++j) {
    g[j] = 1.0 - y[j] / std::max(rates[j], rate_floor);
  }
  return adjoint(op, g);
}

}  // namespace detail

double neg_log_likelihood(const SensingOperator& op, const MeasurementSet& y,
                          const Matrix& m, const ObjectiveParams& params) {
  check_inputs(op, y, m);
  check_params(params);
  return detail::nll_from_rates(forward(op, m), counts_as_reals(y), params.rate_floor);
}

Matrix gradient(const SensingOperator& op, const MeasurementSet& y,
                const Matrix& m, const ObjectiveParams& params) {
  check_inputs(op, y, m);
  check_params(params);
  return detail::gradient_from_rates(op, forward(op, m), counts_as_reals(y),
                                     params.rate_floor);
}

double objective(const SensingOperator& op, const MeasurementSet& y,
                 const Matrix& m, const ObjectiveParams& params) {
  return neg_log_likelihood(op, y, m, params) + params.lambda * nuclear_norm(m);
}

}  // namespace pmlsv
