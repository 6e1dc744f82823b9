#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pmlsv/constants.hpp"
#include "pmlsv/linalg.hpp"
#include "pmlsv/rng.hpp"

namespace pmlsv {

struct SensingConfig {
  int rows = 0;                              // m1
  int cols = 0;                              // m2
  int n_meas = 0;                            // N, number of masks
  double zero_prob = defaults::kZeroProb;    // entry is 0 with this probability, else 1/N
  std::uint64_t seed = 0;
};

/// N random masks with entries in {0, 1/N}. Each mask is stored as the
/// column-major flattened positions of its nonzero entries; the shared entry
/// value 1/N is implicit. The operator is fully determined by its config:
/// regenerating from the same config reproduces it bit for bit.
struct SensingOperator {
  SensingConfig config;
  std::vector<std::vector<std::uint32_t>> masks;

  int rows() const { return config.rows; }
  int cols() const { return config.cols; }
  int n_meas() const { return config.n_meas; }
  double entry_value() const { return 1.0 / config.n_meas; }
};

/// Photon counts y with the seed that produced them.
struct MeasurementSet {
  std::vector<std::uint64_t> counts;
  std::uint64_t noise_seed = 0;
};

SensingOperator generate(const SensingConfig& config);

/// forward(m)_i = <A_i, m> = sum of m over the mask's nonzero positions / N.
Vector forward(const SensingOperator& op, const Matrix& m);

/// adjoint(w) = sum_i w_i A_i.
Matrix adjoint(const SensingOperator& op, const Vector& w);

/// Draw y_i ~ Poisson(forward(m)_i), each count from its own stream keyed by
/// (noise_seed, i). Rejects inputs that produce a negative rate.
MeasurementSet sample_poisson(const SensingOperator& op, const Matrix& m,
                              std::uint64_t noise_seed);

/// One Poisson draw; inversion for small means, transformed rejection
/// (Hormann PTRS) for large ones.
std::uint64_t poisson_sample(double mean, rng::Stream& stream);

/// Checks sum_i forward(m)_i <= entry_sum_norm(m) + tol on `trials` random
/// nonnegative matrices.
bool verify_flux_preserving(const SensingOperator& op, int trials, std::uint64_t seed);

/// Checks forward(m)_i >= 0 on `trials` random nonnegative matrices.
bool verify_positivity_preserving(const SensingOperator& op, int trials, std::uint64_t seed);

/// For masks with at least one nonzero entry, forward of the constant-c
/// matrix must be >= c/N.
bool verify_rate_lower_bound(const SensingOperator& op, double c);

/// Checks <forward(m), w> == <m, adjoint(w)> on random pairs, to a relative
/// tolerance of tol::kAdjointIdentity.
bool verify_adjoint_identity(const SensingOperator& op, int pairs, std::uint64_t seed);

/// Operator persistence. Only the config is stored (keys m1, m2, n_meas,
/// zero_prob, seed); masks are regenerated, never serialized.
void save_config(const SensingConfig& config, const std::string& path);
SensingConfig load_config(const std::string& path);

Vector counts_as_reals(const MeasurementSet& y);

}  // namespace pmlsv
