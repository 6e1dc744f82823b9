#pragma once

// Central home for numerical tolerances and algorithm defaults so that the
// library, the CLI and the tests all agree on one set of values.

namespace pmlsv::tol {

// SVD factor quality: Frobenius deviation of U^T U (and V^T V) from identity.
inline constexpr double kSvdOrthonormal = 1e-10;
// Relative Frobenius error of U * diag(sigma) * V^T against the source matrix.
inline constexpr double kSvdReconstruction = 1e-10;
// Relative tolerance for <forward(m), w> == <m, adjoint(w)>.
inline constexpr double kAdjointIdentity = 1e-12;
// Slack allowed when checking sum(forward(m)) <= sum(m) on random inputs.
inline constexpr double kFluxPreserving = 1e-9;
// Relative band around the target intensity inside which a matrix is treated
// as already projected (makes the projection idempotent bit-for-bit).
inline constexpr double kIntensityProjection = 1e-9;
// Singular values below kRankRelative * sigma_max do not count toward rank.
inline constexpr double kRankRelative = 1e-12;

}  // namespace pmlsv::tol

namespace pmlsv::defaults {

inline constexpr double kLambda = 0.002;       // nuclear-norm weight
inline constexpr double kStepL = 1e-5;         // initial step parameter L
inline constexpr double kGamma = 1.1;          // L growth factor on backtrack
inline constexpr int kMaxIters = 2500;         // iteration budget (NOI)
inline constexpr int kMaxBacktracks = 200;     // consecutive failed retries before giving up
inline constexpr double kZeroProb = 0.5;       // mask entry is 0 with this probability
inline constexpr int kPatch = 8;               // patch side in pixels
// Rate floor scale: floors are kRateFloorScale * (I / N).
inline constexpr double kRateFloorScale = 1e-12;

}  // namespace pmlsv::defaults
