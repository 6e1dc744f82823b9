#pragma once

#include <cstdint>
#include <string>

#include "pmlsv/linalg.hpp"
#include "pmlsv/rng.hpp"

namespace pmlsv {

struct ImageSpec {
  int height = 0;
  int width = 0;
  int patch = 8;       // patch side; height and width must be multiples
  double alpha = 1.0;  // intensity scale, >= 1
};

/// Cut the image into patch x patch blocks and make each block a column of
/// the result (patch^2 x num_patches). Blocks are enumerated left-to-right,
/// top-to-bottom, and each block is vectorized column-major (its columns
/// stacked). This ordering is normative for file compatibility.
Matrix patchify(const Matrix& img, const ImageSpec& spec);

/// Exact inverse of patchify.
Matrix unpatchify(const Matrix& pm, const ImageSpec& spec);

/// Best rank-r approximation (top r singular triplets), no clipping.
Matrix low_rank_approx(const Matrix& m, int r);

/// Rank-r approximation made usable as a ground truth: negative entries
/// produced by the truncation are clipped to 0 and the result is rescaled to
/// the original entry sum, so it stays in the fixed-intensity set.
Matrix rank_truncate(const Matrix& m, int r);

/// ||m_true - m_est||_F^2 / I^2.
double normalized_risk(const Matrix& m_true, const Matrix& m_est, double intensity);

/// Entrywise multiply by alpha >= 1; total intensity scales by alpha.
Matrix scale_intensity(const Matrix& m, double alpha);

/// Seeded stand-in for a flare frame: a sum of `bumps` separable Gaussian
/// peaks, normalized to the requested total intensity.
struct SyntheticImageSpec {
  int height = 64;
  int width = 64;
  int bumps = 5;
  double intensity = 2.5e6;
  std::uint64_t seed = 1;
};

Matrix synthetic_flare(const SyntheticImageSpec& spec);

/// Plain-text PGM (P2). Writing scales [min, max] linearly to [0, 255] and
/// records the scaling in a comment line; reading returns raw gray values.
Matrix read_pgm(const std::string& path);
void write_pgm(const Matrix& m, const std::string& path);

/// Comma-separated grid, one matrix row per line, full double precision.
Matrix read_csv_matrix(const std::string& path);
void write_csv_matrix(const Matrix& m, const std::string& path);

}  // namespace pmlsv
