#include "pmlsv/imaging.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pmlsv {

namespace {

constexpr std::uint64_t kTagFlare = 0x666c6172ULL;

void check_image_spec(const ImageSpec& spec) {
  if (spec.height < 1 || spec.width < 1 || spec.patch < 1) {
    throw std::invalid_argument("imaging: dimensions and patch must be positive");
  }
  if (spec.height % spec.patch != 0 || spec.width % spec.patch != 0) {
    throw std::invalid_argument(
        "imaging: height and width must be multiples of the patch side");
  }
}

}  // namespace

Matrix patchify(const Matrix& img, const ImageSpec& spec) {
  check_image_spec(spec);
  if (img.rows() != spec.height || img.cols() != spec.width) {
    throw std::invalid_argument("patchify: image shape does not match the spec");
  }
  const int t = spec.patch;
  const int block_rows = spec.height / t;
  const int block_cols = spec.width / t;
  Matrix out(t * t, block_rows * block_cols);
  for (int br = 0; br < block_rows; ++br) {
    for (int bc = 0; bc < block_cols; ++bc) {
      const int q = br * block_cols + bc;
      for (int j = 0; j < t; ++j) {
        out.col(q).segment(j * t, t) = img.block(br * t, bc * t, t, t).col(j);
      }
    }
  }
  return out;
}

Matrix unpatchify(const Matrix& pm, const ImageSpec& spec) {
  check_image_spec(spec);
  const int t = spec.patch;
  const int block_rows = spec.height / t;
  const int block_cols = spec.width / t;
  if (pm.rows() != t * t || pm.cols() != block_rows * block_cols) {
    throw std::invalid_argument("unpatchify: patch matrix shape does not match the spec");
  }
  Matrix img(spec.height, spec.width);
  for (int br = 0; br < block_rows; ++br) {
    for (int bc = 0; bc < block_cols; ++bc) {
      const int q = br * block_cols + bc;
      for (int j = 0; j < t; ++j) {
        img.block(br * t, bc * t, t, t).col(j) = pm.col(q).segment(j * t, t);
      }
    }
  }
  return img;
}

Matrix low_rank_approx(const Matrix& m, int r) {
  if (r < 1) {
    throw std::invalid_argument("low_rank_approx: rank must be >= 1");
  }
  const SvdFactors f = svd(m);
  const Eigen::Index k = std::min<Eigen::Index>(r, f.sigma.size());
  return f.u.leftCols(k) * f.sigma.head(k).asDiagonal() * f.v.leftCols(k).transpose();
}

Matrix rank_truncate(const Matrix& m, int r) {
  const double total = entry_sum_norm(m);
  Matrix t = low_rank_approx(m, r).cwiseMax(0.0);
  const double s = entry_sum_norm(t);
  if (s == 0.0) {
    if (total == 0.0) return Matrix::Zero(m.rows(), m.cols());
    throw std::runtime_error("rank_truncate: truncation collapsed to zero, cannot rescale");
  }
  return (total / s) * t;
}

double normalized_risk(const Matrix& m_true, const Matrix& m_est, double intensity) {
  if (m_true.rows() != m_est.rows() || m_true.cols() != m_est.cols()) {
    throw std::invalid_argument("normalized_risk: shapes differ");
  }
  if (!(intensity > 0.0)) {
    throw std::invalid_argument("normalized_risk: intensity must be positive");
  }
  return (m_true - m_est).squaredNorm() / (intensity * intensity);
}

Matrix scale_intensity(const Matrix& m, double alpha) {
  if (!(alpha >= 1.0)) {
    throw std::invalid_argument("scale_intensity: alpha must be >= 1");
  }
  return alpha * m;
}

Matrix synthetic_flare(const SyntheticImageSpec& spec) {
  if (spec.height < 1 || spec.width < 1 || spec.bumps < 1) {
    throw std::invalid_argument("synthetic_flare: dimensions and bumps must be positive");
  }
  if (!(spec.intensity > 0.0)) {
    throw std::invalid_argument("synthetic_flare: intensity must be positive");
  }
  rng::Stream s(rng::key(spec.seed, {kTagFlare}));
  Matrix img = Matrix::Zero(spec.height, spec.width);
  Vector gy(spec.height), gx(spec.width);
  // Stratified centers keep the peaks mostly disjoint, so each contributes a
  // comparable singular component instead of merging into one dominant blob.
  int grid = 1;
  while (grid * grid < spec.bumps) ++grid;
  for (int k = 0; k < spec.bumps; ++k) {
    const int cell_r = k / grid;
    const int cell_c = k % grid;
    const double cy =
        ((cell_r + 0.25 + 0.5 * s.next_unit()) / grid) * (spec.height - 1);
    const double cx =
        ((cell_c + 0.25 + 0.5 * s.next_unit()) / grid) * (spec.width - 1);
    const double sy = (0.04 + 0.05 * s.next_unit()) * spec.height / grid * 2.0;
    const double sx = (0.04 + 0.05 * s.next_unit()) * spec.width / grid * 2.0;
    const double amp = 0.7 + 0.8 * s.next_unit();
    for (int i = 0; i < spec.height; ++i) {
      const double d = (i - cy) / sy;
      gy[i] = std::exp(-0.5 * d * d);
    }
    for (int j = 0; j < spec.width; ++j) {
      const double d = (j - cx) / sx;
      gx[j] = std::exp(-0.5 * d * d);
    }
    img += amp * gy * gx.transpose();
  }
  return (spec.intensity / img.sum()) * img;
}

namespace {

// Next whitespace-separated token, skipping '#' comments.
bool next_token(std::istream& in, std::string& tok) {
  tok.clear();
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {}
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return true;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return !tok.empty();
}

long parse_long(const std::string& tok, const char* what) {
  try {
    std::size_t used = 0;
    const long v = std::stol(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(std::string("pgm: bad ") + what + " '" + tok + "'");
  }
}

}  // namespace

Matrix read_pgm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_pgm: cannot open " + path);
  std::string tok;
  if (!next_token(in, tok) || tok != "P2") {
    throw std::runtime_error("read_pgm: " + path + " is not a plain (P2) PGM file");
  }
  if (!next_token(in, tok)) throw std::runtime_error("read_pgm: truncated header");
  const long w = parse_long(tok, "width");
  if (!next_token(in, tok)) throw std::runtime_error("read_pgm: truncated header");
  const long h = parse_long(tok, "height");
  if (!next_token(in, tok)) throw std::runtime_error("read_pgm: truncated header");
  const long maxval = parse_long(tok, "maxval");
  if (w < 1 || h < 1 || maxval < 1 || maxval > 65535) {
    throw std::runtime_error("read_pgm: invalid header in " + path);
  }
  Matrix m(h, w);
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      if (!next_token(in, tok)) throw std::runtime_error("read_pgm: truncated pixel data");
      const long v = parse_long(tok, "pixel");
      if (v < 0 || v > maxval) throw std::runtime_error("read_pgm: pixel out of range");
      m(r, c) = static_cast<double>(v);
    }
  }
  return m;
}

void write_pgm(const Matrix& m, const std::string& path) {
  if (m.rows() < 1 || m.cols() < 1) {
    throw std::invalid_argument("write_pgm: matrix must be nonempty");
  }
  if (!is_finite(m)) {
    throw std::invalid_argument("write_pgm: matrix has NaN or Inf entries");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_pgm: cannot open " + path);
  const double lo = m.minCoeff();
  const double hi = m.maxCoeff();
  char buf[96];
  out << "P2\n";
  std::snprintf(buf, sizeof(buf), "# intensity-scale min=%.17g max=%.17g\n", lo, hi);
  out << buf;
  out << m.cols() << " " << m.rows() << "\n255\n";
  const double span = hi - lo;
  int line_len = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const int v = span > 0.0
                        ? static_cast<int>(std::lround((m(r, c) - lo) / span * 255.0))
                        : 0;
      const int n = std::snprintf(buf, sizeof(buf), "%d", v);
      if (line_len > 0 && line_len + 1 + n > 70) {
        out << "\n";
        line_len = 0;
      }
      if (line_len > 0) {
        out << " ";
        ++line_len;
      }
      out << buf;
      line_len += n;
    }
  }
  out << "\n";
  if (!out) throw std::runtime_error("write_pgm: write failed for " + path);
}

Matrix read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_csv_matrix: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error("read_csv_matrix: bad cell '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error("read_csv_matrix: ragged rows in " + path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("read_csv_matrix: " + path + " is empty");
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
  }
  return m;
}

void write_csv_matrix(const Matrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv_matrix: cannot open " + path);
  char buf[64];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
      if (c > 0) out << ",";
      out << buf;
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write_csv_matrix: write failed for " + path);
}

}  // namespace pmlsv
