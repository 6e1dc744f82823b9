#include "pmlsv/sensing.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pmlsv {

namespace {

// Stream tags keep the independent uses of one seed from colliding.
constexpr std::uint64_t kTagMask = 0x6d61736bULL;    // mask entries
constexpr std::uint64_t kTagNoise = 0x6e6f6973ULL;   // poisson draws
constexpr std::uint64_t kTagTrial = 0x7472696cULL;   // verification inputs

void check_config(const SensingConfig& c) {
  if (c.rows < 1 || c.cols < 1) {
    throw std::invalid_argument("sensing: mask dimensions must be positive");
  }
  if (c.n_meas < 1) {
    throw std::invalid_argument("sensing: need at least one measurement");
  }
  if (!(c.zero_prob >= 0.0) || c.zero_prob >= 1.0) {
    throw std::invalid_argument("sensing: zero_prob must lie in [0, 1)");
  }
  const std::uint64_t cells =
      static_cast<std::uint64_t>(c.rows) * static_cast<std::uint64_t>(c.cols);
  if (cells > 0xffffffffULL) {
    throw std::invalid_argument("sensing: mask has too many entries");
  }
}

void check_shape(const SensingOperator& op, const Matrix& m) {
  if (m.rows() != op.rows() || m.cols() != op.cols()) {
    throw std::invalid_argument("sensing: matrix shape does not match the operator");
  }
}

Matrix random_nonnegative(int rows, int cols, std::uint64_t key_value) {
  rng::Stream s(key_value);
  Matrix m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = s.next_unit();
  }
  return m;
}

}  // namespace

SensingOperator generate(const SensingConfig& config) {
  check_config(config);
  SensingOperator op;
  op.config = config;
  op.masks.resize(static_cast<std::size_t>(config.n_meas));
  const double p = config.zero_prob;
  for (int i = 0; i < config.n_meas; ++i) {
    auto& mask = op.masks[static_cast<std::size_t>(i)];
    // Entry (r, c) is decided by its own key, so the layout is independent of
    // traversal order; iterate column-major to keep positions sorted for the
    // apply loops.
    for (int c = 0; c < config.cols; ++c) {
      for (int r = 0; r < config.rows; ++r) {
        const double u = rng::unit_at(rng::key(
            config.seed, {kTagMask, static_cast<std::uint64_t>(i),
                          static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(c)}));
        if (u >= p) {
          mask.push_back(static_cast<std::uint32_t>(c * config.rows + r));
        }
      }
    }
  }
  return op;
}

Vector forward(const SensingOperator& op, const Matrix& m) {
  check_shape(op, m);
  const double* data = m.data();
  const double w = op.entry_value();
  Vector out(op.n_meas());
  for (int i = 0; i < op.n_meas(); ++i) {
    double acc = 0.0;
    for (const std::uint32_t pos : op.masks[static_cast<std::size_t>(i)]) {
      acc += data[pos];
    }
    out[i] = w * acc;
  }
  return out;
}

Matrix adjoint(const SensingOperator& op, const Vector& w) {
  if (w.size() != op.n_meas()) {
    throw std::invalid_argument("sensing: weight vector length does not match N");
  }
  Matrix out = Matrix::Zero(op.rows(), op.cols());
  double* data = out.data();
  const double v = op.entry_value();
  for (int i = 0; i < op.n_meas(); ++i) {
    const double wi = v * w[i];
    if (wi == 0.0) continue;
    for (const std::uint32_t pos : op.masks[static_cast<std::size_t>(i)]) {
      data[pos] += wi;
    }
  }
  return out;
}

std::uint64_t poisson_sample(double mean, rng::Stream& stream) {
  if (!(mean >= 0.0)) {
    throw std::invalid_argument("poisson_sample: mean must be nonnegative");
  }
  if (mean == 0.0) return 0;
  if (mean < 10.0) {
    // Inversion by products of uniforms.
    const double limit = std::exp(-mean);
    std::uint64_t count = 0;
    double prod = 1.0;
    for (;;) {
      prod *= stream.next_unit();
      if (prod <= limit) return count;
      ++count;
    }
  }
  // Hormann's PTRS transformed rejection.
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = stream.next_unit() - 0.5;
    const double v = stream.next_unit();
    const double us = 0.5 - std::abs(u);
    if (us <= 0.0 || v <= 0.0) continue;
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        k * loglam - mean - std::lgamma(k + 1.0)) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

MeasurementSet sample_poisson(const SensingOperator& op, const Matrix& m,
                              std::uint64_t noise_seed) {
  const Vector rates = forward(op, m);
  MeasurementSet y;
  y.noise_seed = noise_seed;
  y.counts.resize(static_cast<std::size_t>(op.n_meas()));
  for (int i = 0; i < op.n_meas(); ++i) {
    if (!(rates[i] >= 0.0)) {
      throw std::invalid_argument("sample_poisson: negative rate, input is not physical");
    }
    rng::Stream stream(rng::key(noise_seed, {kTagNoise, static_cast<std::uint64_t>(i)}));
    y.counts[static_cast<std::size_t>(i)] = poisson_sample(rates[i], stream);
  }
  return y;
}

bool verify_flux_preserving(const SensingOperator& op, int trials, std::uint64_t seed) {
  if (trials < 1) {
    throw std::invalid_argument("verify_flux_preserving: trials must be >= 1");
  }
  for (int t = 0; t < trials; ++t) {
    const Matrix m = random_nonnegative(
        op.rows(), op.cols(), rng::key(seed, {kTagTrial, static_cast<std::uint64_t>(t)}));
    if (forward(op, m).sum() > entry_sum_norm(m) + tol::kFluxPreserving) return false;
  }
  return true;
}

bool verify_positivity_preserving(const SensingOperator& op, int trials, std::uint64_t seed) {
  if (trials < 1) {
    throw std::invalid_argument("verify_positivity_preserving: trials must be >= 1");
  }
  for (int t = 0; t < trials; ++t) {
    const Matrix m = random_nonnegative(
        op.rows(), op.cols(), rng::key(seed, {kTagTrial, static_cast<std::uint64_t>(t)}));
    if ((forward(op, m).array() < 0.0).any()) return false;
  }
  return true;
}

bool verify_rate_lower_bound(const SensingOperator& op, double c) {
  if (!(c > 0.0)) {
    throw std::invalid_argument("verify_rate_lower_bound: c must be positive");
  }
  const Matrix m = Matrix::Constant(op.rows(), op.cols(), c);
  const Vector rates = forward(op, m);
  const double bound = c / op.n_meas();
  for (int i = 0; i < op.n_meas(); ++i) {
    if (op.masks[static_cast<std::size_t>(i)].empty()) continue;
    if (rates[i] < bound * (1.0 - 1e-12)) return false;
  }
  return true;
}

bool verify_adjoint_identity(const SensingOperator& op, int pairs, std::uint64_t seed) {
  if (pairs < 1) {
    throw std::invalid_argument("verify_adjoint_identity: pairs must be >= 1");
  }
  for (int t = 0; t < pairs; ++t) {
    const Matrix m = random_nonnegative(
        op.rows(), op.cols(), rng::key(seed, {kTagTrial, 2 * static_cast<std::uint64_t>(t)}));
    rng::Stream s(rng::key(seed, {kTagTrial, 2 * static_cast<std::uint64_t>(t) + 1}));
    Vector w(op.n_meas());
    for (int i = 0; i < op.n_meas(); ++i) w[i] = 2.0 * s.next_unit() - 1.0;
    const double lhs = forward(op, m).dot(w);
    const double rhs = (m.array() * adjoint(op, w).array()).sum();
    const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
    if (std::abs(lhs - rhs) > tol::kAdjointIdentity * scale) return false;
  }
  return true;
}

void save_config(const SensingConfig& config, const std::string& path) {
  check_config(config);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_config: cannot open " + path);
  char buf[64];
  out << "m1 = " << config.rows << "\n";
  out << "m2 = " << config.cols << "\n";
  out << "n_meas = " << config.n_meas << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", config.zero_prob);
  out << "zero_prob = " << buf << "\n";
  out << "seed = " << config.seed << "\n";
  if (!out) throw std::runtime_error("save_config: write failed for " + path);
}

SensingConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_config: cannot open " + path);
  auto trim = [](std::string s) {
    const char* ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
  };
  SensingConfig config;
  std::string line;
  while (std::getline(in, line)) {
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("load_config: malformed line '" + line + "'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    try {
      if (key == "m1") {
        config.rows = std::stoi(value);
      } else if (key == "m2") {
        config.cols = std::stoi(value);
      } else if (key == "n_meas") {
        config.n_meas = std::stoi(value);
      } else if (key == "zero_prob") {
        config.zero_prob = std::stod(value);
      } else if (key == "seed") {
        config.seed = std::stoull(value);
      } else {
        throw std::runtime_error("load_config: unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw std::runtime_error("load_config: bad value for '" + key + "'");
    }
  }
  check_config(config);
  return config;
}

Vector counts_as_reals(const MeasurementSet& y) {
  Vector v(static_cast<Eigen::Index>(y.counts.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = static_cast<double>(y.counts[static_cast<std::size_t>(i)]);
  }
  return v;
}

}  // namespace pmlsv
