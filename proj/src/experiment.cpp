#include "pmlsv/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace pmlsv {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kTagOpSeed = 0x6f706572ULL;
constexpr std::uint64_t kTagNoiseSeed = 0x706f6973ULL;

std::uint64_t derive_seed(std::uint64_t tag, std::uint64_t base_seed, int n_meas,
                          int rep) {
  return rng::key(base_seed, {tag, static_cast<std::uint64_t>(n_meas),
                              static_cast<std::uint64_t>(rep)});
}

std::string fmt_g(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string fmt_full(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string run_stem(const RunResult& r) {
  std::ostringstream os;
  os << "run_n" << r.n_meas << "_a" << fmt_g(r.alpha) << "_l" << fmt_g(r.lambda)
     << "_r" << r.rep;
  return os.str();
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

std::uint64_t derive_op_seed(std::uint64_t base_seed, int n_meas, int rep) {
  return derive_seed(kTagOpSeed, base_seed, n_meas, rep);
}

std::uint64_t derive_noise_seed(std::uint64_t base_seed, int n_meas, int rep) {
  return derive_seed(kTagNoiseSeed, base_seed, n_meas, rep);
}

void validate_spec(const ExperimentSpec& spec) {
  if (spec.n_meas_list.empty() || spec.alphas.empty() || spec.lambdas.empty()) {
    throw std::invalid_argument("experiment: every grid list must be nonempty");
  }
  if (spec.repetitions < 1) {
    throw std::invalid_argument("experiment: repetitions must be >= 1");
  }
  if (spec.truth_rank < 1) {
    throw std::invalid_argument("experiment: truth rank must be >= 1");
  }
  if (spec.patch < 1) {
    throw std::invalid_argument("experiment: patch must be >= 1");
  }
  for (const int n : spec.n_meas_list) {
    if (n < 1) throw std::invalid_argument("experiment: N values must be >= 1");
  }
  for (const double a : spec.alphas) {
    if (!(a >= 1.0)) throw std::invalid_argument("experiment: alpha values must be >= 1");
  }
  for (const double l : spec.lambdas) {
    if (!(l >= 0.0)) {
      throw std::invalid_argument("experiment: lambda values must be nonnegative");
    }
  }
  if (!(spec.zero_prob >= 0.0) || spec.zero_prob >= 1.0) {
    throw std::invalid_argument("experiment: zero_prob must lie in [0, 1)");
  }
  if (spec.workers < 0) {
    throw std::invalid_argument("experiment: workers must be >= 0");
  }
}

Matrix load_base_image(const ExperimentSpec& spec) {
  if (spec.image_path.empty()) return synthetic_flare(spec.synthetic);
  if (has_suffix(spec.image_path, ".csv")) return read_csv_matrix(spec.image_path);
  return read_pgm(spec.image_path);
}

RunResult run_cell(const ExperimentSpec& spec, const Matrix& base_image, int n_meas,
                   double alpha, double lambda, int rep) {
  RunResult r;
  r.n_meas = n_meas;
  r.alpha = alpha;
  r.lambda = lambda;
  r.rep = rep;
  r.op_seed = derive_op_seed(spec.base_seed, n_meas, rep);
  r.noise_seed = derive_noise_seed(spec.base_seed, n_meas, rep);
  const auto t0 = Clock::now();
  try {
    ImageSpec ispec{static_cast<int>(base_image.rows()),
                    static_cast<int>(base_image.cols()), spec.patch, alpha};
    const Matrix truth =
        rank_truncate(patchify(scale_intensity(base_image, alpha), ispec), spec.truth_rank);
    const double intensity = entry_sum_norm(truth);

    SensingConfig scfg;
    scfg.rows = static_cast<int>(truth.rows());
    scfg.cols = static_cast<int>(truth.cols());
    scfg.n_meas = n_meas;
    scfg.zero_prob = spec.zero_prob;
    scfg.seed = r.op_seed;
    const SensingOperator op = generate(scfg);
    const MeasurementSet y = sample_poisson(op, truth, r.noise_seed);

    SolverConfig solver_cfg = spec.solver;
    solver_cfg.lambda = lambda;
    solver_cfg.target_intensity = intensity;
    SolveResult sol = solve(op, y, solver_cfg);

    r.iters = static_cast<int>(sol.trace.rows.size()) - 1;
    r.stop_reason = to_string(sol.trace.stop_reason);
    r.risk_raw = normalized_risk(truth, sol.estimate, intensity);
    r.risk_clipped = normalized_risk(truth, sol.estimate.cwiseMax(0.0), intensity);
    r.ok = true;

    if (spec.write_artifacts) {
      const fs::path dir = fs::path(spec.out_dir) / "runs";
      fs::create_directories(dir);
      const std::string stem = run_stem(r);
      write_trace_csv(sol.trace, (dir / (stem + "_trace.csv")).string());
      write_pgm(unpatchify(sol.estimate.cwiseMax(0.0), ispec),
                (dir / (stem + "_recon.pgm")).string());
    }
  } catch (const std::exception& e) {
    r.ok = false;
    r.note = e.what();
    for (char& c : r.note) {
      if (c == ',' || c == '\n') c = ';';
    }
  }
  r.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  return r;
}

RunResult run_single(const ExperimentSpec& spec, int n_meas, double alpha,
                     double lambda, int rep) {
  validate_spec(spec);
  return run_cell(spec, load_base_image(spec), n_meas, alpha, lambda, rep);
}

std::vector<RunResult> run_sweep(const ExperimentSpec& spec) {
  validate_spec(spec);
  const Matrix base_image = load_base_image(spec);

  struct Cell {
    int n;
    double alpha;
    double lambda;
    int rep;
  };
  std::vector<Cell> cells;
  for (const int n : spec.n_meas_list) {
    for (const double a : spec.alphas) {
      for (const double l : spec.lambdas) {
        for (int rep = 0; rep < spec.repetitions; ++rep) cells.push_back({n, a, l, rep});
      }
    }
  }

  std::vector<RunResult> rows(cells.size());
  unsigned workers = spec.workers > 0 ? static_cast<unsigned>(spec.workers)
                                      : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(cells.size()));

  std::atomic<std::size_t> next{0};
  auto drain = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const Cell& c = cells[i];
      rows[i] = run_cell(spec, base_image, c.n, c.alpha, c.lambda, c.rep);
    }
  };
  if (workers <= 1) {
    drain();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(drain);
    for (auto& t : pool) t.join();
  }

  fs::create_directories(spec.out_dir);
  write_results_csv(rows, (fs::path(spec.out_dir) / "results.csv").string());
  return rows;
}

std::string format_result_row(const RunResult& r, bool include_wall_ms) {
  std::ostringstream os;
  os << r.n_meas << "," << fmt_full(r.alpha) << "," << fmt_full(r.lambda) << ","
     << r.rep << "," << r.op_seed << "," << r.noise_seed << ","
     << (r.ok ? "ok" : "failed") << "," << r.iters << "," << r.stop_reason << ","
     << fmt_full(r.risk_raw) << "," << fmt_full(r.risk_clipped);
  if (include_wall_ms) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", r.wall_ms);
    os << "," << buf;
  } else {
    os << ",";
  }
  os << "," << r.note;
  return os.str();
}

void write_results_csv(const std::vector<RunResult>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_results_csv: cannot open " + path);
  out << "n_meas,alpha,lambda,rep,op_seed,noise_seed,status,iters,stop_reason,"
         "risk_raw,risk_clipped,wall_ms,note\n";
  for (const RunResult& r : rows) out << format_result_row(r, true) << "\n";
  if (!out) throw std::runtime_error("write_results_csv: write failed for " + path);
}

std::vector<RunResult> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_results_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("read_results_csv: " + path + " is empty");
  }
  std::vector<RunResult> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() < 12) {
      throw std::runtime_error("read_results_csv: malformed row '" + line + "'");
    }
    RunResult r;
    try {
      r.n_meas = std::stoi(f[0]);
      r.alpha = std::stod(f[1]);
      r.lambda = std::stod(f[2]);
      r.rep = std::stoi(f[3]);
      r.op_seed = std::stoull(f[4]);
      r.noise_seed = std::stoull(f[5]);
      r.ok = f[6] == "ok";
      r.iters = std::stoi(f[7]);
      r.stop_reason = f[8];
      r.risk_raw = std::stod(f[9]);
      r.risk_clipped = std::stod(f[10]);
      r.wall_ms = f[11].empty() ? 0.0 : std::stod(f[11]);
      r.note = f.size() > 12 ? f[12] : "";
    } catch (const std::exception&) {
      throw std::runtime_error("read_results_csv: malformed row '" + line + "'");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

SweepAxis parse_axis(const std::string& name) {
  if (name == "n_meas") return SweepAxis::n_meas;
  if (name == "alpha") return SweepAxis::alpha;
  if (name == "lambda") return SweepAxis::lambda;
  throw std::invalid_argument("unknown axis '" + name +
                              "' (expected n_meas, alpha or lambda)");
}

void emit_plot_data(const std::string& results_csv, SweepAxis axis,
                    const std::string& out_path) {
  const std::vector<RunResult> rows = read_results_csv(results_csv);
  std::map<double, std::vector<double>> groups;
  for (const RunResult& r : rows) {
    if (!r.ok) continue;
    double x = 0.0;
    switch (axis) {
      case SweepAxis::n_meas: x = r.n_meas; break;
      case SweepAxis::alpha: x = r.alpha; break;
      case SweepAxis::lambda: x = r.lambda; break;
    }
    groups[x].push_back(r.risk_clipped);
  }
  if (groups.empty()) {
    throw std::runtime_error("emit_plot_data: no successful rows in " + results_csv);
  }
  const char* axis_name = axis == SweepAxis::n_meas   ? "n_meas"
                          : axis == SweepAxis::alpha  ? "alpha"
                                                      : "lambda";
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("emit_plot_data: cannot open " + out_path);
  out << axis_name << ",median_risk,min_risk,max_risk\n";
  for (auto& [x, risks] : groups) {
    std::sort(risks.begin(), risks.end());
    const std::size_t n = risks.size();
    const double median =
        n % 2 == 1 ? risks[n / 2] : 0.5 * (risks[n / 2 - 1] + risks[n / 2]);
    out << fmt_full(x) << "," << fmt_full(median) << "," << fmt_full(risks.front())
        << "," << fmt_full(risks.back()) << "\n";
  }
  if (!out) throw std::runtime_error("emit_plot_data: write failed for " + out_path);
}

}  // namespace pmlsv
