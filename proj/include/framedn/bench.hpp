#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "framedn/types.hpp"

namespace framedn {

/// Error statistic recorded per Monte-Carlo replicate.
enum class Metric { relativeSquared, rawL2, rawL2Squared };

double metric_value(Metric metric, const VecX& fhat, const VecX& f);

/// Gabor lattice parameters for the benchmark frame.
struct GaborSpec {
  Index windowLength = 64;
  Index hop = 32;
  Index channels = 64;
};

inline constexpr double kDefaultRidge = 3.1622776601683794e-05;  // 10^-4.5

/// Everything a table run needs. A fixed (config, seed) pair fully
/// determines the output bytes.
struct ExperimentConfig {
  std::vector<std::string> signals;  // empty = the runner's default set
  std::string wavPath;               // when set, replaces the signal list
  Index wavOffset = 0;
  Index n = 1280;
  std::vector<double> snrList = {1.0, 3.0, 5.0};
  int runs = 100;
  std::uint64_t seed = 8725;
  GaborSpec gabor;
  int haarLevels = 3;
  std::vector<std::string> estimators;  // empty = the runner's default set
  double ridge = kDefaultRidge;
  std::string outputPath;  // empty = stdout
  std::string plotPath;    // empty = no plot data
  Metric metric = Metric::relativeSquared;
  bool timing = false;               // populate the wall_ms column
  std::optional<double> beta;        // exponential-weights temperature
};

/// Reads `key = value` lines into cfg. Blank lines and lines starting with
/// '#' are skipped. Keys mirror the CLI flag names. Unknown keys throw
/// ConfigError; unreadable files throw IoError.
void load_config_file(ExperimentConfig& cfg, const std::string& path);

/// Parses one key/value pair using the config-file vocabulary.
void set_config(ExperimentConfig& cfg, const std::string& key,
                const std::string& value);

struct ResultRow {
  std::string signal;
  double snr = 0.0;
  std::string estimator;
  double meanError = 0.0;
  double stdError = 0.0;
  VecX meanWeights;      // filled on aggregation rows only
  double wallMs = -1.0;  // negative = not recorded
  std::string status;    // nonempty when an ordering check flagged this row
};

using Denoiser = std::function<VecX(const VecX& x)>;

struct McResult {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Runs `estimator` on `runs` noisy draws x_r = f + sigma g_r, where g_r is
/// standard normal with the sub-stream key derived from (seed, r), and
/// returns the sample mean and standard deviation of the chosen metric.
/// Deterministic in (seed, runs). An estimator failure is rethrown with the
/// replicate index attached.
McResult mc_risk(const Denoiser& estimator, const VecX& f, double sigma,
                 int runs, std::uint64_t seed,
                 Metric metric = Metric::relativeSquared);

/// Gabor-frame benchmark of the four linear-gain estimators
/// IDEAL_U, IDEAL_I, EMP_U, EMP_I over signals x SNR values.
std::vector<ResultRow> run_table1(const ExperimentConfig& cfg);

/// Gabor-frame benchmark of the thresholding estimators
/// SOFT_U, SOFT_I, VISU_U, VISU_I.
std::vector<ResultRow> run_table2(const ExperimentConfig& cfg);

/// Two-basis (DCT + Haar) benchmark: per-basis soft thresholding at the
/// orthonormal universal threshold, the equal-weight average, and the
/// optimized aggregation with its mean weights.
std::vector<ResultRow> run_table3(const ExperimentConfig& cfg);

/// CSV with header signal,snr,estimator,mean_error,std_error,weights,wall_ms
/// (plus a status column when any ordering check failed), LF newlines,
/// floats at 6 significant digits.
void emit_csv(const std::vector<ResultRow>& rows, std::ostream& out);
void emit_csv(const std::vector<ResultRow>& rows, const std::string& path);

/// Whitespace-separated snr/mean/std series, one block per
/// (signal, estimator) pair, gnuplot-ready.
void emit_plotdata(const std::vector<ResultRow>& rows, std::ostream& out);
void emit_plotdata(const std::vector<ResultRow>& rows,
                   const std::string& path);

/// Shorthand used by every emitter: %.6g.
std::string format_sig6(double v);

}  // namespace framedn
