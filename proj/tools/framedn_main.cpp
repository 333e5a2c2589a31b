#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "framedn/bench.hpp"
#include "framedn/frame.hpp"
#include "framedn/rules.hpp"
#include "framedn/shrink.hpp"
#include "framedn/signals.hpp"
#include "framedn/types.hpp"

namespace {

using framedn::ExperimentConfig;
using framedn::Index;
using framedn::VecX;

// Flag values are kept as raw strings and funneled through set_config so the
// command line and the config file share one vocabulary; flags win because
// they are applied after the file.
struct TableFlags {
  std::string config;
  std::map<std::string, std::string> vals;
  std::vector<std::pair<CLI::Option*, std::string>> opts;
  bool timing = false;
  CLI::Option* timingOpt = nullptr;
};

void add_table_flags(CLI::App* cmd, TableFlags& tf) {
  auto add = [&](const std::string& flag, const std::string& key,
                 const std::string& help) {
    tf.opts.emplace_back(cmd->add_option(flag, tf.vals[key], help), key);
  };
  add("--n", "n", "signal length");
  add("--snr", "snr", "comma-separated signal-to-noise ratios");
  add("--runs", "runs", "Monte-Carlo replicates per row");
  add("--seed", "seed", "master seed");
  add("--ridge", "ridge", "ridge for the empirical gain solves");
  add("--hop", "hop", "Gabor time shift");
  add("--channels", "channels", "Gabor modulation channels");
  add("--window-len", "window-len", "Gabor window length");
  add("--haar-levels", "haar-levels", "Haar decomposition depth");
  add("--signals", "signals", "comma-separated signal names");
  add("--estimators", "estimators", "comma-separated estimator names");
  add("--wav", "wav", "WAV file replacing the signal list");
  add("--offset", "offset", "first WAV sample to use");
  add("--out", "out", "CSV output path (default stdout)");
  add("--plot-out", "plot-out", "plot-data output path");
  add("--metric", "metric", "relativeSquared or rawL2");
  add("--beta", "beta", "exponential-weights temperature");
  cmd->add_option("--config", tf.config, "key = value configuration file");
  tf.timingOpt =
      cmd->add_flag("--timing", tf.timing, "record wall-clock per estimator");
}

ExperimentConfig build_cfg(const TableFlags& tf, Index defaultN) {
  ExperimentConfig cfg;
  cfg.n = defaultN;
  if (!tf.config.empty()) framedn::load_config_file(cfg, tf.config);
  for (const auto& [opt, key] : tf.opts) {
    if (opt->count() > 0) framedn::set_config(cfg, key, tf.vals.at(key));
  }
  if (tf.timingOpt->count() > 0) cfg.timing = tf.timing;
  return cfg;
}

void write_rows(const ExperimentConfig& cfg,
                const std::vector<framedn::ResultRow>& rows) {
  if (cfg.outputPath.empty()) {
    framedn::emit_csv(rows, std::cout);
  } else {
    framedn::emit_csv(rows, cfg.outputPath);
  }
  if (!cfg.plotPath.empty()) framedn::emit_plotdata(rows, cfg.plotPath);
}

VecX read_text_signal(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw framedn::IoError("cannot open input file: " + path);
  std::vector<double> vals;
  double v = 0.0;
  while (in >> v) vals.push_back(v);
  if (!in.eof()) {
    throw framedn::IoError("non-numeric content in input file: " + path);
  }
  if (vals.size() < 2) {
    throw framedn::ConfigError("input file has fewer than 2 samples");
  }
  VecX x(static_cast<Index>(vals.size()));
  for (Index i = 0; i < x.size(); ++i) {
    x[i] = vals[static_cast<std::size_t>(i)];
  }
  return x;
}

VecX apply_named(const std::string& name, const framedn::FrameOperator& frame,
                 const VecX& y, double sigma, double ridge) {
  using framedn::ThresholdMode;
  if (name == "EMP_U") {
    return frame.synthesize(
        framedn::empirical_gain(frame, y, sigma, ridge).gamma.cwiseProduct(y));
  }
  if (name == "EMP_I") {
    return frame.synthesize(
        framedn::empirical_wiener(y, sigma, ridge).gamma.cwiseProduct(y));
  }
  if (name == "SOFT_U" || name == "SOFT_I") {
    const auto mode = name == "SOFT_U" ? ThresholdMode::frameAware
                                       : ThresholdMode::orthonormal;
    const double t =
        framedn::optimize_soft_global(frame, y, sigma, mode).threshold;
    const auto rule = framedn::ShrinkRule::soft_uniform(y.size(), t);
    return frame.synthesize(framedn::apply_rule(rule, y));
  }
  if (name == "VISU_U" || name == "VISU_I") {
    const auto mode = name == "VISU_U" ? ThresholdMode::frameAware
                                       : ThresholdMode::orthonormal;
    const double t = framedn::universal_threshold(sigma, frame.rows(), mode);
    const auto rule = framedn::ShrinkRule::hard_uniform(y.size(), t);
    return frame.synthesize(framedn::apply_rule(rule, y));
  }
  if (name == "GREEDY_HARD") {
    const auto res = framedn::greedy_hard(frame, y, sigma);
    return frame.synthesize(res.gamma.gamma.cwiseProduct(y));
  }
  throw framedn::ConfigError(
      "estimator needs the clean signal or is unknown: " + name);
}

int classify_error(const framedn::Error& e) {
  const auto* cfgLike = dynamic_cast<const framedn::ConfigError*>(&e);
  if (cfgLike != nullptr) return 2;
  if (dynamic_cast<const framedn::UnknownSignal*>(&e) ||
      dynamic_cast<const framedn::InvalidLength*>(&e) ||
      dynamic_cast<const framedn::InvalidLattice*>(&e) ||
      dynamic_cast<const framedn::IoError*>(&e) ||
      dynamic_cast<const framedn::UnsupportedFormat*>(&e) ||
      dynamic_cast<const framedn::OutOfRange*>(&e) ||
      dynamic_cast<const framedn::InvalidN*>(&e) ||
      dynamic_cast<const framedn::DegenerateSignal*>(&e)) {
    return 2;
  }
  return 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frame-aware signal denoising benchmarks"};
  app.require_subcommand(1);

  auto* bench = app.add_subcommand("bench", "run a benchmark table");
  bench->require_subcommand(1);
  TableFlags t1f, t2f, t3f;
  auto* table1 = bench->add_subcommand(
      "table1", "linear-gain estimators on the Gabor frame");
  add_table_flags(table1, t1f);
  auto* table2 = bench->add_subcommand(
      "table2", "thresholding estimators on the Gabor frame");
  add_table_flags(table2, t2f);
  auto* table3 = bench->add_subcommand(
      "table3", "aggregation over the cosine and Haar bases");
  add_table_flags(table3, t3f);

  auto* denoise = app.add_subcommand("denoise", "denoise one signal file");
  std::string dnWav, dnIn, dnOut, dnEstimator = "SOFT_U";
  double dnSigma = 0.0, dnRidge = framedn::kDefaultRidge;
  Index dnOffset = 0, dnN = 1280;
  Index dnHop = 32, dnChannels = 64, dnWindowLen = 64;
  denoise->add_option("--wav", dnWav, "WAV input (normalized to unit stddev)");
  denoise->add_option("--in", dnIn, "text input, one sample per line");
  denoise->add_option("--offset", dnOffset, "first WAV sample to use");
  denoise->add_option("--n", dnN, "samples to read from the WAV");
  denoise->add_option("--sigma", dnSigma, "noise standard deviation")
      ->required();
  denoise->add_option("--estimator", dnEstimator,
                      "EMP_U, EMP_I, SOFT_U, SOFT_I, VISU_U, VISU_I, "
                      "GREEDY_HARD");
  denoise->add_option("--ridge", dnRidge, "ridge for the empirical solves");
  denoise->add_option("--hop", dnHop, "Gabor time shift");
  denoise->add_option("--channels", dnChannels, "Gabor modulation channels");
  denoise->add_option("--window-len", dnWindowLen, "Gabor window length");
  denoise->add_option("--out", dnOut, "output path (default stdout)");

  auto* inspect = app.add_subcommand("frame", "frame utilities");
  inspect->require_subcommand(1);
  auto* inspectCmd =
      inspect->add_subcommand("inspect", "print frame diagnostics");
  Index inN = 1280, inHop = 32, inChannels = 64, inWindowLen = 64;
  inspectCmd->add_option("--n", inN, "signal length");
  inspectCmd->add_option("--hop", inHop, "Gabor time shift");
  inspectCmd->add_option("--channels", inChannels, "Gabor modulation channels");
  inspectCmd->add_option("--window-len", inWindowLen, "Gabor window length");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (table1->parsed()) {
      const ExperimentConfig cfg = build_cfg(t1f, 1280);
      write_rows(cfg, framedn::run_table1(cfg));
    } else if (table2->parsed()) {
      const ExperimentConfig cfg = build_cfg(t2f, 1280);
      write_rows(cfg, framedn::run_table2(cfg));
    } else if (table3->parsed()) {
      const ExperimentConfig cfg = build_cfg(t3f, 1024);
      write_rows(cfg, framedn::run_table3(cfg));
    } else if (denoise->parsed()) {
      if (!(dnSigma > 0.0)) {
        throw framedn::ConfigError("sigma must be positive");
      }
      if (dnWav.empty() == dnIn.empty()) {
        throw framedn::ConfigError("give exactly one of --wav or --in");
      }
      const VecX x = dnWav.empty() ? read_text_signal(dnIn)
                                   : framedn::load_wav(dnWav, dnOffset, dnN);
      const auto frame =
          framedn::gabor_frame(x.size(), dnWindowLen, dnHop, dnChannels);
      const VecX fhat =
          apply_named(dnEstimator, frame, frame.analyze(x), dnSigma, dnRidge);
      std::ofstream file;
      std::ostream* out = &std::cout;
      if (!dnOut.empty()) {
        file.open(dnOut);
        if (!file) throw framedn::IoError("cannot open output: " + dnOut);
        out = &file;
      }
      char buf[40];
      for (Index i = 0; i < fhat.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g\n", fhat[i]);
        *out << buf;
      }
    } else if (inspectCmd->parsed()) {
      const auto frame =
          framedn::gabor_frame(inN, inWindowLen, inHop, inChannels);
      char buf[64];
      std::cout << "label: " << frame.label() << "\n";
      std::cout << "rows: " << frame.rows() << "\n";
      std::cout << "cols: " << frame.cols() << "\n";
      std::snprintf(buf, sizeof(buf), "%.12g", frame.lowerBound());
      std::cout << "lower-bound: " << buf << "\n";
      std::snprintf(buf, sizeof(buf), "%.12g", frame.upperBound());
      std::cout << "upper-bound: " << buf << "\n";
      if (frame.alpha()) {
        std::snprintf(buf, sizeof(buf), "%.12g", *frame.alpha());
        std::cout << "tight: yes, alpha = " << buf << "\n";
      } else {
        std::cout << "tight: no\n";
      }
      std::snprintf(buf, sizeof(buf), "%.12g",
                    frame.dualGramGramDiag().sum());
      std::cout << "trace-gram-dual: " << buf << "\n";
      const double fill =
          static_cast<double>(frame.dualGramSparse().nonZeros()) /
          (static_cast<double>(frame.rows()) *
           static_cast<double>(frame.rows()));
      std::snprintf(buf, sizeof(buf), "%.4g", fill);
      std::cout << "dual-fill: " << buf << "\n";
    }
  } catch (const framedn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return classify_error(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
