#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "framedn/bench.hpp"
#include "framedn/rng.hpp"
#include "framedn/signals.hpp"
#include "framedn/types.hpp"
#include "oracles.hpp"

using namespace framedn;

namespace {

ResultRow make_row(const std::string& signal, double snr,
                   const std::string& estimator, double mean, double sd) {
  ResultRow r;
  r.signal = signal;
  r.snr = snr;
  r.estimator = estimator;
  r.meanError = mean;
  r.stdError = sd;
  return r;
}

std::string csv_string(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  emit_csv(rows, out);
  return out.str();
}

}  // namespace

TEST_CASE("metric values") {
  VecX f(4), fh(4);
  f << 1.0, 2.0, -1.0, 0.5;
  fh << 1.5, 2.0, -2.0, 0.5;
  const double d2 = 0.25 + 1.0;
  CHECK(metric_value(Metric::rawL2Squared, fh, f) ==
        doctest::Approx(d2).epsilon(1e-14));
  CHECK(metric_value(Metric::rawL2, fh, f) ==
        doctest::Approx(std::sqrt(d2)).epsilon(1e-14));
  CHECK(metric_value(Metric::relativeSquared, fh, f) ==
        doctest::Approx(d2 / f.squaredNorm()).epsilon(1e-14));
  CHECK(metric_value(Metric::rawL2, f, f) == 0.0);
  CHECK_THROWS_AS((void)metric_value(Metric::rawL2, fh, VecX::Zero(3)),
                  DimensionMismatch);
}

TEST_CASE("six-significant-digit formatting") {
  CHECK(format_sig6(0.123456789) == "0.123457");
  CHECK(format_sig6(5.0) == "5");
  CHECK(format_sig6(0.0) == "0");
  CHECK(format_sig6(1234567.0) == "1.23457e+06");
}

TEST_CASE("monte carlo harness statistics") {
  const VecX f = make_signal("Window", 256);
  const double sigma = 0.5;

  // The identity estimator measures raw noise energy.
  const Denoiser identity = [](const VecX& x) { return x; };
  const McResult noise =
      mc_risk(identity, f, sigma, 400, 42, Metric::rawL2Squared);
  const double se = noise.stddev / std::sqrt(400.0);
  CHECK(std::abs(noise.mean - sigma * sigma * 256.0) < 3.0 * se);

  // An estimator that returns the clean signal has exactly zero error.
  const Denoiser perfect = [&](const VecX&) { return f; };
  const McResult zero = mc_risk(perfect, f, sigma, 50, 42);
  CHECK(zero.mean == 0.0);
  CHECK(zero.stddev == 0.0);

  // Same seed, same statistics, bit for bit.
  const McResult again =
      mc_risk(identity, f, sigma, 400, 42, Metric::rawL2Squared);
  CHECK(again.mean == noise.mean);
  CHECK(again.stddev == noise.stddev);

  CHECK_THROWS_AS((void)mc_risk(identity, f, sigma, 0, 42), ConfigError);
}

TEST_CASE("csv emission format") {
  std::vector<ResultRow> rows;
  rows.push_back(make_row("sig", 1.0, "EST", 0.125, 0.5));
  const std::string one = csv_string(rows);
  CHECK(one ==
        "signal,snr,estimator,mean_error,std_error,weights,wall_ms\n"
        "sig,1,EST,0.125,0.5,,\n");
  CHECK(one.find('\r') == std::string::npos);

  // Aggregation rows join their weights with semicolons; timing fills the
  // last column.
  ResultRow agg = make_row("sig", 3.0, "AGG", 0.25, 0.0625);
  agg.meanWeights = VecX(2);
  agg.meanWeights << 0.75, 0.25;
  agg.wallMs = 12.5;
  rows.push_back(agg);
  const std::string two = csv_string(rows);
  CHECK(two ==
        "signal,snr,estimator,mean_error,std_error,weights,wall_ms\n"
        "sig,1,EST,0.125,0.5,,\n"
        "sig,3,AGG,0.25,0.0625,0.75;0.25,12.5\n");

  // The status column appears only when some row carries a flag.
  rows[0].status = "check-failed";
  const std::string flagged = csv_string(rows);
  CHECK(flagged ==
        "signal,snr,estimator,mean_error,std_error,weights,wall_ms,status\n"
        "sig,1,EST,0.125,0.5,,,check-failed\n"
        "sig,3,AGG,0.25,0.0625,0.75;0.25,12.5,\n");

  // Emission is a pure function of the rows.
  CHECK(csv_string(rows) == flagged);

  CHECK_THROWS_AS(emit_csv(rows, "/framedn_no_such_dir/out.csv"), IoError);

  const std::string path = "/tmp/framedn_test_emit.csv";
  emit_csv(rows, path);
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == flagged);
  std::remove(path.c_str());
}

TEST_CASE("plot data emission format") {
  std::vector<ResultRow> rows;
  rows.push_back(make_row("a", 1.0, "E1", 0.5, 0.125));
  rows.push_back(make_row("a", 3.0, "E1", 0.25, 0.0625));
  rows.push_back(make_row("a", 1.0, "E2", 0.75, 0.125));
  std::ostringstream out;
  emit_plotdata(rows, out);
  CHECK(out.str() ==
        "# a E1\n"
        "1 0.5 0.125\n"
        "3 0.25 0.0625\n"
        "\n"
        "# a E2\n"
        "1 0.75 0.125\n");
}

TEST_CASE("config key parsing") {
  ExperimentConfig cfg;
  set_config(cfg, "n", "2560");
  CHECK(cfg.n == 2560);
  set_config(cfg, "snr", "1, 3, 5");
  REQUIRE(cfg.snrList.size() == 3);
  CHECK(cfg.snrList[1] == 3.0);
  set_config(cfg, "runs", "25");
  CHECK(cfg.runs == 25);
  set_config(cfg, "seed", "987654321");
  CHECK(cfg.seed == 987654321u);
  set_config(cfg, "ridge", "1e-3");
  CHECK(cfg.ridge == 1e-3);
  set_config(cfg, "hop", "16");
  set_config(cfg, "channels", "32");
  set_config(cfg, "window-len", "48");
  CHECK(cfg.gabor.hop == 16);
  CHECK(cfg.gabor.channels == 32);
  CHECK(cfg.gabor.windowLength == 48);
  set_config(cfg, "haar-levels", "4");
  CHECK(cfg.haarLevels == 4);
  set_config(cfg, "signals", "Window,LoSine");
  REQUIRE(cfg.signals.size() == 2);
  CHECK(cfg.signals[1] == "LoSine");
  set_config(cfg, "estimators", "EMP_U, EMP_I");
  REQUIRE(cfg.estimators.size() == 2);
  CHECK(cfg.estimators[1] == "EMP_I");
  set_config(cfg, "wav", "/tmp/a.wav");
  CHECK(cfg.wavPath == "/tmp/a.wav");
  set_config(cfg, "offset", "128");
  CHECK(cfg.wavOffset == 128);
  set_config(cfg, "out", "/tmp/o.csv");
  CHECK(cfg.outputPath == "/tmp/o.csv");
  set_config(cfg, "plot-out", "/tmp/p.dat");
  CHECK(cfg.plotPath == "/tmp/p.dat");
  set_config(cfg, "metric", "rawL2");
  CHECK(cfg.metric == Metric::rawL2);
  set_config(cfg, "metric", "relativeSquared");
  CHECK(cfg.metric == Metric::relativeSquared);
  set_config(cfg, "timing", "true");
  CHECK(cfg.timing);
  set_config(cfg, "timing", "false");
  CHECK(!cfg.timing);
  set_config(cfg, "beta", "0.25");
  REQUIRE(cfg.beta.has_value());
  CHECK(*cfg.beta == 0.25);

  CHECK_THROWS_AS(set_config(cfg, "no-such-key", "1"), ConfigError);
  CHECK_THROWS_AS(set_config(cfg, "metric", "perceptual"), ConfigError);
  CHECK_THROWS_AS(set_config(cfg, "runs", "many"), ConfigError);
}

TEST_CASE("config file loading") {
  const std::string path = "/tmp/framedn_test_config.txt";
  {
    std::ofstream out(path);
    out << "# benchmark setup\n"
        << "\n"
        << "n = 512\n"
        << "  runs=7\n"
        << "snr = 2, 4\n"
        << "signals = MishMash\n";
  }
  ExperimentConfig cfg;
  load_config_file(cfg, path);
  CHECK(cfg.n == 512);
  CHECK(cfg.runs == 7);
  REQUIRE(cfg.snrList.size() == 2);
  CHECK(cfg.snrList[0] == 2.0);
  REQUIRE(cfg.signals.size() == 1);
  CHECK(cfg.signals[0] == "MishMash");
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_config_file(cfg, "/tmp/framedn_absent_config.txt"),
                  IoError);

  {
    std::ofstream out(path);
    out << "n = 512\nbogus = 1\n";
  }
  CHECK_THROWS_AS(load_config_file(cfg, path), ConfigError);
  std::remove(path.c_str());
}

TEST_CASE("gain benchmark smoke run") {
  ExperimentConfig cfg;
  cfg.n = 256;
  cfg.runs = 3;
  cfg.snrList = {1.0};
  cfg.signals = {"WernerSorrows"};
  cfg.seed = 7;

  const std::vector<ResultRow> rows = run_table1(cfg);
  REQUIRE(rows.size() == 4);
  const char* expected[] = {"IDEAL_U", "IDEAL_I", "EMP_U", "EMP_I"};
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(rows[k].estimator == expected[k]);
    CHECK(rows[k].signal == "WernerSorrows");
    CHECK(rows[k].snr == 1.0);
    CHECK(rows[k].meanError > 0.0);
    CHECK(rows[k].stdError >= 0.0);
    CHECK(rows[k].meanWeights.size() == 0);
    CHECK(rows[k].wallMs < 0.0);
  }

  // Identical config and seed reproduce the output bytes.
  const std::vector<ResultRow> again = run_table1(cfg);
  CHECK(csv_string(rows) == csv_string(again));

  // Estimator subset selection.
  cfg.estimators = {"EMP_U"};
  const std::vector<ResultRow> only = run_table1(cfg);
  REQUIRE(only.size() == 1);
  CHECK(only[0].estimator == "EMP_U");
  CHECK(only[0].meanError == doctest::Approx(rows[2].meanError).epsilon(1e-14));

  // Timing flag fills the wall-clock column.
  cfg.timing = true;
  const std::vector<ResultRow> timed = run_table1(cfg);
  REQUIRE(timed.size() == 1);
  CHECK(timed[0].wallMs >= 0.0);

  cfg.estimators = {"NO_SUCH"};
  CHECK_THROWS_AS((void)run_table1(cfg), ConfigError);
  cfg.estimators.clear();
  cfg.runs = 0;
  CHECK_THROWS_AS((void)run_table1(cfg), ConfigError);
  cfg.runs = 3;
  cfg.snrList = {-1.0};
  CHECK_THROWS_AS((void)run_table1(cfg), ConfigError);
}

TEST_CASE("threshold benchmark smoke run") {
  ExperimentConfig cfg;
  cfg.n = 256;
  cfg.runs = 3;
  cfg.snrList = {1.0};
  cfg.signals = {"MishMash"};
  cfg.seed = 11;

  const std::vector<ResultRow> rows = run_table2(cfg);
  REQUIRE(rows.size() == 4);
  const char* expected[] = {"SOFT_U", "SOFT_I", "VISU_U", "VISU_I"};
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(rows[k].estimator == expected[k]);
    CHECK(rows[k].meanError > 0.0);
  }

  // The raw metric produces different, positive numbers for the same setup.
  cfg.metric = Metric::rawL2;
  const std::vector<ResultRow> raw = run_table2(cfg);
  REQUIRE(raw.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(raw[k].meanError > 0.0);
    CHECK(raw[k].meanError != rows[k].meanError);
  }
}

TEST_CASE("aggregation benchmark smoke run") {
  ExperimentConfig cfg;
  cfg.n = 64;
  cfg.runs = 3;
  cfg.snrList = {1.0, 3.0};
  cfg.seed = 13;

  const std::vector<ResultRow> rows = run_table3(cfg);
  // Three default signals, two SNRs, four rows per cell.
  REQUIRE(rows.size() == 3 * 2 * 4);
  for (std::size_t k = 0; k < rows.size(); k += 4) {
    CHECK(rows[k].estimator == "COSINE");
    CHECK(rows[k + 1].estimator == "HAAR");
    CHECK(rows[k + 2].estimator == "AVG");
    CHECK(rows[k + 3].estimator == "AGG_DI");
    REQUIRE(rows[k + 3].meanWeights.size() == 2);
    CHECK(rows[k + 3].meanWeights.sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rows[k + 3].meanWeights.minCoeff() >= 0.0);
  }

  const std::vector<ResultRow> again = run_table3(cfg);
  CHECK(csv_string(rows) == csv_string(again));

  // Exponential weights at temperature zero stay at the uniform prior.
  cfg.estimators = {"AGG_DI", "AGG_EXP"};
  cfg.beta = 0.0;
  cfg.snrList = {1.0};
  cfg.signals = {"Window"};
  const std::vector<ResultRow> withExp = run_table3(cfg);
  REQUIRE(withExp.size() == 5);
  CHECK(withExp[4].estimator == "AGG_EXP");
  REQUIRE(withExp[4].meanWeights.size() == 2);
  CHECK(withExp[4].meanWeights[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(withExp[4].meanWeights[1] == doctest::Approx(0.5).epsilon(1e-12));

  cfg.estimators = {"EMP_U"};
  CHECK_THROWS_AS((void)run_table3(cfg), ConfigError);
}

TEST_CASE("benchmark accepts audio input") {
  const std::string path = "/tmp/framedn_test_bench_audio.wav";
  std::vector<std::int16_t> pcm(512);
  for (std::size_t i = 0; i < pcm.size(); ++i) {
    const double t = static_cast<double>(i);
    pcm[i] = static_cast<std::int16_t>(
        9000.0 * std::sin(0.07 * t) + 5000.0 * std::sin(0.031 * t * t / 512.0));
  }
  oracle::write_wav16(path, pcm);

  ExperimentConfig cfg;
  cfg.n = 256;
  cfg.runs = 2;
  cfg.snrList = {1.0};
  cfg.seed = 17;
  cfg.wavPath = path;
  cfg.wavOffset = 64;
  cfg.estimators = {"EMP_I"};
  const std::vector<ResultRow> rows = run_table1(cfg);
  REQUIRE(rows.size() == 1);
  // The row takes its signal name from the file stem.
  CHECK(rows[0].signal == "framedn_test_bench_audio");
  CHECK(rows[0].meanError > 0.0);
  std::remove(path.c_str());
}
