#include "framedn/signals.hpp"

#include <cmath>

#include "framedn/rng.hpp"

namespace framedn {

namespace {

// Port of WaveLab's MakeSignal 'WernerSorrows': three interfering chirps
// plus a train of rational bumps. t runs over (1:n)/n.
VecX werner_sorrows(Index n) {
  static const double pos[] = {.1,  .13, .15, .23, .25, .40,
                               .44, .65, .76, .78, .81};
  static const double hgt[] = {4, 5, 3, 4, 5, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2};
  static const double wth[] = {.005, .005, .006, .01,  .01, .03,
                               .01,  .01,  .005, .008, .005};
  VecX f(n);
  const double dn = static_cast<double>(n);
  for (Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i + 1) / dn;
    double v = std::sin(M_PI * t * (dn / 2.0 * t * t));
    v += std::sin(M_PI * (dn * 0.6902) * t);
    v += std::sin(M_PI * t * (dn * t));
    for (int b = 0; b < 11; ++b) {
      const double u = 1.0 + std::abs((t - pos[b]) / wth[b]);
      v += hgt[b] / (u * u * u * u);
    }
    f[i] = v;
  }
  return f;
}

// Port of WaveLab's MakeSignal 'MishMash': quadratic chirp + high sine
// + linear chirp.
VecX mish_mash(Index n) {
  VecX f(n);
  const double dn = static_cast<double>(n);
  for (Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i + 1) / dn;
    double v = std::sin((M_PI / 3.0) * t * (dn * t * t));
    v += std::sin(M_PI * (dn * 0.6902) * t);
    v += std::sin(M_PI * t * (dn * 0.125 * t));
    f[i] = v;
  }
  return f;
}

// Off-center boxcar. Both jumps land on multiples of 8, so Haar detail
// coefficients vanish through three decomposition levels and the box lives
// entirely in the coarse scaling functions. The narrow support makes the
// step tall after unit-variance normalization, which spreads substantial
// cosine-basis energy across slowly decaying off-bin tails. Returned at
// unit sample standard deviation, as is lo_sine, so the two-component sum
// weighs both parts equally.
VecX window_box(Index n) {
  const double dn = static_cast<double>(n);
  const Index start = 8 * static_cast<Index>(std::llround(0.3 * dn / 8.0));
  const Index width =
      8 * std::max<Index>(1, static_cast<Index>(std::llround(dn / 170.0)));
  VecX f = VecX::Zero(n);
  f.segment(start, width).setConstant(1.0);
  f /= sample_stddev(f);
  return f;
}

// One low-frequency sinusoid aligned with a single orthonormal DCT-II
// atom (bin round(n/3)), so its cosine-basis expansion is one coefficient.
VecX lo_sine(Index n) {
  const double k0 = std::round(static_cast<double>(n) / 3.0);
  VecX f(n);
  for (Index j = 0; j < n; ++j) {
    f[j] = std::cos(M_PI * k0 * (2.0 * static_cast<double>(j) + 1.0) /
                    (2.0 * static_cast<double>(n)));
  }
  f /= sample_stddev(f);
  return f;
}

VecX normalize_unit_stddev(VecX f) {
  const double sd = sample_stddev(f);
  if (!(sd > 0.0)) {
    throw DegenerateSignal("make_signal: constant signal cannot be normalized");
  }
  f /= sd;
  return f;
}

}  // namespace

double sample_stddev(const VecX& v) {
  if (v.size() < 2) return 0.0;
  const double mean = v.mean();
  const double ss = (v.array() - mean).square().sum();
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

VecX make_signal(const std::string& name, Index n) {
  if (n < 64) {
    throw InvalidLength("make_signal: n must be at least 64, got " +
                        std::to_string(n));
  }
  VecX raw;
  if (name == "WernerSorrows") {
    raw = werner_sorrows(n);
  } else if (name == "MishMash") {
    raw = mish_mash(n);
  } else if (name == "Window") {
    raw = window_box(n);
  } else if (name == "LoSine") {
    raw = lo_sine(n);
  } else if (name == "WindowPlusLoSine") {
    raw = window_box(n) + lo_sine(n);
  } else {
    throw UnknownSignal("make_signal: unknown signal name '" + name + "'");
  }
  return normalize_unit_stddev(std::move(raw));
}

Observation add_noise(const VecX& f, double snr, std::uint64_t seed) {
  if (!(snr > 0.0)) throw OutOfRange("add_noise: snr must be positive");
  const double sd = sample_stddev(f);
  if (!(sd > 0.0)) throw DegenerateSignal("add_noise: constant signal");

  Observation obs;
  obs.f = f;
  obs.sigma = sd / snr;
  obs.seed = seed;
  VecX noise(f.size());
  rng::fill_gaussian(seed, noise);
  obs.x = f + obs.sigma * noise;
  return obs;
}

}  // namespace framedn
