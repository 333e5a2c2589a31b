#pragma once

#include <cstdint>
#include <string>

#include "framedn/types.hpp"

namespace framedn {

/// A noisy observation x = f + delta with delta ~ N(0, sigma^2 I).
struct Observation {
  VecX f;              // clean signal, unit sample stddev
  VecX x;              // noisy signal
  double sigma = 0.0;  // per-sample noise stddev
  std::uint64_t seed = 0;
};

/// Frame coefficients of an observation.
struct CoefficientObservation {
  VecX y;               // W x
  VecX theta;           // W f; empty when the clean signal is unknown
  std::string frameRef; // label of the frame that produced the coefficients
};

/// Sample standard deviation with the n-1 denominator.
double sample_stddev(const VecX& v);

/// Generate a named synthetic test signal of length n, normalized to unit
/// sample standard deviation. Names: WernerSorrows, MishMash, Window,
/// LoSine, WindowPlusLoSine.
///   UnknownSignal     on an unrecognized name
///   InvalidLength     when n < 64
///   DegenerateSignal  if the raw signal is constant (cannot normalize)
VecX make_signal(const std::string& name, Index n);

/// Add white Gaussian noise at the given signal-to-noise ratio:
/// sigma = sample_stddev(f) / snr. The noise stream is keyed by `seed`, so
/// identical (f, snr, seed) always produces an identical observation.
Observation add_noise(const VecX& f, double snr, std::uint64_t seed);

/// Read `length` samples starting at `offset` from a PCM WAV file
/// (16-bit integer or 32-bit float, first channel of multichannel data),
/// rescaled to [-1, 1] and then normalized to unit sample stddev.
///   IoError            unreadable or malformed file
///   UnsupportedFormat  compression codes or sample widths not listed above
///   OutOfRange         when offset + length exceeds the available samples
VecX load_wav(const std::string& path, Index offset, Index length);

}  // namespace framedn
