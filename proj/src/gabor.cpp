#include "framedn/frame.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace framedn {

namespace {

// Symmetric Hamming window, the convention of common DSP toolboxes.
VecX hamming(Index len) {
  VecX h(len);
  if (len == 1) {
    h[0] = 1.0;
    return h;
  }
  for (Index j = 0; j < len; ++j) {
    h[j] = 0.54 - 0.46 * std::cos(2.0 * M_PI * static_cast<double>(j) /
                                  static_cast<double>(len - 1));
  }
  return h;
}

}  // namespace

FrameOperator gabor_frame(Index n, Index windowLength, Index hop,
                          Index channels) {
  if (n < 2 || hop < 1 || n % hop != 0) {
    throw InvalidLattice("gabor_frame: hop must divide n");
  }
  if (windowLength < 1 || windowLength > n) {
    throw InvalidLattice("gabor_frame: window length must lie in [1, n]");
  }
  if (channels < 1 || channels > windowLength) {
    throw InvalidLattice("gabor_frame: channels must lie in [1, windowLength]");
  }
  if (channels < hop) {
    throw InvalidLattice("gabor_frame: undersampled lattice, need channels >= hop");
  }

  const Index shifts = n / hop;
  const Index m = channels;
  const VecX h = hamming(windowLength);

  // Window embedded in R^n; shifts act circularly.
  VecX wEmb = VecX::Zero(n);
  wEmb.head(windowLength) = h;

  // Frame operator of the complex lattice system built from the raw window.
  // It couples only samples congruent mod `channels`, and it is diagonal in
  // the painless case windowLength <= channels.
  VecX tight(n);
  if (windowLength <= m) {
    VecX diag = VecX::Zero(n);
    for (Index k = 0; k < shifts; ++k) {
      for (Index p = 0; p < windowLength; ++p) {
        const Index t = (k * hop + p) % n;
        diag[t] += static_cast<double>(m) * h[p] * h[p];
      }
    }
    if (diag.minCoeff() <= 1e-12 * diag.maxCoeff()) {
      throw InvalidLattice("gabor_frame: window shifts do not cover the signal");
    }
    tight = wEmb.cwiseQuotient(diag.cwiseSqrt());
  } else {
    MatX s = MatX::Zero(n, n);
    for (Index k = 0; k < shifts; ++k) {
      for (Index p = 0; p < windowLength; ++p) {
        const Index tp = (k * hop + p) % n;
        for (Index q = 0; q < windowLength; ++q) {
          if ((p - q) % m != 0) continue;
          const Index tq = (k * hop + q) % n;
          s(tp, tq) += static_cast<double>(m) * h[p] * h[q];
        }
      }
    }
    Eigen::SelfAdjointEigenSolver<MatX> eig(s);
    const VecX& ev = eig.eigenvalues();
    if (ev.minCoeff() <= 1e-10 * ev.maxCoeff()) {
      throw InvalidLattice("gabor_frame: lattice system is not a frame");
    }
    // Canonical tight window: apply the inverse operator square root. The
    // operator commutes with the lattice shifts and modulations, so shifting
    // and modulating this one window yields the canonical tight system.
    tight.noalias() =
        eig.eigenvectors() *
        ev.cwiseSqrt().cwiseInverse().asDiagonal() *
        (eig.eigenvectors().transpose() * wEmb);
  }

  // Real rows: for each time shift, cosine and sine modulations over the
  // half spectrum. The paired frequencies 1..ceil(m/2)-1 carry sqrt(2) so
  // that the real stack inherits tightness from the complex system; the
  // all-cosine rows at 0 (and m/2 for even m) appear once, unscaled.
  // Row count per shift is exactly `channels`.
  const Index rows = shifts * m;
  MatX w = MatX::Zero(rows, n);
  std::vector<std::vector<Index>> pairs;
  pairs.reserve(static_cast<std::size_t>(shifts) * (m / 2 + 1));
  const double sqrt2 = std::sqrt(2.0);
  Index r = 0;
  for (Index k = 0; k < shifts; ++k) {
    const Index base = k * hop;
    for (Index freq = 0; freq <= m / 2; ++freq) {
      const bool single = (freq == 0) || (m % 2 == 0 && freq == m / 2);
      const double scale = single ? 1.0 : sqrt2;
      for (Index p = 0; p < n; ++p) {
        const Index t = (base + p) % n;
        const double win = tight[p];
        if (win == 0.0) continue;
        const double angle = 2.0 * M_PI * static_cast<double>(freq) *
                             static_cast<double>(t) / static_cast<double>(m);
        w(r, t) = scale * win * std::cos(angle);
        if (!single) w(r + 1, t) = scale * win * std::sin(angle);
      }
      if (single) {
        pairs.push_back({r});
      } else {
        pairs.push_back({r, r + 1});
      }
      r += single ? 1 : 2;
    }
  }

  FrameOperator f = build_frame(
      std::move(w), 1e-8,
      "gabor:n=" + std::to_string(n) + ",win=" + std::to_string(windowLength) +
          ",hop=" + std::to_string(hop) + ",ch=" + std::to_string(m));
  if (!f.alpha() || std::abs(*f.alpha() - 1.0) > 1e-8) {
    throw InvalidLattice("gabor_frame: construction did not yield a tight frame");
  }
  f.quadratureGroups_ = std::move(pairs);
  return f;
}

}  // namespace framedn
