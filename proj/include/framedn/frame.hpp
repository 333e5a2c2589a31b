#pragma once

#include <optional>
#include <string>
#include <vector>

#include "framedn/types.hpp"

namespace framedn {

/// A finite frame for R^n given by an analysis matrix W with N >= n rows.
/// Holds the derived operators used everywhere else:
///   pseudoInverse  W+            (synthesis)
///   gram           U  = W W^T    (coefficient-noise covariance shape)
///   dualGram       U- = (W+)^T W+
/// plus sparse companions of U- and U o U- for large, mostly-banded frames.
/// Immutable after construction; safe to share across threads.
class FrameOperator {
 public:
  Index rows() const { return w_.rows(); }  // N, number of frame vectors
  Index cols() const { return w_.cols(); }  // n, signal length

  const MatX& matrix() const { return w_; }
  const MatX& pseudoInverse() const { return wplus_; }
  const MatX& gram() const { return u_; }
  const MatX& dualGram() const { return uminus_; }

  double lowerBound() const { return lower_; }  // smallest eigenvalue of W^T W
  double upperBound() const { return upper_; }  // largest eigenvalue of W^T W
  double tightTolerance() const { return tightTol_; }

  /// Populated iff the frame is tight within tightTolerance; then
  /// W^T W = alpha I and lowerBound ~ upperBound ~ alpha.
  const std::optional<double>& alpha() const { return alpha_; }

  const std::string& label() const { return label_; }

  /// Unique per constructed instance; used to key per-thread solver caches.
  std::uint64_t uid() const { return uid_; }

  /// y = W x. Throws DimensionMismatch unless x has length n.
  VecX analyze(const VecX& x) const;

  /// f = W+ theta. Throws DimensionMismatch unless theta has length N.
  VecX synthesize(const VecX& theta) const;

  /// U- with entries of magnitude below 1e-12 dropped. Pattern includes the
  /// full diagonal.
  const SpMat& dualGramSparse() const { return uminusSparse_; }

  /// Entrywise product U o U- on the same pruned pattern.
  const SpMat& hadamard() const { return hadamard_; }

  /// diag(U- U), equal to the row sums of U o U-. Sums to n.
  const VecX& dualGramGramDiag() const { return dualGramGramDiag_; }

  /// Rows grouped into cosine/sine quadrature pairs. Each group holds one or
  /// two row indices; together the groups partition 0..N-1. A pair's two
  /// coefficients are the real and imaginary parts of one complex lattice
  /// coefficient, so their combined power is translation invariant. Empty
  /// for frames without a known pairing (then treat every row as its own
  /// group).
  const std::vector<std::vector<Index>>& quadratureGroups() const {
    return quadratureGroups_;
  }

  friend FrameOperator build_frame(MatX w, double tightTolerance,
                                   std::string label);
  friend FrameOperator gabor_frame(Index n, Index windowLength, Index hop,
                                   Index channels);

 private:
  FrameOperator() = default;

  MatX w_, wplus_, u_, uminus_;
  SpMat uminusSparse_, hadamard_;
  VecX dualGramGramDiag_;
  std::vector<std::vector<Index>> quadratureGroups_;
  double lower_ = 0.0, upper_ = 0.0, tightTol_ = 0.0;
  std::optional<double> alpha_;
  std::string label_;
  std::uint64_t uid_ = 0;
};

/// Validate W and derive all frame operators.
///   DimensionMismatch  if W has fewer rows than columns
///   RankDeficient      if the smallest singular value of W is below
///                      1e-10 times the largest
/// Tightness is detected by comparing W^T W against alpha I with
/// alpha = trace(W^T W)/n, at relative tolerance `tightTolerance`.
FrameOperator build_frame(MatX w, double tightTolerance = 1e-8,
                          std::string label = "");

/// Real Gabor frame for R^n: cosine and sine modulations of the canonical
/// tight window derived from a length-`windowLength` Hamming window, shifted
/// circularly by multiples of `hop`, with `channels` modulation frequencies.
/// Produces N = (n/hop)*channels rows and a tight frame with alpha = 1.
/// Throws InvalidLattice when the parameters cannot produce a tight frame
/// (hop does not divide n, undersampled lattice, singular frame operator).
FrameOperator gabor_frame(Index n, Index windowLength = 64, Index hop = 32,
                          Index channels = 64);

/// Orthonormal DCT-II matrix, n x n. Row k, column j holds
/// c_k cos(pi k (2j+1) / (2n)) with c_0 = sqrt(1/n), c_k = sqrt(2/n).
MatX dct_basis(Index n);

/// Orthonormal `levels`-level Haar wavelet matrix, n x n, n a power of two,
/// 1 <= levels <= log2(n). Rows are ordered scaling block first, then detail
/// blocks from coarsest to finest. Throws InvalidLength on a bad n or level
/// count.
MatX haar_basis(Index n, int levels);

/// A collection of m orthonormal bases of R^n. Stacking the blocks yields a
/// tight frame with alpha = m.
class BasisCollection {
 public:
  Index n() const { return n_; }
  int count() const { return static_cast<int>(blocks_.size()); }

  const MatX& block(int i) const { return blocks_.at(i); }
  const std::string& blockLabel(int i) const { return labels_.at(i); }

  /// Cross-Gram U^(i,j) = W^(i) W^(j)^T.
  const MatX& crossGram(int i, int j) const {
    return crossGram_.at(static_cast<std::size_t>(i) * blocks_.size() + j);
  }

  /// Per-basis coefficient blocks y^(i) = W^(i) x.
  std::vector<VecX> analyze_blocks(const VecX& x) const;

  /// W^(i)^T theta, the reconstruction through basis i alone.
  VecX synthesize_block(int i, const VecX& theta) const;

  /// The (m n) x n matrix of all blocks stacked vertically.
  MatX stacked_matrix() const;

 private:
  friend BasisCollection ortho_collection(std::vector<MatX> blocks,
                                          std::vector<std::string> labels,
                                          double tol);
  BasisCollection() = default;

  std::vector<MatX> blocks_;
  std::vector<std::string> labels_;
  std::vector<MatX> crossGram_;
  Index n_ = 0;
};

/// Validate that every block is n x n with B B^T = I within `tol` (max
/// absolute deviation), and precompute the cross-Gram blocks.
///   DimensionMismatch  on ragged block sizes
///   NotOrthonormal     when a block fails the orthonormality check
BasisCollection ortho_collection(std::vector<MatX> blocks,
                                 std::vector<std::string> labels = {},
                                 double tol = 1e-8);

}  // namespace framedn
