#include "framedn/frame.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <atomic>
#include <cmath>
#include <utility>

namespace framedn {

namespace {

constexpr double kSparseDrop = 1e-12;
constexpr double kRankCutoff = 1e-10;

std::uint64_t next_uid() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

// Prune a dense symmetric matrix to a sparse one, always keeping the
// diagonal so downstream solvers can add ridge terms in place.
SpMat prune_symmetric(const MatX& m) {
  const Index nr = m.rows();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(nr) * 8);
  for (Index j = 0; j < nr; ++j) {
    for (Index i = 0; i < nr; ++i) {
      const double v = m(i, j);
      if (i == j || std::abs(v) > kSparseDrop) {
        trips.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
      }
    }
  }
  SpMat s(nr, nr);
  s.setFromTriplets(trips.begin(), trips.end());
  s.makeCompressed();
  return s;
}

}  // namespace

VecX FrameOperator::analyze(const VecX& x) const {
  if (x.size() != cols()) {
    throw DimensionMismatch("analyze: signal length " + std::to_string(x.size()) +
                            " does not match frame dimension " +
                            std::to_string(cols()));
  }
  return w_ * x;
}

VecX FrameOperator::synthesize(const VecX& theta) const {
  if (theta.size() != rows()) {
    throw DimensionMismatch("synthesize: coefficient length " +
                            std::to_string(theta.size()) +
                            " does not match frame size " + std::to_string(rows()));
  }
  return wplus_ * theta;
}

FrameOperator build_frame(MatX w, double tightTolerance, std::string label) {
  const Index bigN = w.rows();
  const Index n = w.cols();
  if (bigN < n || n < 1) {
    throw DimensionMismatch("build_frame: need at least as many rows as columns, got " +
                            std::to_string(bigN) + " x " + std::to_string(n));
  }

  MatX v = w.transpose() * w;
  Eigen::SelfAdjointEigenSolver<MatX> eig(v, Eigen::EigenvaluesOnly);
  const double evMin = eig.eigenvalues().minCoeff();
  const double evMax = eig.eigenvalues().maxCoeff();
  const double sMin = std::sqrt(std::max(evMin, 0.0));
  const double sMax = std::sqrt(std::max(evMax, 0.0));
  if (sMax <= 0.0 || sMin <= kRankCutoff * sMax) {
    throw RankDeficient("build_frame: smallest singular value " +
                        std::to_string(sMin) + " below cutoff relative to " +
                        std::to_string(sMax));
  }

  FrameOperator f;
  f.w_ = std::move(w);
  f.lower_ = evMin;
  f.upper_ = evMax;
  f.tightTol_ = tightTolerance;
  f.uid_ = next_uid();

  const double alphaHat = v.trace() / static_cast<double>(n);
  v.diagonal().array() -= alphaHat;
  const double tightDev = v.cwiseAbs().maxCoeff();
  if (tightDev <= tightTolerance * alphaHat) {
    f.alpha_ = alphaHat;
  }

  f.u_.noalias() = f.w_ * f.w_.transpose();

  // For a frame that is tight to machine precision, W+ = W^T / alpha and
  // U- = U / alpha^2 hold exactly; this avoids an SVD that would dominate
  // construction time at benchmark sizes.
  if (f.alpha_ && tightDev <= 1e-10 * alphaHat) {
    f.wplus_ = f.w_.transpose() / alphaHat;
    f.uminus_ = f.u_ / (alphaHat * alphaHat);
  } else {
    Eigen::BDCSVD<MatX> svd(f.w_, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VecX& sv = svd.singularValues();
    VecX inv = VecX::Zero(sv.size());
    const double cutoff = kRankCutoff * sv(0);
    for (Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
    }
    f.wplus_.noalias() =
        svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
    f.uminus_.noalias() = f.wplus_.transpose() * f.wplus_;
  }

  f.uminusSparse_ = prune_symmetric(f.uminus_);
  {
    SpMat had = f.uminusSparse_;
    for (Index j = 0; j < had.outerSize(); ++j) {
      for (SpMat::InnerIterator it(had, j); it; ++it) {
        it.valueRef() *= f.u_(it.row(), it.col());
      }
    }
    f.hadamard_ = std::move(had);
  }
  f.dualGramGramDiag_ = f.uminus_.cwiseProduct(f.u_).rowwise().sum();

  f.label_ = label.empty() ? "frame:" + std::to_string(bigN) + "x" + std::to_string(n)
                           : std::move(label);
  return f;
}

MatX dct_basis(Index n) {
  if (n < 1) throw InvalidLength("dct_basis: n must be positive");
  MatX d(n, n);
  const double norm0 = std::sqrt(1.0 / static_cast<double>(n));
  const double normK = std::sqrt(2.0 / static_cast<double>(n));
  for (Index k = 0; k < n; ++k) {
    const double c = (k == 0) ? norm0 : normK;
    for (Index j = 0; j < n; ++j) {
      const double angle = M_PI * static_cast<double>(k) *
                           (2.0 * static_cast<double>(j) + 1.0) /
                           (2.0 * static_cast<double>(n));
      d(k, j) = c * std::cos(angle);
    }
  }
  return d;
}

MatX haar_basis(Index n, int levels) {
  if (n < 2 || (n & (n - 1)) != 0) {
    throw InvalidLength("haar_basis: n must be a power of two, got " +
                        std::to_string(n));
  }
  int log2n = 0;
  while ((Index{1} << (log2n + 1)) <= n) ++log2n;
  if (levels < 1 || levels > log2n) {
    throw InvalidLength("haar_basis: levels must lie in [1, log2(n)]");
  }

  MatX h = MatX::Zero(n, n);
  Index row = 0;
  const Index coarse = Index{1} << levels;
  const double scaleVal = 1.0 / std::sqrt(static_cast<double>(coarse));
  for (Index k = 0; k < n / coarse; ++k, ++row) {
    h.row(row).segment(k * coarse, coarse).setConstant(scaleVal);
  }
  for (int lev = levels; lev >= 1; --lev) {
    const Index block = Index{1} << lev;
    const double val = 1.0 / std::sqrt(static_cast<double>(block));
    for (Index k = 0; k < n / block; ++k, ++row) {
      h.row(row).segment(k * block, block / 2).setConstant(val);
      h.row(row).segment(k * block + block / 2, block / 2).setConstant(-val);
    }
  }
  return h;
}

std::vector<VecX> BasisCollection::analyze_blocks(const VecX& x) const {
  if (x.size() != n_) {
    throw DimensionMismatch("analyze_blocks: signal length mismatch");
  }
  std::vector<VecX> out;
  out.reserve(blocks_.size());
  for (const MatX& b : blocks_) out.emplace_back(b * x);
  return out;
}

VecX BasisCollection::synthesize_block(int i, const VecX& theta) const {
  if (theta.size() != n_) {
    throw DimensionMismatch("synthesize_block: coefficient length mismatch");
  }
  return blocks_.at(i).transpose() * theta;
}

MatX BasisCollection::stacked_matrix() const {
  MatX s(n_ * static_cast<Index>(blocks_.size()), n_);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    s.middleRows(static_cast<Index>(i) * n_, n_) = blocks_[i];
  }
  return s;
}

BasisCollection ortho_collection(std::vector<MatX> blocks,
                                 std::vector<std::string> labels, double tol) {
  if (blocks.empty()) {
    throw DimensionMismatch("ortho_collection: need at least one basis");
  }
  const Index n = blocks.front().rows();
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].rows() != n || blocks[i].cols() != n) {
      throw DimensionMismatch("ortho_collection: block " + std::to_string(i) +
                              " is not " + std::to_string(n) + " x " +
                              std::to_string(n));
    }
    MatX dev = blocks[i] * blocks[i].transpose();
    dev.diagonal().array() -= 1.0;
    const double maxDev = dev.cwiseAbs().maxCoeff();
    if (maxDev > tol) {
      throw NotOrthonormal("ortho_collection: block " + std::to_string(i) +
                           " deviates from orthonormality by " +
                           std::to_string(maxDev));
    }
  }

  BasisCollection c;
  c.n_ = n;
  const std::size_t m = blocks.size();
  if (labels.empty()) {
    for (std::size_t i = 0; i < m; ++i) labels.push_back("basis" + std::to_string(i));
  } else if (labels.size() != m) {
    throw DimensionMismatch("ortho_collection: label count mismatch");
  }
  c.blocks_ = std::move(blocks);
  c.labels_ = std::move(labels);

  c.crossGram_.resize(m * m);
  for (std::size_t i = 0; i < m; ++i) {
    c.crossGram_[i * m + i] = MatX::Identity(n, n);
    for (std::size_t j = i + 1; j < m; ++j) {
      c.crossGram_[i * m + j].noalias() =
          c.blocks_[i] * c.blocks_[j].transpose();
      c.crossGram_[j * m + i] = c.crossGram_[i * m + j].transpose();
    }
  }
  return c;
}

}  // namespace framedn
