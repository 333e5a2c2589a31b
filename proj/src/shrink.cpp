#include "framedn/shrink.hpp"

#include <Eigen/SVD>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <memory>
#include <unordered_map>

namespace framedn {

namespace {

void check_coeff_size(const FrameOperator& f, const VecX& v, const char* what) {
  if (v.size() != f.rows()) {
    throw DimensionMismatch(std::string(what) + ": expected length " +
                            std::to_string(f.rows()) + ", got " +
                            std::to_string(v.size()));
  }
}

void check_gamma_range(const VecX& gamma) {
  for (Index i = 0; i < gamma.size(); ++i) {
    if (!(gamma[i] >= -1e-12 && gamma[i] <= 1.0 + 1e-12)) {
      throw OutOfRange("gain entry " + std::to_string(i) + " = " +
                       std::to_string(gamma[i]) + " outside [0, 1]");
    }
  }
}

double require_alpha(const FrameOperator& f) {
  if (!f.alpha()) {
    throw Error("tight formula path requested on a frame that is not tight");
  }
  return *f.alpha();
}

// Per-thread factorization cache. The sparsity pattern of the gain systems
// is the frame's pruned dual-Gram pattern, fixed per frame, so the symbolic
// analysis is reused across Monte-Carlo replicates.
struct SolverCacheEntry {
  Eigen::SimplicialLDLT<SpMat> ldlt;
  bool analyzed = false;
};

SolverCacheEntry& solver_cache(const FrameOperator& f) {
  thread_local std::unordered_map<std::uint64_t,
                                  std::unique_ptr<SolverCacheEntry>>
      cache;
  if (cache.size() > 64) cache.clear();
  auto& slot = cache[f.uid()];
  if (!slot) slot = std::make_unique<SolverCacheEntry>();
  return *slot;
}

// Solve A gamma = b for a symmetric positive semidefinite A given on the
// frame's pattern. Tries the cached sparse LDLT, then a dense LDLT, then
// dense least squares; a residual check guards each step because the
// system can be consistent yet singular (rank of U- is n < N).
VecX solve_gain_system(const FrameOperator& f, const SpMat& a, const VecX& b) {
  const double bScale = b.cwiseAbs().maxCoeff();
  double aScale = 0.0;
  for (Index k = 0; k < a.nonZeros(); ++k) {
    aScale = std::max(aScale, std::abs(a.valuePtr()[k]));
  }
  const double denom = std::max(bScale + aScale, 1e-300);
  auto acceptable = [&](const VecX& g) {
    if (!g.allFinite()) return false;
    const double res = (a * g - b).cwiseAbs().maxCoeff();
    return res <= 1e-7 * denom;
  };

  SolverCacheEntry& entry = solver_cache(f);
  if (!entry.analyzed) {
    entry.ldlt.analyzePattern(a);
    entry.analyzed = true;
  }
  entry.ldlt.factorize(a);
  if (entry.ldlt.info() == Eigen::Success) {
    VecX g = entry.ldlt.solve(b);
    if (acceptable(g)) return g;
  }

  MatX ad(a);
  Eigen::LDLT<MatX> dense(ad);
  if (dense.info() == Eigen::Success) {
    VecX g = dense.solve(b);
    if (acceptable(g)) return g;
  }

  Eigen::BDCSVD<MatX> svd(ad, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-12);
  VecX g = svd.solve(b);
  if (!g.allFinite()) {
    throw SolveFailure("gain solve produced non-finite values");
  }
  return g;
}

VecX clip_unit(VecX g) {
  for (Index i = 0; i < g.size(); ++i) {
    g[i] = std::min(1.0, std::max(0.0, g[i]));
  }
  return g;
}

}  // namespace

RiskReport oracle_risk(const FrameOperator& f, const VecX& theta,
                       const VecX& gamma, double sigma, FormulaPath path) {
  check_coeff_size(f, theta, "oracle_risk theta");
  check_coeff_size(f, gamma, "oracle_risk gamma");
  check_gamma_range(gamma);

  const VecX u = (VecX::Ones(gamma.size()) - gamma).cwiseProduct(theta);
  RiskComponents c;
  if (path == FormulaPath::general) {
    c.quadratic = u.dot(f.dualGram() * u);
    const VecX gu = f.gram().cwiseProduct(f.dualGram()) * gamma;
    c.trace = sigma * sigma * gamma.dot(gu);
  } else {
    const double alpha = require_alpha(f);
    const double inv2 = 1.0 / (alpha * alpha);
    c.quadratic = inv2 * u.dot(f.gram() * u);
    const VecX gu = f.gram().cwiseProduct(f.gram()) * gamma;
    c.trace = sigma * sigma * inv2 * gamma.dot(gu);
  }

  RiskReport r;
  r.kind = RiskReport::Kind::oracle;
  r.risk = c.quadratic + c.trace;
  r.delta = r.risk - sigma * sigma * static_cast<double>(f.cols());
  r.components = c;
  return r;
}

RiskReport sure_linear(const FrameOperator& f, const VecX& y, const VecX& gamma,
                       double sigma, FormulaPath path) {
  check_coeff_size(f, y, "sure_linear y");
  check_coeff_size(f, gamma, "sure_linear gamma");
  check_gamma_range(gamma);

  const VecX keep = VecX::Ones(gamma.size()) - gamma;
  const VecX u = keep.cwiseProduct(y);
  RiskComponents c;
  if (path == FormulaPath::general) {
    c.quadratic = u.dot(f.dualGram() * u);
    c.trace = -2.0 * sigma * sigma * f.dualGramGramDiag().dot(keep);
  } else {
    const double alpha = require_alpha(f);
    c.quadratic = u.dot(f.gram() * u) / (alpha * alpha);
    c.trace =
        -2.0 * sigma * sigma / alpha * f.gram().diagonal().dot(keep);
  }

  RiskReport r;
  r.kind = RiskReport::Kind::sure;
  r.delta = c.quadratic + c.trace;
  r.risk = sigma * sigma * static_cast<double>(f.cols()) + r.delta;
  r.components = c;
  return r;
}

GainVector ideal_gain(const FrameOperator& f, const VecX& theta, double sigma,
                      double ridge) {
  check_coeff_size(f, theta, "ideal_gain theta");
  if (ridge < 0.0) throw OutOfRange("ideal_gain: ridge must be nonnegative");

  // System values live on the pruned dual-Gram pattern; the rank-one part
  // theta theta^T is never materialized.
  SpMat a = f.dualGramSparse();
  const SpMat& had = f.hadamard();
  const double s2 = sigma * sigma;
  for (Index j = 0; j < a.outerSize(); ++j) {
    SpMat::InnerIterator ih(had, j);
    for (SpMat::InnerIterator ia(a, j); ia; ++ia, ++ih) {
      double v = theta[ia.row()] * theta[ia.col()] * ia.value() + s2 * ih.value();
      if (ia.row() == ia.col()) v += ridge;
      ia.valueRef() = v;
    }
  }
  const VecX b = theta.cwiseProduct(f.dualGramSparse() * theta);

  GainVector g;
  g.gamma = clip_unit(solve_gain_system(f, a, b));
  g.frameRef = f.label();
  g.ridge = ridge;
  return g;
}

GainVector ideal_gain_diag(const VecX& theta, double sigma) {
  GainVector g;
  g.gamma.resize(theta.size());
  for (Index i = 0; i < theta.size(); ++i) {
    const double t2 = theta[i] * theta[i];
    const double den = t2 + sigma * sigma;
    g.gamma[i] = den > 0.0 ? t2 / den : 0.0;
  }
  g.frameRef = "identity";
  return g;
}

GainVector empirical_gain(const FrameOperator& f, const VecX& y, double sigma,
                          double ridge) {
  check_coeff_size(f, y, "empirical_gain y");
  if (ridge < 0.0) throw OutOfRange("empirical_gain: ridge must be nonnegative");

  SpMat a = f.dualGramSparse();
  for (Index j = 0; j < a.outerSize(); ++j) {
    for (SpMat::InnerIterator ia(a, j); ia; ++ia) {
      double v = y[ia.row()] * y[ia.col()] * ia.value();
      if (ia.row() == ia.col()) v += ridge;
      ia.valueRef() = v;
    }
  }
  const double s2 = sigma * sigma;
  const VecX b =
      y.cwiseProduct(f.dualGramSparse() * y) - s2 * f.dualGramGramDiag();

  GainVector g;
  g.gamma = clip_unit(solve_gain_system(f, a, b));
  g.frameRef = f.label();
  g.ridge = ridge;
  return g;
}

GainVector empirical_wiener(const VecX& y, double sigma, double ridge) {
  if (ridge < 0.0) throw OutOfRange("empirical_wiener: ridge must be nonnegative");
  GainVector g;
  g.gamma.resize(y.size());
  const double s2 = sigma * sigma;
  for (Index i = 0; i < y.size(); ++i) {
    const double y2 = y[i] * y[i];
    if (y2 == 0.0) {
      g.gamma[i] = 0.0;
      continue;
    }
    const double v = (y2 - s2) / (y2 + ridge);
    g.gamma[i] = std::min(1.0, std::max(0.0, v));
  }
  g.frameRef = "identity";
  g.ridge = ridge;
  return g;
}

}  // namespace framedn
