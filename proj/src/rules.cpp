#include "framedn/rules.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace framedn {

namespace {

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void check_threshold_vec(const VecX& t) {
  for (Index i = 0; i < t.size(); ++i) {
    if (!(t[i] >= 0.0)) {
      throw OutOfRange("threshold entry " + std::to_string(i) +
                       " must be nonnegative");
    }
  }
}

void check_gain_vec(const VecX& g) {
  for (Index i = 0; i < g.size(); ++i) {
    if (!(g[i] >= 0.0 && g[i] <= 1.0)) {
      throw OutOfRange("gain entry " + std::to_string(i) + " outside [0, 1]");
    }
  }
}

double require_alpha(const FrameOperator& f) {
  if (!f.alpha()) {
    throw Error("tight formula path requested on a frame that is not tight");
  }
  return *f.alpha();
}

}  // namespace

ShrinkRule ShrinkRule::linear(VecX gamma, std::string frameRef) {
  check_gain_vec(gamma);
  ShrinkRule r;
  r.kind = RuleKind::linearGain;
  r.gamma = std::move(gamma);
  r.appliesTo = std::move(frameRef);
  return r;
}

ShrinkRule ShrinkRule::soft(VecX thresholds, std::string frameRef) {
  check_threshold_vec(thresholds);
  ShrinkRule r;
  r.kind = RuleKind::softThreshold;
  r.thresholds = std::move(thresholds);
  r.appliesTo = std::move(frameRef);
  return r;
}

ShrinkRule ShrinkRule::soft_uniform(Index n, double t, std::string frameRef) {
  return soft(VecX::Constant(n, t), std::move(frameRef));
}

ShrinkRule ShrinkRule::hard(VecX thresholds, std::string frameRef) {
  check_threshold_vec(thresholds);
  ShrinkRule r;
  r.kind = RuleKind::hardThreshold;
  r.thresholds = std::move(thresholds);
  r.appliesTo = std::move(frameRef);
  return r;
}

ShrinkRule ShrinkRule::hard_uniform(Index n, double t, std::string frameRef) {
  return hard(VecX::Constant(n, t), std::move(frameRef));
}

VecX apply_rule(const ShrinkRule& rule, const VecX& y) {
  VecX out(y.size());
  switch (rule.kind) {
    case RuleKind::linearGain:
      if (rule.gamma.size() != y.size()) {
        throw DimensionMismatch("apply_rule: gain length mismatch");
      }
      out = rule.gamma.cwiseProduct(y);
      break;
    case RuleKind::softThreshold:
      if (rule.thresholds.size() != y.size()) {
        throw DimensionMismatch("apply_rule: threshold length mismatch");
      }
      for (Index i = 0; i < y.size(); ++i) {
        out[i] = sgn(y[i]) * std::max(std::abs(y[i]) - rule.thresholds[i], 0.0);
      }
      break;
    case RuleKind::hardThreshold:
      if (rule.thresholds.size() != y.size()) {
        throw DimensionMismatch("apply_rule: threshold length mismatch");
      }
      for (Index i = 0; i < y.size(); ++i) {
        out[i] = std::abs(y[i]) > rule.thresholds[i] ? y[i] : 0.0;
      }
      break;
  }
  return out;
}

RuleJacobian rule_jacobian(const ShrinkRule& rule, const VecX& y) {
  RuleJacobian z;
  z.diag.resize(y.size());
  switch (rule.kind) {
    case RuleKind::linearGain:
      if (rule.gamma.size() != y.size()) {
        throw DimensionMismatch("rule_jacobian: gain length mismatch");
      }
      z.diag = rule.gamma.array() - 1.0;
      break;
    case RuleKind::softThreshold:
    case RuleKind::hardThreshold:
      if (rule.thresholds.size() != y.size()) {
        throw DimensionMismatch("rule_jacobian: threshold length mismatch");
      }
      for (Index i = 0; i < y.size(); ++i) {
        z.diag[i] = std::abs(y[i]) < rule.thresholds[i] ? -1.0 : 0.0;
      }
      break;
  }
  return z;
}

RiskReport sure_general(const FrameOperator& f, const VecX& g,
                        const RuleJacobian& z, double sigma, FormulaPath path) {
  if (g.size() != f.rows()) {
    throw DimensionMismatch("sure_general: displacement length mismatch");
  }

  const double s2 = sigma * sigma;
  RiskComponents c;
  if (path == FormulaPath::general) {
    c.quadratic = g.dot(f.dualGramSparse() * g);
    if (z.diagonal()) {
      if (z.diag.size() != f.rows()) {
        throw DimensionMismatch("sure_general: jacobian size mismatch");
      }
      c.trace = 2.0 * s2 * f.dualGramGramDiag().dot(z.diag);
    } else {
      if (z.dense.rows() != f.rows() || z.dense.cols() != f.rows()) {
        throw DimensionMismatch("sure_general: jacobian size mismatch");
      }
      const MatX uz = f.gram() * z.dense;
      c.trace = 2.0 * s2 * f.dualGram().cwiseProduct(uz.transpose()).sum();
    }
  } else {
    const double alpha = require_alpha(f);
    c.quadratic = g.dot(f.gram() * g) / (alpha * alpha);
    if (z.diagonal()) {
      c.trace = 2.0 * s2 / alpha * f.gram().diagonal().dot(z.diag);
    } else {
      c.trace = 2.0 * s2 / alpha * f.gram().cwiseProduct(z.dense.transpose()).sum();
    }
  }

  RiskReport r;
  r.kind = RiskReport::Kind::sure;
  r.delta = c.quadratic + c.trace;
  r.risk = s2 * static_cast<double>(f.cols()) + r.delta;
  r.components = c;
  return r;
}

RiskReport sure_soft(const FrameOperator& f, const VecX& y,
                     const VecX& thresholds, double sigma, FormulaPath path) {
  if (y.size() != f.rows() || thresholds.size() != f.rows()) {
    throw DimensionMismatch("sure_soft: length mismatch");
  }
  check_threshold_vec(thresholds);

  VecX s(y.size());
  for (Index i = 0; i < y.size(); ++i) {
    s[i] = sgn(y[i]) * std::min(std::abs(y[i]), thresholds[i]);
  }
  const double s2 = sigma * sigma;
  RiskComponents c;
  if (path == FormulaPath::general) {
    c.quadratic = s.dot(f.dualGramSparse() * s);
    double kill = 0.0;
    for (Index i = 0; i < y.size(); ++i) {
      if (std::abs(y[i]) < thresholds[i]) kill += f.dualGramGramDiag()[i];
    }
    c.trace = -2.0 * s2 * kill;
  } else {
    const double alpha = require_alpha(f);
    c.quadratic = s.dot(f.gram() * s) / (alpha * alpha);
    double kill = 0.0;
    for (Index i = 0; i < y.size(); ++i) {
      if (std::abs(y[i]) < thresholds[i]) kill += f.gram()(i, i);
    }
    c.trace = -2.0 * s2 / alpha * kill;
  }

  RiskReport r;
  r.kind = RiskReport::Kind::sure;
  r.delta = c.quadratic + c.trace;
  r.risk = s2 * static_cast<double>(f.cols()) + r.delta;
  r.components = c;
  return r;
}

namespace {

// State for the ascending threshold sweep. Coefficients move one at a time
// from the capped side (contributing sgn(y_i) * t) to the kept side
// (contributing y_i); all four quadratic-form scalars and the two
// matrix-vector products are maintained in O(column nnz) per move.
struct SweepState {
  const SpMat* m = nullptr;
  VecX mDiag;
  VecX a, b;    // kept values / capped signs
  VecX p, q;    // M a / M b
  double a2 = 0.0, ab = 0.0, b2 = 0.0;

  void init(const SpMat& mat, const VecX& y) {
    m = &mat;
    mDiag = mat.diagonal();
    a = VecX::Zero(y.size());
    b.resize(y.size());
    for (Index i = 0; i < y.size(); ++i) b[i] = sgn(y[i]);
    p = VecX::Zero(y.size());
    q = mat * b;
    a2 = 0.0;
    ab = 0.0;
    b2 = b.dot(q);
  }

  void move_to_keep(Index i, double yi) {
    const double db = -sgn(yi);
    if (db == 0.0) return;
    const double da = yi;
    b2 += db * (2.0 * q[i] + db * mDiag[i]);
    ab += db * p[i];
    for (SpMat::InnerIterator it(*m, i); it; ++it) q[it.row()] += db * it.value();
    b[i] = 0.0;
    a2 += da * (2.0 * p[i] + da * mDiag[i]);
    ab += da * q[i];
    for (SpMat::InnerIterator it(*m, i); it; ++it) p[it.row()] += da * it.value();
    a[i] = yi;
  }

  double quad_at(double t) const { return a2 + 2.0 * t * ab + t * t * b2; }
};

SpMat sparse_identity(Index n) {
  SpMat id(n, n);
  id.setIdentity();
  return id;
}

}  // namespace

SoftSearchResult optimize_soft_global(const FrameOperator& f, const VecX& y,
                                      double sigma, ThresholdMode mode,
                                      bool refine) {
  if (y.size() != f.rows()) {
    throw DimensionMismatch("optimize_soft_global: length mismatch");
  }
  const Index n = y.size();
  if (y.cwiseAbs().maxCoeff() == 0.0) {
    throw DegenerateSignal("optimize_soft_global: all coefficients are zero");
  }

  const bool frameAware = (mode == ThresholdMode::frameAware);
  const SpMat ident = frameAware ? SpMat() : sparse_identity(n);
  const SpMat& mat = frameAware ? f.dualGramSparse() : ident;
  const VecX killW =
      frameAware ? f.dualGramGramDiag() : VecX::Ones(n);
  const double s2 = sigma * sigma;

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index l, Index r) {
    return std::abs(y[l]) < std::abs(y[r]);
  });
  std::vector<double> sortedAbs(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    sortedAbs[k] = std::abs(y[order[k]]);
  }

  std::vector<double> candidates;
  candidates.reserve(2 * order.size() + 1);
  candidates.push_back(0.0);
  for (std::size_t k = 0; k < sortedAbs.size(); ++k) {
    if (k > 0) candidates.push_back(0.5 * (sortedAbs[k - 1] + sortedAbs[k]));
    candidates.push_back(sortedAbs[k]);
  }

  SweepState st;
  st.init(mat, y);
  double killSum = 0.0;
  std::size_t capPtr = 0, killPtr = 0;

  double bestT = 0.0, bestDelta = 0.0, bestQuad = 0.0, bestKill = 0.0;
  bool haveBest = false;
  for (double t : candidates) {
    while (capPtr < order.size() && sortedAbs[capPtr] <= t) {
      st.move_to_keep(order[capPtr], y[order[capPtr]]);
      ++capPtr;
    }
    while (killPtr < order.size() && sortedAbs[killPtr] < t) {
      killSum += killW[order[killPtr]];
      ++killPtr;
    }
    const double quad = st.quad_at(t);
    const double delta = quad - 2.0 * s2 * killSum;
    if (!haveBest || delta < bestDelta) {
      haveBest = true;
      bestT = t;
      bestDelta = delta;
      bestQuad = quad;
      bestKill = killSum;
    }
  }

  auto evalDirect = [&](double t) {
    VecX s(n);
    for (Index i = 0; i < n; ++i) {
      s[i] = sgn(y[i]) * std::min(std::abs(y[i]), t);
    }
    double kill = 0.0;
    for (Index i = 0; i < n; ++i) {
      if (std::abs(y[i]) < t) kill += killW[i];
    }
    const double quad = s.dot(mat * s);
    return std::make_pair(quad, kill);
  };

  if (refine) {
    // Golden-section pass inside the bracket around the best grid point.
    auto pos = std::lower_bound(candidates.begin(), candidates.end(), bestT);
    double lo = (pos == candidates.begin()) ? bestT : *(pos - 1);
    double hi = (pos + 1 == candidates.end()) ? bestT : *(pos + 1);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c1 = hi - gr * (hi - lo);
    double c2 = lo + gr * (hi - lo);
    auto score = [&](double t) {
      auto [quad, kill] = evalDirect(t);
      return quad - 2.0 * s2 * kill;
    };
    double f1 = score(c1), f2 = score(c2);
    for (int it = 0; it < 60 && hi - lo > 1e-12 * (1.0 + hi); ++it) {
      if (f1 <= f2) {
        hi = c2;
        c2 = c1;
        f2 = f1;
        c1 = hi - gr * (hi - lo);
        f1 = score(c1);
      } else {
        lo = c1;
        c1 = c2;
        f1 = f2;
        c2 = lo + gr * (hi - lo);
        f2 = score(c2);
      }
    }
    const double tMid = 0.5 * (lo + hi);
    auto [quad, kill] = evalDirect(tMid);
    const double delta = quad - 2.0 * s2 * kill;
    if (delta < bestDelta) {
      bestT = tMid;
      bestDelta = delta;
      bestQuad = quad;
      bestKill = kill;
    }
  }

  SoftSearchResult res;
  res.threshold = bestT;
  res.report.kind = RiskReport::Kind::sure;
  res.report.delta = bestDelta;
  res.report.risk = s2 * static_cast<double>(f.cols()) + bestDelta;
  res.report.components = RiskComponents{bestQuad, -2.0 * s2 * bestKill};
  return res;
}

double universal_threshold(double sigma, Index count, ThresholdMode mode) {
  if (count < 3) {
    throw InvalidN("universal_threshold: need at least 3 coefficients");
  }
  if (!(sigma >= 0.0)) {
    throw OutOfRange("universal_threshold: sigma must be nonnegative");
  }
  const double logN = std::log(static_cast<double>(count));
  const double base = sigma * std::sqrt(2.0 * logN);
  if (mode == ThresholdMode::orthonormal) return base;
  const double z = M_PI / std::sqrt(6.0);
  const double corr =
      sigma * (2.0 * z - std::log(logN) - std::log(M_PI)) /
      (2.0 * std::sqrt(2.0 * logN));
  return base + corr;
}

GreedyResult greedy_hard(const FrameOperator& f, const VecX& y, double sigma) {
  if (y.size() != f.rows()) {
    throw DimensionMismatch("greedy_hard: length mismatch");
  }
  const Index n = y.size();
  const double s2 = sigma * sigma;

  // Scored interaction matrix with halved diagonal, on the pruned pattern.
  SpMat h = f.dualGramSparse();
  for (Index j = 0; j < h.outerSize(); ++j) {
    for (SpMat::InnerIterator it(h, j); it; ++it) {
      if (it.row() == it.col()) {
        const double yi = y[it.row()];
        it.valueRef() =
            0.5 * (yi * yi * it.value() - 2.0 * s2 * f.dualGramGramDiag()[it.row()]);
      } else {
        it.valueRef() = y[it.row()] * y[it.col()] * it.value();
      }
    }
  }

  VecX colSums = VecX::Zero(n);
  for (Index j = 0; j < h.outerSize(); ++j) {
    double cs = 0.0;
    for (SpMat::InnerIterator it(h, j); it; ++it) cs += it.value();
    colSums[j] = cs;
  }

  std::vector<bool> alive(static_cast<std::size_t>(n), true);
  GreedyResult res;
  res.gamma.gamma = VecX::Zero(n);
  res.gamma.frameRef = f.label();

  while (true) {
    Index best = -1;
    double bestSum = 0.0;
    for (Index l = 0; l < n; ++l) {
      if (alive[static_cast<std::size_t>(l)] && colSums[l] > bestSum) {
        best = l;
        bestSum = colSums[l];
      }
    }
    if (best < 0) break;

    alive[static_cast<std::size_t>(best)] = false;
    res.gamma.gamma[best] = 1.0;
    res.state.removedColumnSums.push_back(bestSum);
    for (SpMat::InnerIterator it(h, best); it; ++it) {
      if (it.row() != best) colSums[it.row()] -= it.value();
    }
  }

  for (Index i = 0; i < n; ++i) {
    if (alive[static_cast<std::size_t>(i)]) res.state.killed.push_back(i);
  }
  res.report = sure_linear(f, y, res.gamma.gamma, sigma);
  return res;
}

}  // namespace framedn
