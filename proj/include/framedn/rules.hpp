#pragma once

#include <string>
#include <vector>

#include "framedn/frame.hpp"
#include "framedn/shrink.hpp"
#include "framedn/types.hpp"

namespace framedn {

enum class RuleKind { linearGain, softThreshold, hardThreshold };

/// A coefficient shrinkage rule. Exactly one payload is populated:
/// gains for linearGain, thresholds for the two threshold kinds.
struct ShrinkRule {
  RuleKind kind = RuleKind::linearGain;
  VecX gamma;       // linearGain payload, entries in [0, 1]
  VecX thresholds;  // threshold payload, entries >= 0
  std::string appliesTo;

  static ShrinkRule linear(VecX gamma, std::string frameRef = "");
  static ShrinkRule soft(VecX thresholds, std::string frameRef = "");
  static ShrinkRule soft_uniform(Index n, double t, std::string frameRef = "");
  static ShrinkRule hard(VecX thresholds, std::string frameRef = "");
  static ShrinkRule hard_uniform(Index n, double t, std::string frameRef = "");
};

/// Jacobian Z of the displacement g(y) = theta_hat(y) - y, with
/// Z_ij = d g_j / d y_i. Either diagonal or dense.
struct RuleJacobian {
  VecX diag;   // used when dense is empty
  MatX dense;  // used when nonempty; dense(i, j) = d g_j / d y_i
  bool diagonal() const { return dense.size() == 0; }
};

/// theta_hat = rule applied to y componentwise.
VecX apply_rule(const ShrinkRule& rule, const VecX& y);

/// Jacobian of the displacement of `rule` at y (diagonal for all three
/// kinds; threshold kinds differentiate away from |y_i| = t_i).
RuleJacobian rule_jacobian(const ShrinkRule& rule, const VecX& y);

/// Unbiased risk estimate for an almost-differentiable displacement g with
/// Jacobian Z:  risk = sigma^2 n + g^T U- g + 2 sigma^2 tr[U- U Z].
RiskReport sure_general(const FrameOperator& f, const VecX& g,
                        const RuleJacobian& z, double sigma,
                        FormulaPath path = FormulaPath::general);

/// Soft-threshold specialization with per-coefficient thresholds:
///   delta = s^T U- s - 2 sigma^2 sum_i (U- U)_ii 1(|y_i| < t_i),
/// s_i = sgn(y_i) min(|y_i|, t_i), sgn(0) = 0.
RiskReport sure_soft(const FrameOperator& f, const VecX& y,
                     const VecX& thresholds, double sigma,
                     FormulaPath path = FormulaPath::general);

/// Objective used when searching a single global threshold.
/// frameAware scores with the structured soft-threshold risk above;
/// orthonormal scores with the classical estimate
///   sum_i min(y_i^2, t^2) - 2 sigma^2 #{|y_i| < t}.
enum class ThresholdMode { frameAware, orthonormal };

struct SoftSearchResult {
  double threshold = 0.0;
  RiskReport report;
};

/// Exact minimization of the selected objective over the candidate grid
/// {0} union sorted{|y_i|} union midpoints of consecutive sorted values,
/// ties toward the smaller threshold. With `refine`, a golden-section pass
/// narrows the best bracket. Runs in O(nnz(U-)) via an incremental sweep.
SoftSearchResult optimize_soft_global(const FrameOperator& f, const VecX& y,
                                      double sigma, ThresholdMode mode,
                                      bool refine = false);

/// Data-independent threshold for `count` coefficients:
///   orthonormal: sigma sqrt(2 log count)
///   frameAware:  adds sigma (2 z - log log count - log pi)
///                / (2 sqrt(2 log count)), z = pi/sqrt(6).
/// Natural logarithms. Requires count >= 3 (InvalidN otherwise).
double universal_threshold(double sigma, Index count, ThresholdMode mode);

/// Internals of a greedy run, exposed for inspection.
struct GreedyState {
  std::vector<Index> killed;             // final kill set J (gamma = 0)
  std::vector<double> removedColumnSums; // positive column sum at each keep step
};

struct GreedyResult {
  GainVector gamma;  // binary entries
  RiskReport report; // risk of the selected keep/kill pattern
  GreedyState state;
};

/// Greedy binary gain selection. Starts from gamma = 0 and repeatedly keeps
/// the coefficient whose column sum of the scored interaction matrix
///   H_ij = y_i y_j U-_ij (i != j),  H_ii = y_i^2 U-_ii - 2 sigma^2 (U- U)_ii
/// (diagonal halved for scoring) is largest positive; each keep strictly
/// decreases the risk estimate sum_{i,j in J} H_ij.
GreedyResult greedy_hard(const FrameOperator& f, const VecX& y, double sigma);

}  // namespace framedn
