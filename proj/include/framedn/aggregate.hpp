#pragma once

#include <optional>
#include <vector>

#include "framedn/frame.hpp"
#include "framedn/rules.hpp"
#include "framedn/shrink.hpp"
#include "framedn/types.hpp"

namespace framedn {

/// Aggregation weights over the bases of a collection.
struct WeightVector {
  VecX lambda;                  // sums to 1; optimizers keep entries >= 0
  bool dataDependent = false;   // lambda was computed from the observation
  std::optional<VecX> sourceY;  // stacked coefficients behind the weights
  bool degenerate = false;      // weight QP needed a ridge to stay solvable
};

enum class EtaKind { sure, custom };

/// Configuration of the exponential weighting scheme
///   lambda_i = pi_i exp(-beta eta_i) / sum_l pi_l exp(-beta eta_l).
struct ExpWeightConfig {
  VecX pi;                     // prior weights, entries >= 0; empty = uniform
  std::optional<double> beta;  // temperature >= 0; empty = 1/(2 sigma^2),
                               // resolved where sigma is available
  EtaKind etaKind = EtaKind::sure;
};

/// Resolved temperature: cfg.beta when set, else 1/(2 sigma^2).
double resolve_beta(const ExpWeightConfig& cfg, double sigma);

/// One basis worth of estimator state: the estimate theta_hat = y + g, the
/// displacement's diagonal Jacobian, and the per-basis unbiased risk value
/// r = sigma^2 n + ||g||^2 + 2 sigma^2 tr(Z) together with its gradient.
struct BlockEstimate {
  VecX thetaHat;
  VecX g;
  VecX zDiag;
  double trZ = 0.0;
  double risk = 0.0;
  VecX riskGrad;
  std::optional<double> eta;   // custom aggregation score, when used
  std::optional<VecX> etaGrad; // its gradient in this basis's coefficients
};

/// Per-basis estimate builders for the shipped rules.
BlockEstimate block_estimate_linear(const VecX& y, const VecX& gamma,
                                    double sigma);
BlockEstimate block_estimate_soft(const VecX& y, const VecX& thresholds,
                                  double sigma);
BlockEstimate block_estimate_soft(const VecX& y, double threshold,
                                  double sigma);
BlockEstimate block_estimate_hard(const VecX& y, const VecX& thresholds,
                                  double sigma);

/// f_hat = sum_i lambda_i B_i^T theta_hat^(i).
/// Throws WeightSumViolation when |sum lambda - 1| > 1e-9.
VecX reconstruct_weighted(const BasisCollection& bases,
                          const std::vector<BlockEstimate>& est,
                          const WeightVector& w);

/// Risk estimate for fixed (data-independent) weights:
///   delta = sum_ij lambda_i lambda_j g^(i)T U^(i,j) g^(j)
///         + 2 sigma^2 sum_i lambda_i tr(Z^(i,i)),
///   risk  = sigma^2 n + delta.
RiskReport delta_di(const BasisCollection& bases,
                    const std::vector<BlockEstimate>& est,
                    const WeightVector& w, double sigma);

/// Minimizes the delta_di quadratic over the simplex {sum = 1, lambda >= 0}.
/// Closed-form equality-constrained solve plus an active-set loop that clamps
/// the most negative entry per round. An indefinite or singular quadratic is
/// reported through the degenerate flag and re-solved with a small ridge.
WeightVector optimize_weights_di(const BasisCollection& bases,
                                 const std::vector<BlockEstimate>& est,
                                 double sigma);

/// Exponential weights for the given score vector. Overflow-safe through
/// subtraction of the smallest score over the positive-prior support.
/// Throws AllZeroPrior when the prior has no positive entry, OutOfRange for
/// a negative temperature or an unset one.
WeightVector exp_weights(const ExpWeightConfig& cfg, const VecX& eta);

/// delta_di plus both forms of the data-dependence correction.
struct AggregateRisk {
  RiskReport report;      // risk = sigma^2 n + delta_di + delta0 (form 1)
  WeightVector lambda;
  double delta0Form1 = 0.0;
  double delta0Form2 = 0.0;  // cross-Gram evaluation; agrees within 1e-9
};

/// Risk estimate with exponentially weighted, data-dependent weights:
///   delta = delta_di(lambda(y)) + delta0,
///   delta0 = 2 sigma^2 beta sum_i lambda_i [grad eta_i]^T (B_i f_hat
///            - theta_hat^(i)).
/// Scores are the per-basis risk values (EtaKind::sure) or the custom eta
/// fields. Throws GradientMissing when a needed score or gradient is absent.
AggregateRisk delta_dd(const BasisCollection& bases,
                       const std::vector<BlockEstimate>& est,
                       const ExpWeightConfig& cfg, double sigma);

/// Gradient of the per-basis risk value r(y) = sigma^2 n + ||g||^2
/// + 2 sigma^2 tr(Z):  grad r = 2 Z g + 2 sigma^2 d, where d_k =
/// sum_l d^2 g_l / (dy_l dy_k). The shipped rules all have d = 0; pass
/// secondOrderVanishes = false for other rules, then omitting d throws
/// GradientMissing.
VecX sure_gradient(const VecX& g, const RuleJacobian& z, double sigma,
                   const VecX* d = nullptr, bool secondOrderVanishes = true);

/// Single-draw cross-risk sample errI^T U^(i,j) errJ, a Monte-Carlo
/// diagnostic for the off-diagonal interaction between two bases.
double cross_risk_sample(const BasisCollection& bases, int i, int j,
                         const VecX& errI, const VecX& errJ);

}  // namespace framedn
