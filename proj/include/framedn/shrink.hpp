#pragma once

#include <optional>
#include <string>

#include "framedn/frame.hpp"
#include "framedn/types.hpp"

namespace framedn {

/// Diagonal gain (shrinkage) vector for frame coefficients.
struct GainVector {
  VecX gamma;            // entries in [0, 1]
  std::string frameRef;  // label of the frame the gains were fit on
  double ridge = 0.0;    // ridge used by the producing solve, 0 if none
};

struct RiskComponents {
  double quadratic = 0.0;  // coefficient quadratic form
  double trace = 0.0;      // trace correction
};

/// Risk value split as risk = sigma^2 n + delta.
struct RiskReport {
  enum class Kind { oracle, sure };
  double delta = 0.0;
  double risk = 0.0;
  Kind kind = Kind::sure;
  std::optional<RiskComponents> components;
};

/// Which algebraic route evaluates a risk formula. The tight route is only
/// valid on frames with alpha() set and exists to cross-check the general
/// one; both must agree to near machine precision on tight frames.
enum class FormulaPath { general, tight };

/// Exact mean squared reconstruction error of the fixed diagonal estimate
/// f_hat = W+ diag(gamma) (theta + eps), eps ~ N(0, sigma^2 U):
///   E||f_hat - f||^2 = u^T U- u + sigma^2 gamma^T (U o U-) gamma,
/// with u = (I - diag(gamma)) theta.
RiskReport oracle_risk(const FrameOperator& f, const VecX& theta,
                       const VecX& gamma, double sigma,
                       FormulaPath path = FormulaPath::general);

/// Best fixed diagonal gains for known theta: solves
///   (theta theta^T o U- + sigma^2 U o U- + ridge I) gamma
///     = (theta theta^T o U-) e
/// and clips to [0, 1].
GainVector ideal_gain(const FrameOperator& f, const VecX& theta, double sigma,
                      double ridge = 0.0);

/// Componentwise oracle gains gamma_i = theta_i^2 / (theta_i^2 + sigma^2),
/// the structure-blind counterpart of ideal_gain.
GainVector ideal_gain_diag(const VecX& theta, double sigma);

/// Data-driven gains: solves
///   (y y^T o U- + ridge I) gamma = ((y y^T - sigma^2 U) o U-) e
/// and clips to [0, 1].
GainVector empirical_gain(const FrameOperator& f, const VecX& y, double sigma,
                          double ridge = 0.0);

/// Componentwise empirical filter
/// gamma_i = clip((y_i^2 - sigma^2) / (y_i^2 + ridge)), with gamma_i = 0 at
/// y_i = 0. Equals empirical_gain on an identity frame at the same ridge.
GainVector empirical_wiener(const VecX& y, double sigma, double ridge = 0.0);

/// Unbiased risk estimate for a FIXED diagonal gain:
///   risk = sigma^2 n + u^T U- u - 2 sigma^2 tr[U- U (I - diag(gamma))],
/// u = (I - diag(gamma)) y.
RiskReport sure_linear(const FrameOperator& f, const VecX& y, const VecX& gamma,
                       double sigma, FormulaPath path = FormulaPath::general);

}  // namespace framedn
