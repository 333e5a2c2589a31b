#include "framedn/aggregate.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace framedn {

namespace {

void check_blocks(const BasisCollection& bases,
                  const std::vector<BlockEstimate>& est) {
  if (static_cast<int>(est.size()) != bases.count()) {
    throw DimensionMismatch("block estimate count does not match basis count");
  }
  for (const auto& e : est) {
    if (e.thetaHat.size() != bases.n() || e.g.size() != bases.n()) {
      throw DimensionMismatch("block estimate length does not match n");
    }
  }
}

struct QuadData {
  MatX grams;  // G_ij = g^(i)T U^(i,j) g^(j)
  VecX traces; // c_i = tr Z^(i,i)
};

QuadData build_quad(const BasisCollection& bases,
                    const std::vector<BlockEstimate>& est) {
  const int m = bases.count();
  std::vector<VecX> back(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    back[static_cast<std::size_t>(i)] = bases.synthesize_block(i, est[i].g);
  }
  QuadData q;
  q.grams.resize(m, m);
  q.traces.resize(m);
  for (int i = 0; i < m; ++i) {
    q.traces[i] = est[static_cast<std::size_t>(i)].trZ;
    for (int j = i; j < m; ++j) {
      const double v = back[static_cast<std::size_t>(i)]
                           .dot(back[static_cast<std::size_t>(j)]);
      q.grams(i, j) = v;
      q.grams(j, i) = v;
    }
  }
  return q;
}

BlockEstimate finish_block(const VecX& y, VecX thetaHat, VecX zDiag,
                           double sigma) {
  BlockEstimate b;
  b.thetaHat = std::move(thetaHat);
  b.g = b.thetaHat - y;
  b.zDiag = std::move(zDiag);
  b.trZ = b.zDiag.sum();
  const double s2 = sigma * sigma;
  b.risk = s2 * static_cast<double>(y.size()) + b.g.squaredNorm() +
           2.0 * s2 * b.trZ;
  RuleJacobian z;
  z.diag = b.zDiag;
  b.riskGrad = sure_gradient(b.g, z, sigma);
  return b;
}

}  // namespace

double resolve_beta(const ExpWeightConfig& cfg, double sigma) {
  if (cfg.beta) {
    if (!(*cfg.beta >= 0.0)) {
      throw OutOfRange("temperature beta must be nonnegative");
    }
    return *cfg.beta;
  }
  if (!(sigma > 0.0)) {
    throw OutOfRange("default temperature needs sigma > 0");
  }
  return 1.0 / (2.0 * sigma * sigma);
}

BlockEstimate block_estimate_linear(const VecX& y, const VecX& gamma,
                                    double sigma) {
  const ShrinkRule rule = ShrinkRule::linear(gamma);
  return finish_block(y, apply_rule(rule, y), rule_jacobian(rule, y).diag,
                      sigma);
}

BlockEstimate block_estimate_soft(const VecX& y, const VecX& thresholds,
                                  double sigma) {
  const ShrinkRule rule = ShrinkRule::soft(thresholds);
  return finish_block(y, apply_rule(rule, y), rule_jacobian(rule, y).diag,
                      sigma);
}

BlockEstimate block_estimate_soft(const VecX& y, double threshold,
                                  double sigma) {
  return block_estimate_soft(y, VecX::Constant(y.size(), threshold), sigma);
}

BlockEstimate block_estimate_hard(const VecX& y, const VecX& thresholds,
                                  double sigma) {
  const ShrinkRule rule = ShrinkRule::hard(thresholds);
  return finish_block(y, apply_rule(rule, y), rule_jacobian(rule, y).diag,
                      sigma);
}

VecX reconstruct_weighted(const BasisCollection& bases,
                          const std::vector<BlockEstimate>& est,
                          const WeightVector& w) {
  check_blocks(bases, est);
  if (w.lambda.size() != bases.count()) {
    throw DimensionMismatch("weight length does not match basis count");
  }
  if (std::abs(w.lambda.sum() - 1.0) > 1e-9) {
    throw WeightSumViolation("weights must sum to one");
  }
  VecX f = VecX::Zero(bases.n());
  for (int i = 0; i < bases.count(); ++i) {
    if (w.lambda[i] != 0.0) {
      f += w.lambda[i] *
           bases.synthesize_block(i, est[static_cast<std::size_t>(i)].thetaHat);
    }
  }
  return f;
}

RiskReport delta_di(const BasisCollection& bases,
                    const std::vector<BlockEstimate>& est,
                    const WeightVector& w, double sigma) {
  check_blocks(bases, est);
  if (w.lambda.size() != bases.count()) {
    throw DimensionMismatch("weight length does not match basis count");
  }
  const QuadData q = build_quad(bases, est);
  const double s2 = sigma * sigma;
  RiskComponents c;
  c.quadratic = w.lambda.dot(q.grams * w.lambda);
  c.trace = 2.0 * s2 * q.traces.dot(w.lambda);
  RiskReport r;
  r.kind = RiskReport::Kind::sure;
  r.delta = c.quadratic + c.trace;
  r.risk = s2 * static_cast<double>(bases.n()) + r.delta;
  r.components = c;
  return r;
}

WeightVector optimize_weights_di(const BasisCollection& bases,
                                 const std::vector<BlockEstimate>& est,
                                 double sigma) {
  check_blocks(bases, est);
  const int m = bases.count();
  if (m < 2) {
    throw DimensionMismatch("weight optimization needs at least two bases");
  }
  const QuadData q = build_quad(bases, est);
  const double s2 = sigma * sigma;

  const double scale = std::max(1.0, q.grams.cwiseAbs().maxCoeff());
  WeightVector out;
  {
    Eigen::SelfAdjointEigenSolver<MatX> eig(q.grams,
                                            Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success ||
        eig.eigenvalues().minCoeff() < -1e-10 * scale) {
      out.degenerate = true;
    }
  }
  double ridge = out.degenerate ? 1e-10 * scale : 0.0;

  std::vector<int> free(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) free[static_cast<std::size_t>(i)] = i;

  VecX lambda = VecX::Zero(m);
  for (int round = 0; round < m; ++round) {
    const int k = static_cast<int>(free.size());
    if (k == 1) {
      lambda.setZero();
      lambda[free[0]] = 1.0;
      break;
    }
    MatX gf(k, k);
    VecX cf(k);
    for (int a = 0; a < k; ++a) {
      cf[a] = q.traces[free[static_cast<std::size_t>(a)]];
      for (int b = 0; b < k; ++b) {
        gf(a, b) = q.grams(free[static_cast<std::size_t>(a)],
                           free[static_cast<std::size_t>(b)]);
      }
    }
    gf.diagonal().array() += ridge;

    Eigen::LDLT<MatX> ldlt(gf);
    VecX u = ldlt.solve(VecX::Ones(k));
    VecX v = ldlt.solve(cf);
    const bool solveOk =
        ldlt.info() == Eigen::Success && u.allFinite() && v.allFinite() &&
        (gf * u - VecX::Ones(k)).cwiseAbs().maxCoeff() <=
            1e-8 * (1.0 + scale) * std::max(1.0, u.cwiseAbs().maxCoeff()) &&
        u.sum() > 0.0;
    if (!solveOk) {
      if (ridge == 0.0) {
        out.degenerate = true;
        ridge = 1e-10 * scale;
        --round;
        continue;
      }
      throw SolveFailure("weight system unsolvable even with ridge");
    }

    const double mu2 = (1.0 + s2 * v.sum()) / u.sum();
    VecX lf = mu2 * u - s2 * v;

    int worst = -1;
    double worstVal = -1e-12;
    for (int a = 0; a < k; ++a) {
      if (lf[a] < worstVal) {
        worst = a;
        worstVal = lf[a];
      }
    }
    if (worst < 0) {
      lambda.setZero();
      for (int a = 0; a < k; ++a) {
        lambda[free[static_cast<std::size_t>(a)]] = std::max(lf[a], 0.0);
      }
      break;
    }
    free.erase(free.begin() + worst);
  }

  lambda /= lambda.sum();
  out.lambda = lambda;
  return out;
}

WeightVector exp_weights(const ExpWeightConfig& cfg, const VecX& eta) {
  const Index m = eta.size();
  if (m < 1) throw DimensionMismatch("empty score vector");
  VecX pi = cfg.pi.size() == 0 ? VecX::Ones(m) : cfg.pi;
  if (pi.size() != m) {
    throw DimensionMismatch("prior length does not match score length");
  }
  for (Index i = 0; i < m; ++i) {
    if (!(pi[i] >= 0.0)) throw OutOfRange("prior entries must be nonnegative");
  }
  if (pi.maxCoeff() <= 0.0) {
    throw AllZeroPrior("prior has no positive entry");
  }
  if (!cfg.beta) {
    throw OutOfRange("temperature unset; set beta or resolve it with sigma");
  }
  const double beta = *cfg.beta;
  if (!(beta >= 0.0)) throw OutOfRange("temperature beta must be nonnegative");

  double etaMin = 0.0;
  bool have = false;
  for (Index i = 0; i < m; ++i) {
    if (pi[i] > 0.0 && (!have || eta[i] < etaMin)) {
      etaMin = eta[i];
      have = true;
    }
  }
  VecX scores(m);
  for (Index i = 0; i < m; ++i) {
    scores[i] = pi[i] > 0.0 ? pi[i] * std::exp(-beta * (eta[i] - etaMin)) : 0.0;
  }
  WeightVector out;
  out.lambda = scores / scores.sum();
  out.dataDependent = beta != 0.0;
  return out;
}

AggregateRisk delta_dd(const BasisCollection& bases,
                       const std::vector<BlockEstimate>& est,
                       const ExpWeightConfig& cfg, double sigma) {
  check_blocks(bases, est);
  const int m = bases.count();
  const Index n = bases.n();
  const double s2 = sigma * sigma;
  const double beta = resolve_beta(cfg, sigma);

  VecX eta(m);
  std::vector<const VecX*> grads(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const auto& e = est[static_cast<std::size_t>(i)];
    if (cfg.etaKind == EtaKind::sure) {
      if (e.riskGrad.size() != n) {
        throw GradientMissing("risk gradient absent for a basis");
      }
      eta[i] = e.risk;
      grads[static_cast<std::size_t>(i)] = &e.riskGrad;
    } else {
      if (!e.eta || !e.etaGrad || e.etaGrad->size() != n) {
        throw GradientMissing("custom score or its gradient absent");
      }
      eta[i] = *e.eta;
      grads[static_cast<std::size_t>(i)] = &*e.etaGrad;
    }
  }

  ExpWeightConfig resolved = cfg;
  resolved.beta = beta;
  WeightVector w = exp_weights(resolved, eta);
  const VecX& lambda = w.lambda;

  const QuadData q = build_quad(bases, est);
  const double quadratic = lambda.dot(q.grams * lambda);
  const double trace = 2.0 * s2 * q.traces.dot(lambda);

  VecX fhat = VecX::Zero(n);
  for (int i = 0; i < m; ++i) {
    fhat += lambda[i] *
            bases.synthesize_block(i, est[static_cast<std::size_t>(i)].thetaHat);
  }
  const std::vector<VecX> fhatBlocks = bases.analyze_blocks(fhat);

  double acc1 = 0.0;
  for (int i = 0; i < m; ++i) {
    acc1 += lambda[i] *
            grads[static_cast<std::size_t>(i)]->dot(
                fhatBlocks[static_cast<std::size_t>(i)] -
                est[static_cast<std::size_t>(i)].thetaHat);
  }
  const double form1 = 2.0 * s2 * beta * acc1;

  double cross = 0.0, straight = 0.0;
  for (int j = 0; j < m; ++j) {
    const VecX& gj = *grads[static_cast<std::size_t>(j)];
    straight += lambda[j] * gj.dot(est[static_cast<std::size_t>(j)].thetaHat);
    for (int i = 0; i < m; ++i) {
      const VecX ui =
          bases.crossGram(j, i) * est[static_cast<std::size_t>(i)].thetaHat;
      cross += lambda[i] * lambda[j] * gj.dot(ui);
    }
  }
  const double form2 = 2.0 * s2 * beta * (cross - straight);

  AggregateRisk out;
  out.delta0Form1 = form1;
  out.delta0Form2 = form2;
  out.report.kind = RiskReport::Kind::sure;
  out.report.delta = quadratic + trace + form1;
  out.report.risk = s2 * static_cast<double>(n) + out.report.delta;

  VecX stackedY(static_cast<Index>(m) * n);
  for (int i = 0; i < m; ++i) {
    const auto& e = est[static_cast<std::size_t>(i)];
    stackedY.segment(static_cast<Index>(i) * n, n) = e.thetaHat - e.g;
  }
  w.sourceY = std::move(stackedY);
  w.dataDependent = beta != 0.0;
  out.lambda = std::move(w);
  return out;
}

VecX sure_gradient(const VecX& g, const RuleJacobian& z, double sigma,
                   const VecX* d, bool secondOrderVanishes) {
  if (d == nullptr && !secondOrderVanishes) {
    throw GradientMissing(
        "second-derivative sum required for this rule but not supplied");
  }
  VecX grad;
  if (z.diagonal()) {
    if (z.diag.size() != g.size()) {
      throw DimensionMismatch("jacobian size does not match displacement");
    }
    grad = 2.0 * z.diag.cwiseProduct(g);
  } else {
    if (z.dense.rows() != g.size() || z.dense.cols() != g.size()) {
      throw DimensionMismatch("jacobian size does not match displacement");
    }
    grad = 2.0 * (z.dense * g);
  }
  if (d != nullptr) {
    if (d->size() != g.size()) {
      throw DimensionMismatch("second-derivative sum has wrong length");
    }
    grad += 2.0 * sigma * sigma * (*d);
  }
  return grad;
}

double cross_risk_sample(const BasisCollection& bases, int i, int j,
                         const VecX& errI, const VecX& errJ) {
  if (errI.size() != bases.n() || errJ.size() != bases.n()) {
    throw DimensionMismatch("error vectors must have length n");
  }
  return errI.dot(bases.crossGram(i, j) * errJ);
}

}  // namespace framedn
