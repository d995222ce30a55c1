// SPDX-License-Identifier: Apache-2.0
#include "isac/gradients.hpp"

#include <algorithm>
#include <cmath>

namespace isac {

namespace {

CMat spd_inverse(const CMat& R) {
  Eigen::LLT<CMat> llt(0.5 * (R + R.adjoint()));
  if (llt.info() != Eigen::Success) throw NumericalSingularity("R2 is not positive definite");
  return llt.solve(CMat::Identity(R.rows(), R.cols()));
}

RadarTensor zeros_like(const RadarTensor& w) {
  RadarTensor z(w.size());
  for (std::size_t t = 0; t < w.size(); ++t) z[t] = CMat::Zero(w[t].rows(), w[t].cols());
  return z;
}

// kappa in KLD_k = kappa |h_k^T w_k|^2 / b_k
double comm_kappa(const ScenarioConfig& cfg, int k) {
  const double lambda = build_constellation(cfg.M).lambda;
  return lambda * comm_gain(cfg, k) / (cfg.M * (cfg.M - 1.0) * kLn2);
}

// b_k = g_k sum_{j != k} |h_k^T w_j|^2 + sigma_eta2
double comm_denominator(const ScenarioConfig& cfg, const CMat& W_c, const CMat& H, int k,
                        double sigma_eta2) {
  const CVec e = H.col(k).transpose() * W_c;
  double iui = 0.0;
  for (Eigen::Index j = 0; j < e.size(); ++j)
    if (j != k) iui += std::norm(e(j));
  return comm_gain(cfg, k) * iui + sigma_eta2;
}

std::vector<double> sigma_eta2_all(const ScenarioConfig& cfg, const RadarTensor& Wr,
                                   double sigma_n2) {
  const double pr = radar_power(Wr, cfg.L);
  std::vector<double> s(cfg.K);
  for (int k = 0; k < cfg.K; ++k) s[k] = interference_variance(cfg, k, sigma_n2, pr);
  return s;
}

}  // namespace

CMat radar_kernel(const CMat& H_t, const CMat& R_t, double sigma_n2, double amp) {
  CMat R2inv = spd_inverse(receive_covariance(H_t, R_t, sigma_n2, amp));
  return R2inv - sigma_n2 * R2inv * R2inv;
}

CMat grad_radar_kld_wrt_wr(const CMat& H_t, const CMat& Wr_t, const CMat& W_c, int L,
                           double sigma_n2, double amp) {
  const CMat B = radar_kernel(H_t, beam_covariance(Wr_t, W_c, L), sigma_n2, amp);
  return (2.0 * amp * amp / (L * kLn2)) * (H_t.adjoint() * (B * (H_t * Wr_t)));
}

CMat grad_radar_kld_wrt_wc(const CMat& H_t, const CMat& Wr_t, const CMat& W_c, int L,
                           double sigma_n2, double amp) {
  const CMat B = radar_kernel(H_t, beam_covariance(Wr_t, W_c, L), sigma_n2, amp);
  return (2.0 * amp * amp / kLn2) * (H_t.adjoint() * (B * (H_t * W_c)));
}

double radar_objective(const ScenarioConfig& cfg, const RadarTensor& Wr, const CMat& W_c,
                       const TargetSet& tg, double sigma_n2) {
  const auto k = radar_klds(cfg, Wr, W_c, tg, sigma_n2);
  double s = 0.0;
  for (double v : k) s += v;
  return s / cfg.T;
}

RadarTensor grad_radar_objective(const ScenarioConfig& cfg, const RadarTensor& Wr,
                                 const CMat& W_c, const TargetSet& tg, double sigma_n2) {
  RadarTensor g(cfg.T);
  for (int t = 0; t < cfg.T; ++t)
    g[t] = grad_radar_kld_wrt_wr(tg.H_t[t], Wr[t], W_c, cfg.L, sigma_n2, tg.radar_amp(t)) /
           static_cast<double>(cfg.T);
  return g;
}

std::vector<double> comm_klds_closed(const ScenarioConfig& cfg, const RadarTensor& Wr,
                                     double sigma_n2) {
  const auto s = sigma_eta2_all(cfg, Wr, sigma_n2);
  std::vector<double> out(cfg.K);
  for (int k = 0; k < cfg.K; ++k) out[k] = kld_zf_closed_form(cfg, k, s[k]);
  return out;
}

RadarTensor grad_comm_kld_wrt_radar(const ScenarioConfig& cfg, const RadarTensor& Wr,
                                    double sigma_n2, int k) {
  const double se = interference_variance(cfg, k, sigma_n2, radar_power(Wr, cfg.L));
  const double kld = kld_zf_closed_form(cfg, k, se);
  // d sigma_eta^2 = g sigma_h^2 / L * d||Wr||^2, and KLD is proportional to 1/sigma_eta^2
  const double c = -kld / se * 2.0 * comm_gain(cfg, k) * cfg.sigma_h2 / cfg.L;
  RadarTensor g(Wr.size());
  for (std::size_t t = 0; t < Wr.size(); ++t) g[t] = c * Wr[t];
  return g;
}

double penalty_value(const std::vector<double>& kld_r, const std::vector<double>& kld_c,
                     const std::vector<double>& A, const std::vector<double>& B) {
  double p = 0.0;
  for (std::size_t t = 0; t < kld_r.size(); ++t) {
    const double v = std::max(0.0, A[t] - kld_r[t]);
    p += v * v;
  }
  for (std::size_t k = 0; k < kld_c.size(); ++k) {
    const double v = std::max(0.0, B[k] - kld_c[k]);
    p += v * v;
  }
  return p;
}

double penalty_radar(const ScenarioConfig& cfg, const RadarTensor& Wr, const CMat& W_c,
                     const TargetSet& tg, double sigma_n2) {
  return penalty_value(radar_klds(cfg, Wr, W_c, tg, sigma_n2),
                       comm_klds_closed(cfg, Wr, sigma_n2), cfg.A, cfg.B);
}

RadarTensor grad_penalty_radar(const ScenarioConfig& cfg, const RadarTensor& Wr,
                               const CMat& W_c, const TargetSet& tg, double sigma_n2) {
  RadarTensor g = zeros_like(Wr);
  const auto kr = radar_klds(cfg, Wr, W_c, tg, sigma_n2);
  for (int t = 0; t < cfg.T; ++t) {
    if (!(kr[t] < cfg.A[t])) continue;
    g[t] += -2.0 * (cfg.A[t] - kr[t]) *
            grad_radar_kld_wrt_wr(tg.H_t[t], Wr[t], W_c, cfg.L, sigma_n2, tg.radar_amp(t));
  }
  const auto kc = comm_klds_closed(cfg, Wr, sigma_n2);
  for (int k = 0; k < cfg.K; ++k) {
    if (!(kc[k] < cfg.B[k])) continue;
    const auto gk = grad_comm_kld_wrt_radar(cfg, Wr, sigma_n2, k);
    for (int t = 0; t < cfg.T; ++t) g[t] += -2.0 * (cfg.B[k] - kc[k]) * gk[t];
  }
  return g;
}

CMat grad_kld_conditional(const ScenarioConfig& cfg, const CMat& W_c, const CMat& H, int k,
                          double sigma_eta2) {
  const double kappa = comm_kappa(cfg, k);
  const double g = comm_gain(cfg, k);
  const CVec hk = H.col(k);
  const CVec e = hk.transpose() * W_c;
  const double b = comm_denominator(cfg, W_c, H, k, sigma_eta2);
  const double a = std::norm(e(k));
  CMat G(W_c.rows(), W_c.cols());
  for (Eigen::Index j = 0; j < W_c.cols(); ++j) {
    if (j == k)
      G.col(j) = (2.0 * kappa / b) * hk.conjugate() * e(j);
    else
      G.col(j) = (-2.0 * kappa * a * g / (b * b)) * hk.conjugate() * e(j);
  }
  return G;
}

double comm_objective(const ScenarioConfig& cfg, const CMat& W_c, const CMat& H,
                      const std::vector<double>& sigma_eta2) {
  double s = 0.0;
  for (int k = 0; k < cfg.K; ++k) s += kld_conditional(cfg, W_c, H, k, sigma_eta2[k]);
  return s / cfg.K;
}

CMat grad_comm_objective(const ScenarioConfig& cfg, const CMat& W_c, const CMat& H,
                         const std::vector<double>& sigma_eta2) {
  CMat G = CMat::Zero(W_c.rows(), W_c.cols());
  for (int k = 0; k < cfg.K; ++k) G += grad_kld_conditional(cfg, W_c, H, k, sigma_eta2[k]);
  return G / static_cast<double>(cfg.K);
}

ConstraintGradients grad_constraints_wrt_wc(const ScenarioConfig& cfg, const CMat& W_c,
                                            const RadarTensor& Wr, const TargetSet& tg,
                                            double sigma_n2) {
  ConstraintGradients out;
  out.g_power = 2.0 * W_c;
  for (int t = 0; t < cfg.T; ++t)
    out.g_radar.push_back(
        grad_radar_kld_wrt_wc(tg.H_t[t], Wr[t], W_c, cfg.L, sigma_n2, tg.radar_amp(t)));
  return out;
}

IsacValue isac_value(const ScenarioConfig& cfg, const RadarTensor& Zr, const CMat& Zc,
                     const CMat& H, const TargetSet& tg, double sigma_n2) {
  IsacValue v;
  v.kld_r = radar_klds(cfg, Zr, Zc, tg, sigma_n2);
  v.kld_c = comm_klds(cfg, Zc, H, Zr, sigma_n2);
  for (double x : v.kld_r) v.radar_mean += x / cfg.T;
  for (double x : v.kld_c) v.comm_mean += x / cfg.K;
  return v;
}

namespace {

// Gradients of each constraint function used by the joint problem.
struct JointTerms {
  std::vector<JointGradient> radar;  // d KLD_r,t
  std::vector<JointGradient> comm;   // d KLD_c,k
  IsacValue value;
};

JointTerms joint_terms(const ScenarioConfig& cfg, const RadarTensor& Zr, const CMat& Zc,
                       const CMat& H, const TargetSet& tg, double sigma_n2) {
  JointTerms jt;
  jt.value = isac_value(cfg, Zr, Zc, H, tg, sigma_n2);
  for (int t = 0; t < cfg.T; ++t) {
    JointGradient g;
    g.g_r = zeros_like(Zr);
    g.g_r[t] = grad_radar_kld_wrt_wr(tg.H_t[t], Zr[t], Zc, cfg.L, sigma_n2, tg.radar_amp(t));
    g.g_c = grad_radar_kld_wrt_wc(tg.H_t[t], Zr[t], Zc, cfg.L, sigma_n2, tg.radar_amp(t));
    jt.radar.push_back(std::move(g));
  }
  const auto se = sigma_eta2_all(cfg, Zr, sigma_n2);
  for (int k = 0; k < cfg.K; ++k) {
    JointGradient g;
    g.g_c = grad_kld_conditional(cfg, Zc, H, k, se[k]);
    const double b = comm_denominator(cfg, Zc, H, k, se[k]);
    const double c = -jt.value.kld_c[k] / b * 2.0 * comm_gain(cfg, k) * cfg.sigma_h2 / cfg.L;
    g.g_r.resize(Zr.size());
    for (std::size_t t = 0; t < Zr.size(); ++t) g.g_r[t] = c * Zr[t];
    jt.comm.push_back(std::move(g));
  }
  return jt;
}

void accumulate(JointGradient& acc, const JointGradient& g, double w) {
  for (std::size_t t = 0; t < acc.g_r.size(); ++t) acc.g_r[t] += w * g.g_r[t];
  acc.g_c += w * g.g_c;
}

JointGradient joint_zero(const RadarTensor& Zr, const CMat& Zc) {
  return {zeros_like(Zr), CMat::Zero(Zc.rows(), Zc.cols())};
}

}  // namespace

JointGradient grad_isac(const ScenarioConfig& cfg, const RadarTensor& Zr, const CMat& Zc,
                        const CMat& H, const TargetSet& tg, double sigma_n2) {
  const auto jt = joint_terms(cfg, Zr, Zc, H, tg, sigma_n2);
  JointGradient out = joint_zero(Zr, Zc);
  for (const auto& g : jt.radar) accumulate(out, g, 1.0 / cfg.T);
  for (const auto& g : jt.comm) accumulate(out, g, 1.0 / cfg.K);
  return out;
}

double penalty_joint(const ScenarioConfig& cfg, const RadarTensor& Zr, const CMat& Zc,
                     const CMat& H, const TargetSet& tg, double sigma_n2) {
  const auto v = isac_value(cfg, Zr, Zc, H, tg, sigma_n2);
  return penalty_value(v.kld_r, v.kld_c, cfg.A, cfg.B);
}

JointGradient grad_penalty_joint(const ScenarioConfig& cfg, const RadarTensor& Zr,
                                 const CMat& Zc, const CMat& H, const TargetSet& tg,
                                 double sigma_n2) {
  const auto jt = joint_terms(cfg, Zr, Zc, H, tg, sigma_n2);
  JointGradient out = joint_zero(Zr, Zc);
  for (int t = 0; t < cfg.T; ++t)
    if (jt.value.kld_r[t] < cfg.A[t])
      accumulate(out, jt.radar[t], -2.0 * (cfg.A[t] - jt.value.kld_r[t]));
  for (int k = 0; k < cfg.K; ++k)
    if (jt.value.kld_c[k] < cfg.B[k])
      accumulate(out, jt.comm[k], -2.0 * (cfg.B[k] - jt.value.kld_c[k]));
  return out;
}

JointGradient grad_admm_z(const ScenarioConfig& cfg, const RadarTensor& Zr, const CMat& Zc,
                          const RadarTensor& Vr, const CMat& Vc, double rho, double rho_pen,
                          const CMat& H, const TargetSet& tg, double sigma_n2) {
  const auto jt = joint_terms(cfg, Zr, Zc, H, tg, sigma_n2);
  JointGradient out = joint_zero(Zr, Zc);
  for (const auto& g : jt.radar) accumulate(out, g, 1.0 / cfg.T);
  for (const auto& g : jt.comm) accumulate(out, g, 1.0 / cfg.K);
  if (rho_pen != 0.0) {
    for (int t = 0; t < cfg.T; ++t)
      if (jt.value.kld_r[t] < cfg.A[t])
        accumulate(out, jt.radar[t], rho_pen * 2.0 * (cfg.A[t] - jt.value.kld_r[t]));
    for (int k = 0; k < cfg.K; ++k)
      if (jt.value.kld_c[k] < cfg.B[k])
        accumulate(out, jt.comm[k], rho_pen * 2.0 * (cfg.B[k] - jt.value.kld_c[k]));
  }
  // d/dZ^* of -(rho/2)||Z - V||^2, doubled per the convention
  for (std::size_t t = 0; t < Zr.size(); ++t) out.g_r[t] -= rho * (Zr[t] - Vr[t]);
  out.g_c -= rho * (Zc - Vc);
  return out;
}

double admm_z_objective(const ScenarioConfig& cfg, const RadarTensor& Zr, const CMat& Zc,
                        const RadarTensor& Vr, const CMat& Vc, double rho, double rho_pen,
                        const CMat& H, const TargetSet& tg, double sigma_n2) {
  const auto v = isac_value(cfg, Zr, Zc, H, tg, sigma_n2);
  double prox = (Zc - Vc).squaredNorm();
  for (std::size_t t = 0; t < Zr.size(); ++t) prox += (Zr[t] - Vr[t]).squaredNorm();
  return v.total() - rho_pen * penalty_value(v.kld_r, v.kld_c, cfg.A, cfg.B) - 0.5 * rho * prox;
}

CMat project_power(const CMat& W, double budget, double normalizer) {
  const double p = W.squaredNorm() / normalizer;
  if (p > budget) return W * std::sqrt(budget / p);
  return W;
}

RadarTensor project_power(const RadarTensor& W, double budget, double normalizer) {
  const double p = frob2(W) / normalizer;
  if (!(p > budget)) return W;
  const double s = std::sqrt(budget / p);
  RadarTensor out(W.size());
  for (std::size_t t = 0; t < W.size(); ++t) out[t] = W[t] * s;
  return out;
}

void project_joint(RadarTensor& Zr, CMat& Zc, double P_T, int L) {
  const double p = Zc.squaredNorm() + frob2(Zr) / L;
  if (!(p > P_T)) return;
  const double s = std::sqrt(P_T / p);
  Zc *= s;
  for (auto& z : Zr) z *= s;
}

CMat fd_oracle(const std::function<double(const CMat&)>& f, const CMat& X, double eps) {
  CMat G(X.rows(), X.cols());
  CMat Y = X;
  auto eval = [&](const CMat& Z) {
    const double v = f(Z);
    if (!std::isfinite(v)) throw NonFiniteObjective("objective not finite in FD neighbourhood");
    return v;
  };
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const cd x0 = X(i, j);
      Y(i, j) = x0 + cd(eps, 0);
      const double fp = eval(Y);
      Y(i, j) = x0 - cd(eps, 0);
      const double fm = eval(Y);
      Y(i, j) = x0 + cd(0, eps);
      const double gp = eval(Y);
      Y(i, j) = x0 - cd(0, eps);
      const double gm = eval(Y);
      Y(i, j) = x0;
      G(i, j) = cd((fp - fm) / (2 * eps), (gp - gm) / (2 * eps));
    }
  return G;
}

RadarTensor fd_oracle(const std::function<double(const RadarTensor&)>& f, const RadarTensor& X,
                      double eps) {
  RadarTensor G(X.size());
  RadarTensor Y = X;
  for (std::size_t t = 0; t < X.size(); ++t) {
    G[t] = fd_oracle(
        [&](const CMat& slice) {
          Y[t] = slice;
          const double v = f(Y);
          Y[t] = X[t];
          return v;
        },
        X[t], eps);
  }
  return G;
}

double rel_error(const CMat& a, const CMat& b, double abs_floor) {
  return (a - b).norm() / std::max(b.norm(), abs_floor);
}

double rel_error(const RadarTensor& a, const RadarTensor& b, double abs_floor) {
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    num += (a[t] - b[t]).squaredNorm();
    den += b[t].squaredNorm();
  }
  return std::sqrt(num) / std::max(std::sqrt(den), abs_floor);
}

namespace printed {

RadarTensor grad_radar_objective(const ScenarioConfig& cfg, const RadarTensor& Wr,
                                 const CMat& W_c, const TargetSet& tg, double sigma_n2) {
  RadarTensor g(cfg.T);
  for (int t = 0; t < cfg.T; ++t) {
    const double a = tg.radar_amp(t);
    const CMat& Ht = tg.H_t[t];
    CMat R2inv =
        spd_inverse(receive_covariance(Ht, beam_covariance(Wr[t], W_c, cfg.L), sigma_n2, a));
    // second term without the leading H_t^H
    g[t] = (2.0 * a * a / (cfg.T * cfg.L * kLn2)) *
           (Ht.adjoint() * R2inv * Ht * Wr[t] - sigma_n2 * R2inv * R2inv * Ht * Wr[t]);
  }
  return g;
}

RadarTensor grad_comm_kld_wrt_radar(const ScenarioConfig& cfg, const RadarTensor& Wr,
                                    double sigma_n2, int k) {
  const double se = interference_variance(cfg, k, sigma_n2, radar_power(Wr, cfg.L));
  const double lambda = build_constellation(cfg.M).lambda;
  const double pk = power_weights(cfg)[k];
  const double c = -2.0 * lambda * comm_gain(cfg, k) * pk * (cfg.N - cfg.K) * cfg.sigma_h2 /
                   (cfg.M * (cfg.M - 1.0) * cfg.L * se * kLn2);
  RadarTensor g(Wr.size());
  for (std::size_t t = 0; t < Wr.size(); ++t) g[t] = c * Wr[t];
  return g;
}

CMat grad_radar_kld_wrt_wc(const CMat& H_t, const CMat& Wr_t, const CMat& W_c, int L,
                           double sigma_n2, double amp) {
  CMat R2inv = spd_inverse(receive_covariance(H_t, beam_covariance(Wr_t, W_c, L), sigma_n2, amp));
  return (amp * amp / kLn2) * (H_t.adjoint() * R2inv * H_t * W_c);
}

}  // namespace printed

}  // namespace isac
