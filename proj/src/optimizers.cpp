// SPDX-License-Identifier: Apache-2.0
#include "isac/optimizers.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace isac {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> margins_of(const std::vector<double>& kr, const std::vector<double>& kc,
                               const ScenarioConfig& cfg) {
  std::vector<double> m;
  for (int t = 0; t < cfg.T; ++t) m.push_back(kr[t] - cfg.A[t]);
  for (int k = 0; k < cfg.K; ++k) m.push_back(kc[k] - cfg.B[k]);
  return m;
}

double tensor_dist(const RadarTensor& a, const RadarTensor& b) {
  double s = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) s += (a[t] - b[t]).squaredNorm();
  return std::sqrt(s);
}

// log barrier with a quadratic extension below delta, for constraints that
// start out violated
double ext_log(double g, double delta) {
  if (g >= delta) return std::log(g);
  const double d = g - delta;
  return std::log(delta) + d / delta - d * d / (2 * delta * delta);
}

double ext_log_deriv(double g, double delta) {
  if (g >= delta) return 1.0 / g;
  return 1.0 / delta - (g - delta) / (delta * delta);
}

}  // namespace

void validate_params(const OptimizerParams& p) {
  if (p.max_iter < 0) throw ConfigError("max_iter must be >= 0");
  if (!(p.eps > 0)) throw ConfigError("eps must be > 0");
  if (!(p.alpha0 > 0)) throw ConfigError("alpha0 must be > 0");
  if (!(p.rho0 > 0)) throw ConfigError("rho0 must be > 0");
  if (!(p.gamma > 1)) throw ConfigError("gamma must be > 1");
  if (!(p.beta > 0 && p.beta < 1)) throw ConfigError("beta must be in (0,1)");
  if (!(p.armijo_c > 0 && p.armijo_c < 1)) throw ConfigError("armijo_c must be in (0,1)");
  if (!(p.mu0 > 0)) throw ConfigError("mu0 must be > 0");
  if (!(p.gamma_barrier > 0 && p.gamma_barrier < 1))
    throw ConfigError("gamma_barrier must be in (0,1)");
  if (!(p.rho_admm > 0)) throw ConfigError("rho_admm must be > 0");
  if (p.inner_iter < 1) throw ConfigError("inner_iter must be >= 1");
  if (!(p.gamma_kiop >= 1)) throw ConfigError("gamma_kiop must be >= 1");
}

std::string to_string(ExitReason r) {
  switch (r) {
    case ExitReason::Converged: return "converged";
    case ExitReason::MaxIter: return "max_iter";
    case ExitReason::LineSearchFailed: return "line_search_failed";
    case ExitReason::ResidualStagnation: return "residual_stagnation";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// K-ROP

KropResult run_krop(const ScenarioConfig& cfg, const TargetSet& tg, const CMat& W_c,
                    const RadarTensor& init, const OptimizerParams& prm, double sigma_n2) {
  validate_params(prm);
  const auto t0 = Clock::now();
  KropResult res;
  res.trace.technique = "krop";
  RadarTensor W = project_power(init, cfg.P_r, cfg.L);
  double rho = prm.rho0;
  double alpha = prm.alpha0;

  auto f_of = [&](const RadarTensor& w) { return radar_objective(cfg, w, W_c, tg, sigma_n2); };
  auto p_of = [&](const RadarTensor& w) { return penalty_radar(cfg, w, W_c, tg, sigma_n2); };

  double f = f_of(W), p = p_of(W);
  res.trace.exit = ExitReason::MaxIter;
  for (int n = 0; n < prm.max_iter; ++n) {
    RadarTensor G = grad_radar_objective(cfg, W, W_c, tg, sigma_n2);
    const RadarTensor gp = grad_penalty_radar(cfg, W, W_c, tg, sigma_n2);
    for (int t = 0; t < cfg.T; ++t) G[t] -= rho * gp[t];
    const double phi = f - rho * p;

    RadarTensor Wn;
    double fn = 0, pn = 0;
    bool ok = false;
    while (alpha >= prm.alpha_min) {
      Wn = project_power(axpy(W, alpha, G), cfg.P_r, cfg.L);
      fn = f_of(Wn);
      pn = p_of(Wn);
      // sufficient ascent measured along the projected step
      RadarTensor d(W.size());
      for (int t = 0; t < cfg.T; ++t) d[t] = Wn[t] - W[t];
      if (std::isfinite(fn) && fn - rho * pn >= phi + prm.armijo_c * re_inner(G, d)) {
        ok = true;
        break;
      }
      alpha *= prm.beta;
    }
    if (!ok) {
      res.trace.exit = ExitReason::LineSearchFailed;
      break;
    }
    const double step = tensor_dist(Wn, W);
    TraceRow row;
    row.iter = n;
    row.objective = fn;
    row.penalty = pn;
    row.merit_before = phi;
    row.merit_after = fn - rho * pn;
    row.step = step;
    row.alpha = alpha;
    row.weight = rho;
    row.power = radar_power(Wn, cfg.L);
    row.margins = margins_of(radar_klds(cfg, Wn, W_c, tg, sigma_n2),
                             comm_klds_closed(cfg, Wn, sigma_n2), cfg);
    res.trace.rows.push_back(std::move(row));
    W = std::move(Wn);
    f = fn;
    p = pn;
    if (p > 0) rho = std::min(rho * prm.gamma, prm.rho_max);
    if (step < prm.eps) {
      res.trace.exit = ExitReason::Converged;
      break;
    }
  }
  res.Wr = project_power(W, cfg.P_r, cfg.L);
  res.trace.seconds = seconds_since(t0);
  return res;
}

// ---------------------------------------------------------------------------
// K-COP

KcopResult run_kcop(const ScenarioConfig& cfg, const CMat& H, const TargetSet& tg,
                    const RadarTensor& Wr, const CMat& init, const OptimizerParams& prm,
                    double sigma_n2) {
  validate_params(prm);
  const auto t0 = Clock::now();
  if (!(init.squaredNorm() < cfg.P_c))
    throw InfeasibleStart("K-COP start must lie strictly inside the power budget");
  KcopResult res;
  res.trace.technique = "kcop";

  const double pr = radar_power(Wr, cfg.L);
  std::vector<double> se(cfg.K);
  for (int k = 0; k < cfg.K; ++k) se[k] = interference_variance(cfg, k, sigma_n2, pr);

  struct Eval {
    double f = 0, merit = 0;
    std::vector<double> kr, kc;
    bool ok = false;
  };
  // constraints that hold at the start keep a hard log barrier; the others get
  // the quadratic extension so the merit stays finite
  const auto kr0 = radar_klds(cfg, Wr, init, tg, sigma_n2);
  std::vector<double> kc0(cfg.K);
  for (int k = 0; k < cfg.K; ++k) kc0[k] = kld_conditional(cfg, init, H, k, se[k]);
  std::vector<bool> hard_r(cfg.T), hard_c(cfg.K);
  for (int t = 0; t < cfg.T; ++t) hard_r[t] = kr0[t] > cfg.A[t];
  for (int k = 0; k < cfg.K; ++k) hard_c[k] = kc0[k] > cfg.B[k];
  constexpr double kDelta = 1.0;  // extension knee, bits

  auto evaluate = [&](const CMat& W, double mu) {
    Eval e;
    const double slack = cfg.P_c - W.squaredNorm();
    if (!(slack > 0)) return e;
    e.kr = radar_klds(cfg, Wr, W, tg, sigma_n2);
    e.kc.resize(cfg.K);
    for (int k = 0; k < cfg.K; ++k) e.kc[k] = kld_conditional(cfg, W, H, k, se[k]);
    double bar = std::log(slack);
    for (int t = 0; t < cfg.T; ++t) {
      const double g = e.kr[t] - cfg.A[t];
      if (hard_r[t] && !(g > 0)) return e;
      bar += hard_r[t] ? std::log(g) : ext_log(g, kDelta);
    }
    for (int k = 0; k < cfg.K; ++k) {
      const double g = e.kc[k] - cfg.B[k];
      if (hard_c[k] && !(g > 0)) return e;
      bar += hard_c[k] ? std::log(g) : ext_log(g, kDelta);
    }
    for (double v : e.kc) e.f += v / cfg.K;
    e.merit = e.f + mu * bar;
    e.ok = std::isfinite(e.merit);
    return e;
  };
  auto gradient = [&](const CMat& W, const Eval& e, double mu) {
    CMat G = grad_comm_objective(cfg, W, H, se);
    CMat B = -2.0 * W / (cfg.P_c - W.squaredNorm());
    for (int t = 0; t < cfg.T; ++t) {
      const double g = e.kr[t] - cfg.A[t];
      const double d = hard_r[t] ? 1.0 / g : ext_log_deriv(g, kDelta);
      B += d * grad_radar_kld_wrt_wc(tg.H_t[t], Wr[t], W, cfg.L, sigma_n2, tg.radar_amp(t));
    }
    for (int k = 0; k < cfg.K; ++k) {
      const double g = e.kc[k] - cfg.B[k];
      const double d = hard_c[k] ? 1.0 / g : ext_log_deriv(g, kDelta);
      B += d * grad_kld_conditional(cfg, W, H, k, se[k]);
    }
    return CMat(G + mu * B);
  };

  CMat W = init;
  double mu = prm.mu0;
  double alpha = prm.alpha0;
  res.trace.exit = ExitReason::MaxIter;
  for (int n = 0; n < prm.max_iter; ++n) {
    const Eval e = evaluate(W, mu);
    if (!e.ok) throw InfeasibleStart("K-COP iterate left the barrier domain");
    const CMat G = gradient(W, e, mu);
    if (G.norm() < prm.eps) {
      res.trace.exit = ExitReason::Converged;
      break;
    }
    alpha = alpha / prm.beta;
    CMat Wn;
    Eval en;
    bool ok = false;
    while (alpha >= prm.alpha_min) {
      Wn = W + alpha * G;
      en = evaluate(Wn, mu);
      if (en.ok && en.merit >= e.merit + prm.armijo_c * alpha * G.squaredNorm()) {
        ok = true;
        break;
      }
      alpha *= prm.beta;
    }
    if (!ok) {
      res.trace.exit = ExitReason::LineSearchFailed;
      break;
    }
    TraceRow row;
    row.iter = n;
    row.objective = en.f;
    row.merit_before = e.merit;
    row.merit_after = en.merit;
    row.step = (Wn - W).norm();
    row.alpha = alpha;
    row.weight = mu;
    row.power = Wn.squaredNorm();
    row.margins = margins_of(en.kr, en.kc, cfg);
    row.penalty = penalty_value(en.kr, en.kc, cfg.A, cfg.B);
    const double step = row.step;
    res.trace.rows.push_back(std::move(row));
    W = std::move(Wn);
    mu = std::max(mu * prm.gamma_barrier, prm.mu_min);
    if (step < prm.eps) {
      res.trace.exit = ExitReason::Converged;
      break;
    }
  }
  res.W_c = W;
  res.trace.seconds = seconds_since(t0);
  return res;
}

// ---------------------------------------------------------------------------
// K-IOP

ZSubproblem admm_z_subproblem(const ScenarioConfig& cfg, const RadarTensor& Vr, const CMat& Vc,
                              const RadarTensor& Zr0, const CMat& Zc0, double rho,
                              double rho_pen, const CMat& H, const TargetSet& tg,
                              double sigma_n2, const OptimizerParams& prm, double weight) {
  ZSubproblem out;
  if (weight == 0.0) {
    // pure proximal term: minimiser is V itself, then the feasibility projection
    out.Zr = Vr;
    out.Zc = Vc;
    project_joint(out.Zr, out.Zc, cfg.P_T, cfg.L);
    return out;
  }
  auto objective = [&](const RadarTensor& zr, const CMat& zc) {
    const auto v = isac_value(cfg, zr, zc, H, tg, sigma_n2);
    double prox = (zc - Vc).squaredNorm();
    for (std::size_t t = 0; t < zr.size(); ++t) prox += (zr[t] - Vr[t]).squaredNorm();
    return weight * (v.total() - rho_pen * penalty_value(v.kld_r, v.kld_c, cfg.A, cfg.B)) -
           0.5 * rho * prox;
  };
  RadarTensor Zr = Zr0;
  CMat Zc = Zc0;
  project_joint(Zr, Zc, cfg.P_T, cfg.L);
  double obj = objective(Zr, Zc);
  out.objective.push_back(obj);
  double alpha = prm.alpha0;
  for (int j = 0; j < prm.inner_iter; ++j) {
    JointGradient g;
    if (weight == 1.0) {
      g = grad_admm_z(cfg, Zr, Zc, Vr, Vc, rho, rho_pen, H, tg, sigma_n2);
    } else {
      // scale the KLD part only; the proximal part keeps unit weight
      JointGradient a = grad_admm_z(cfg, Zr, Zc, Vr, Vc, 0.0, rho_pen, H, tg, sigma_n2);
      g.g_r.resize(Zr.size());
      for (std::size_t t = 0; t < Zr.size(); ++t)
        g.g_r[t] = weight * a.g_r[t] - rho * (Zr[t] - Vr[t]);
      g.g_c = weight * a.g_c - rho * (Zc - Vc);
    }
    bool ok = false;
    RadarTensor Zr_n;
    CMat Zc_n;
    double obj_n = 0;
    while (alpha >= prm.alpha_min) {
      Zr_n = axpy(Zr, alpha, g.g_r);
      Zc_n = Zc + alpha * g.g_c;
      project_joint(Zr_n, Zc_n, cfg.P_T, cfg.L);
      obj_n = objective(Zr_n, Zc_n);
      double dir = re_inner(g.g_c, CMat(Zc_n - Zc));
      for (std::size_t t = 0; t < Zr.size(); ++t) dir += re_inner(g.g_r[t], CMat(Zr_n[t] - Zr[t]));
      if (std::isfinite(obj_n) && obj_n >= obj + prm.armijo_c * dir) {
        ok = true;
        break;
      }
      alpha *= prm.beta;
    }
    if (!ok) break;
    Zr = std::move(Zr_n);
    Zc = std::move(Zc_n);
    obj = obj_n;
    out.objective.push_back(obj);
    ++out.inner_iterations;
    alpha = std::min(alpha / prm.beta, prm.alpha0);
  }
  out.Zr = std::move(Zr);
  out.Zc = std::move(Zc);
  return out;
}

KiopResult run_kiop(const ScenarioConfig& cfg, const CMat& H, const TargetSet& tg,
                    const RadarTensor& init_r, const CMat& init_c, const OptimizerParams& prm,
                    double sigma_n2) {
  validate_params(prm);
  const auto t0 = Clock::now();
  KiopResult res;
  res.trace.technique = "kiop";
  const double rho = prm.rho_admm;

  RadarTensor Zr = init_r;
  CMat Zc = init_c;
  project_joint(Zr, Zc, cfg.P_T, cfg.L);
  RadarTensor Wr = Zr;
  CMat Wc = Zc;
  RadarTensor Ur(Zr.size());
  for (std::size_t t = 0; t < Zr.size(); ++t) Ur[t] = CMat::Zero(Zr[t].rows(), Zr[t].cols());
  CMat Uc = CMat::Zero(Zc.rows(), Zc.cols());
  double rho_pen = prm.rho0;

  double best_res = std::numeric_limits<double>::infinity();
  int since_best = 0;
  res.trace.exit = ExitReason::MaxIter;
  for (int n = 0; n < prm.max_iter; ++n) {
    // primal updates
    for (std::size_t t = 0; t < Zr.size(); ++t) Wr[t] = Zr[t] - Ur[t] / rho;
    Wc = Zc - Uc / rho;
    // auxiliary update around V = W + U / rho
    RadarTensor Vr(Zr.size());
    for (std::size_t t = 0; t < Zr.size(); ++t) Vr[t] = Wr[t] + Ur[t] / rho;
    const CMat Vc = Wc + Uc / rho;
    auto zs = admm_z_subproblem(cfg, Vr, Vc, Zr, Zc, rho, rho_pen, H, tg, sigma_n2, prm);
    const double merit_before = zs.objective.front();
    const double merit_after = zs.objective.back();
    const double step = std::sqrt(std::pow(tensor_dist(zs.Zr, Zr), 2) + (zs.Zc - Zc).squaredNorm());
    Zr = std::move(zs.Zr);
    Zc = std::move(zs.Zc);
    // dual updates
    double dual_err = 0.0;
    for (std::size_t t = 0; t < Zr.size(); ++t) {
      const CMat inc = rho * (Wr[t] - Zr[t]);
      const CMat Un = Ur[t] + inc;
      dual_err += ((Un - Ur[t]) - inc).squaredNorm();
      Ur[t] = Un;
    }
    {
      const CMat inc = rho * (Wc - Zc);
      const CMat Un = Uc + inc;
      dual_err += ((Un - Uc) - inc).squaredNorm();
      Uc = Un;
    }
    const double res_r = tensor_dist(Wr, Zr);
    const double res_c = (Wc - Zc).norm();

    const auto v = isac_value(cfg, Zr, Zc, H, tg, sigma_n2);
    TraceRow row;
    row.iter = n;
    row.objective = v.total();
    row.penalty = penalty_value(v.kld_r, v.kld_c, cfg.A, cfg.B);
    row.merit_before = merit_before;
    row.merit_after = merit_after;
    row.step = step;
    row.weight = rho_pen;
    row.residual_r = res_r;
    row.residual_c = res_c;
    row.dual_identity = std::sqrt(dual_err);
    row.power = Zc.squaredNorm() + frob2(Zr) / cfg.L;
    row.margins = margins_of(v.kld_r, v.kld_c, cfg);
    const double pen = row.penalty;
    res.trace.rows.push_back(std::move(row));
    if (pen > 0) rho_pen = std::min(rho_pen * prm.gamma_kiop, prm.rho_max);

    if (res_r < prm.eps && res_c < prm.eps) {
      res.trace.exit = ExitReason::Converged;
      break;
    }
    const double r = std::max(res_r, res_c);
    if (r < 0.999 * best_res) {
      best_res = r;
      since_best = 0;
    } else if (++since_best >= 100 && best_res > 10 * prm.eps) {
      res.trace.exit = ExitReason::ResidualStagnation;
      break;
    }
  }
  // the auxiliary iterate is the one kept feasible by projection
  res.Wr = Zr;
  res.W_c = Zc;
  project_joint(res.Wr, res.W_c, cfg.P_T, cfg.L);
  res.trace.seconds = seconds_since(t0);
  return res;
}

}  // namespace isac
