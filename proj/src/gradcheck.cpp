// SPDX-License-Identifier: Apache-2.0
#include "isac/gradcheck.hpp"

namespace isac {

GradInstance random_grad_instance(std::uint64_t seed, int index) {
  Rng rng = Rng::stream(seed, Purpose::Test, {std::uint64_t(index)});
  GradInstance g;
  auto& c = g.cfg;
  c.K = 1 + static_cast<int>(rng.uniform_int(3));
  c.N = c.K + 1 + static_cast<int>(rng.uniform_int(8 - c.K));
  c.T = 1 + static_cast<int>(rng.uniform_int(2));
  c.L = 2 + static_cast<int>(rng.uniform_int(3));
  c.pathloss_ref_distance = 100.0;
  c.d_c.clear();
  c.d_r.clear();
  for (int k = 0; k < c.K; ++k) c.d_c.push_back(80.0 + 80.0 * rng.uniform());
  for (int t = 0; t < c.T; ++t) c.d_r.push_back(80.0 + 60.0 * rng.uniform());
  c.A.assign(c.T, 0.0);
  c.B.assign(c.K, 0.0);
  c.snr_db = 10.0 * rng.uniform();
  validate_config(c);
  g.sigma_n2 = noise_variance(c);
  g.H = draw_channels(c, rng).H;
  g.tg = draw_targets(c, rng);
  g.Wr.resize(c.T);
  for (auto& w : g.Wr) w = rng.cnormal(c.N, c.L, c.P_r / c.N);
  g.W_c = rng.cnormal(c.N, c.K, c.P_c / (c.N * c.K));
  // half the constraints sit above the current value so the hinges are active
  const auto kr = radar_klds(c, g.Wr, g.W_c, g.tg, g.sigma_n2);
  const auto kc = comm_klds(c, g.W_c, g.H, g.Wr, g.sigma_n2);
  for (int t = 0; t < c.T; ++t) c.A[t] = kr[t] * (t % 2 ? 0.7 : 1.4);
  for (int k = 0; k < c.K; ++k) c.B[k] = kc[k] * (k % 2 ? 1.4 : 0.7);
  return g;
}

namespace {

struct Suite {
  double tol;
  int instance;
  std::vector<GradcheckRow>* rows;

  template <typename G>
  void add(const std::string& name, const G& analytic, const G& numeric, bool certified = true) {
    GradcheckRow r;
    r.instance = instance;
    r.name = name;
    r.rel_error = rel_error(analytic, numeric);
    r.certified = certified;
    r.pass = r.rel_error <= tol;
    rows->push_back(r);
  }
};

}  // namespace

std::vector<GradcheckRow> gradient_certification(int instances, std::uint64_t seed, double tol) {
  std::vector<GradcheckRow> rows;
  for (int i = 0; i < instances; ++i) {
    const GradInstance g = random_grad_instance(seed, i);
    const auto& c = g.cfg;
    const double s2 = g.sigma_n2;
    Suite s{tol, i, &rows};

    for (int t = 0; t < c.T; ++t) {
      const double a = g.tg.radar_amp[t];
      const CMat& Ht = g.tg.H_t[t];
      auto f_wr = [&](const CMat& W) { return radar_kld(Ht, beam_covariance(W, g.W_c, c.L), s2, a); };
      auto f_wc = [&](const CMat& W) { return radar_kld(Ht, beam_covariance(g.Wr[t], W, c.L), s2, a); };
      s.add("radar_kld_wrt_wr", grad_radar_kld_wrt_wr(Ht, g.Wr[t], g.W_c, c.L, s2, a),
            fd_oracle(f_wr, g.Wr[t]));
      const CMat fd_wc = fd_oracle(f_wc, g.W_c);
      s.add("radar_kld_wrt_wc", grad_radar_kld_wrt_wc(Ht, g.Wr[t], g.W_c, c.L, s2, a), fd_wc);
      s.add("printed_radar_kld_wrt_wc",
            printed::grad_radar_kld_wrt_wc(Ht, g.Wr[t], g.W_c, c.L, s2, a), fd_wc, false);
    }

    auto f_radar = [&](const RadarTensor& W) { return radar_objective(c, W, g.W_c, g.tg, s2); };
    const RadarTensor fd_radar = fd_oracle(f_radar, g.Wr);
    s.add("radar_objective", grad_radar_objective(c, g.Wr, g.W_c, g.tg, s2), fd_radar);
    s.add("printed_radar_objective", printed::grad_radar_objective(c, g.Wr, g.W_c, g.tg, s2),
          fd_radar, false);

    for (int k = 0; k < c.K; ++k) {
      auto f = [&](const RadarTensor& W) { return comm_klds_closed(c, W, s2)[k]; };
      const RadarTensor fd = fd_oracle(f, g.Wr);
      s.add("comm_kld_wrt_radar", grad_comm_kld_wrt_radar(c, g.Wr, s2, k), fd);
      s.add("printed_comm_kld_wrt_radar", printed::grad_comm_kld_wrt_radar(c, g.Wr, s2, k), fd,
            false);
    }

    auto f_pen = [&](const RadarTensor& W) { return penalty_radar(c, W, g.W_c, g.tg, s2); };
    s.add("penalty_radar", grad_penalty_radar(c, g.Wr, g.W_c, g.tg, s2), fd_oracle(f_pen, g.Wr));

    const double rp = radar_power(g.Wr, c.L);
    std::vector<double> eta(c.K);
    for (int k = 0; k < c.K; ++k) eta[k] = interference_variance(c, k, s2, rp);
    for (int k = 0; k < c.K; ++k) {
      auto f = [&](const CMat& W) { return kld_conditional(c, W, g.H, k, eta[k]); };
      s.add("kld_conditional", grad_kld_conditional(c, g.W_c, g.H, k, eta[k]),
            fd_oracle(f, g.W_c));
    }
    auto f_comm = [&](const CMat& W) { return comm_objective(c, W, g.H, eta); };
    s.add("comm_objective", grad_comm_objective(c, g.W_c, g.H, eta), fd_oracle(f_comm, g.W_c));

    const auto cg = grad_constraints_wrt_wc(c, g.W_c, g.Wr, g.tg, s2);
    s.add("power_constraint", cg.g_power,
          fd_oracle([](const CMat& W) { return W.squaredNorm(); }, g.W_c));
    for (int t = 0; t < c.T; ++t) {
      auto f = [&](const CMat& W) { return radar_klds(c, g.Wr, W, g.tg, s2)[t]; };
      s.add("radar_constraint_wrt_wc", cg.g_radar[t], fd_oracle(f, g.W_c));
    }

    const auto gi = grad_isac(c, g.Wr, g.W_c, g.H, g.tg, s2);
    s.add("isac_wrt_radar", gi.g_r,
          fd_oracle([&](const RadarTensor& W) { return isac_value(c, W, g.W_c, g.H, g.tg, s2).total(); },
                    g.Wr));
    s.add("isac_wrt_comm", gi.g_c,
          fd_oracle([&](const CMat& W) { return isac_value(c, g.Wr, W, g.H, g.tg, s2).total(); },
                    g.W_c));

    const auto gp = grad_penalty_joint(c, g.Wr, g.W_c, g.H, g.tg, s2);
    s.add("penalty_joint_wrt_radar", gp.g_r,
          fd_oracle([&](const RadarTensor& W) { return penalty_joint(c, W, g.W_c, g.H, g.tg, s2); },
                    g.Wr));
    s.add("penalty_joint_wrt_comm", gp.g_c,
          fd_oracle([&](const CMat& W) { return penalty_joint(c, g.Wr, W, g.H, g.tg, s2); }, g.W_c));

    // proximal centre offset from the evaluation point so the quadratic term is live
    RadarTensor Vr = g.Wr;
    for (auto& v : Vr) v *= 0.8;
    const CMat Vc = 1.1 * g.W_c;
    const double rho = 0.7, rho_pen = 2.0;
    const auto gz = grad_admm_z(c, g.Wr, g.W_c, Vr, Vc, rho, rho_pen, g.H, g.tg, s2);
    s.add("admm_z_wrt_radar", gz.g_r,
          fd_oracle([&](const RadarTensor& W) {
            return admm_z_objective(c, W, g.W_c, Vr, Vc, rho, rho_pen, g.H, g.tg, s2);
          }, g.Wr));
    s.add("admm_z_wrt_comm", gz.g_c,
          fd_oracle([&](const CMat& W) {
            return admm_z_objective(c, g.Wr, W, Vr, Vc, rho, rho_pen, g.H, g.tg, s2);
          }, g.W_c));
  }
  return rows;
}

}  // namespace isac
