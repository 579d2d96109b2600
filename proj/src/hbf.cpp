#include "jcas/hbf.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

#include <Eigen/QR>

namespace jcas::hbf {

void HbfScenario::validate() const {
  array.validate();
  wf.validate();
  nsp.validate();
  const int u = n_users();
  if (u < 1) throw ConfigError("hbf: need at least one user");
  if (u >= array.l_rf_tx)
    throw ConfigError("hbf: number of users must be < l_rf_tx");
  if (array.l_rf_tx > array.l_tx)
    throw ConfigError("hbf: l_rf_tx must be <= l_tx");
  if (static_cast<int>(mu_db.size()) != u)
    throw ConfigError("hbf: mu_db length must equal the user count");
  const double max_gain_db = 10.0 * std::log10(static_cast<double>(array.l_tx));
  for (double m : mu_db)
    if (m > max_gain_db + 1e-12)
      throw ConfigError("hbf: mu exceeds the full-array gain of " +
                        std::to_string(max_gain_db) + " dBi");
  if (!stream_powers.empty() && static_cast<int>(stream_powers.size()) != u)
    throw ConfigError("hbf: stream_powers length must equal the user count");
  if (!rf_assignment.empty() &&
      static_cast<int>(rf_assignment.size()) != array.l_rf_tx)
    throw ConfigError("hbf: rf_assignment length must equal l_rf_tx");
}

cmat build_tx_rf(const HbfScenario& scn) {
  const ArrayConfig& cfg = scn.array;
  const double lam = scn.wf.center_wavelength();
  const int n_dirs = scn.n_users() + 1;

  std::vector<double> dirs;
  dirs.push_back(scn.theta_rad_deg);
  for (double t : scn.theta_comm_deg) dirs.push_back(t);

  auto dir_of_chain = [&](int c) {
    if (!scn.rf_assignment.empty()) {
      const int k = scn.rf_assignment[c];
      if (k < 0 || k >= n_dirs)
        throw ConfigError("hbf: rf_assignment index outside direction set");
      return dirs[k];
    }
    return dirs[c % n_dirs];
  };

  if (cfg.l_rf_tx == cfg.l_tx)  // full digital
    return cmat::Identity(cfg.l_tx, cfg.l_tx);

  cmat w = cmat::Zero(cfg.l_tx, cfg.l_rf_tx);
  if (scn.rf_structure == RfStructure::subarray) {
    const int m = cfg.tx_subarray_size();
    for (int c = 0; c < cfg.l_rf_tx; ++c) {
      const double phi = electrical_angle(cfg, lam, dir_of_chain(c));
      for (int i = 0; i < m; ++i)
        w(c * m + i, c) = std::polar(1.0, (c * m + i) * phi);
    }
  } else {
    for (int c = 0; c < cfg.l_rf_tx; ++c) {
      const cvec a = steering_vector(cfg, Side::tx, lam, dir_of_chain(c));
      w.col(c) = a / a.norm();
    }
  }
  return w;
}

namespace {

struct UserSolution {
  cvec w_bb;        // l_rf_tx
  double g_rad;     // linear
  double g_comm;    // linear
  bool mu_active;
};

// Per-user BB problem. After the IUI projection the feasible effective
// vectors are Q v with Q an orthonormal basis of range(W_RF N_IUI,u) and
// ||v|| = 1, so the gains become |p^H v|^2 and |q^H v|^2 with p = Q^H a_rad,
// q = Q^H a_comm. The optimum lies in span{p, q}; parametrized by a mixing
// angle t the radar gain is ||p||^2 cos^2 t while the best-phase comm gain
// is (|c1| cos t + c2 sin t)^2, both monotone pieces, so the constrained
// optimum is the boundary point, solved in closed form.
UserSolution solve_user(const HbfScenario& scn, const cmat& w_rf, int user) {
  const double lam = scn.wf.center_wavelength();
  const cvec a_rad =
      steering_vector(scn.array, Side::tx, lam, scn.theta_rad_deg);
  const cvec a_comm =
      steering_vector(scn.array, Side::tx, lam, scn.theta_comm_deg[user]);

  const cmat d_u = nsp::iui_constraints(w_rf, user, scn.theta_comm_deg, lam,
                                        scn.array);
  cmat n_iui;
  if (d_u.rows() == 0) {
    n_iui = cmat::Identity(w_rf.cols(), w_rf.cols());
  } else {
    // Row condition D w = 0 maps to columns D^H in the weight space.
    n_iui = nsp::projector_from_columns(d_u.adjoint(), scn.nsp.svd_rcond).matrix;
  }

  const cmat m_u = w_rf * n_iui;  // l_tx x l_rf_tx
  Eigen::ColPivHouseholderQR<cmat> qr(m_u);
  qr.setThreshold(1e-12);
  const int rank = static_cast<int>(qr.rank());
  if (rank < 1)
    throw FullRankNullspaceError("hbf: IUI projection leaves no TX freedom for user " +
                                 std::to_string(user));
  const cmat q_full = qr.householderQ() * cmat::Identity(m_u.rows(), rank);

  const cvec p = q_full.adjoint() * a_rad;
  const cvec q = q_full.adjoint() * a_comm;
  const double mu_lin =
      std::isinf(scn.mu_db[user]) && scn.mu_db[user] < 0
          ? 0.0
          : db_to_lin(scn.mu_db[user]);

  const double p_norm = p.norm();
  cvec v;
  bool active = false;
  if (p_norm < 1e-12) {
    // Radar direction unreachable; fall back to the pure comm beam.
    const double q2 = q.squaredNorm();
    if (q2 < mu_lin)
      throw InfeasibleError(user, scn.mu_db[user], to_db(q2));
    v = q / q.norm();
    active = false;
  } else {
    const cvec e1 = p / p_norm;
    const cplx c1 = e1.dot(q);  // e1^H q
    const cvec q_perp = q - e1 * c1;
    const double c2 = q_perp.norm();
    const double a2 = std::norm(c1) + c2 * c2;  // = ||q||^2

    if (std::norm(c1) >= mu_lin) {
      v = e1;  // constraint inactive: pure radar-matched point
    } else if (c2 < 1e-12) {
      // Degenerate: comm direction colinear with radar in the whitened
      // space; only the matched beam exists.
      if (std::norm(c1) < mu_lin)
        throw InfeasibleError(user, scn.mu_db[user], to_db(std::norm(c1)));
      v = e1;
    } else if (mu_lin > a2 * (1.0 + 1e-12)) {
      throw InfeasibleError(user, scn.mu_db[user], to_db(a2));
    } else {
      const double amp = std::sqrt(a2);
      const double phi = std::atan2(c2, std::abs(c1));
      const double ratio = std::clamp(std::sqrt(mu_lin) / amp, -1.0, 1.0);
      const double t = std::max(0.0, phi - std::acos(ratio));
      const cvec e2 = q_perp / c2;
      v = std::cos(t) * e1 +
          std::polar(1.0, -std::arg(c1)) * std::sin(t) * e2;
      active = true;
    }
  }

  // Recover BB weights: solve M_u w~ = Q v (consistent by construction),
  // then renormalize the effective vector to exactly unit norm.
  UserSolution sol;
  const cvec target = q_full * v;
  cvec w_tilde = qr.solve(target);
  cvec w_bb = n_iui * w_tilde;
  const double eff_norm = (w_rf * w_bb).norm();
  w_bb /= eff_norm;
  sol.w_bb = w_bb;
  sol.g_rad = std::norm(a_rad.dot(w_rf * w_bb));
  sol.g_comm = std::norm(a_comm.dot(w_rf * w_bb));
  sol.mu_active = active;
  return sol;
}

}  // namespace

TxDesign design_tx(const HbfScenario& scn) {
  scn.validate();
  TxDesign out;
  out.w_rf_tx = build_tx_rf(scn);
  const int n_users = scn.n_users();
  out.w_bb_tx = cmat::Zero(scn.array.l_rf_tx, n_users);
  out.comm_gains_db.resize(n_users);
  out.mu_active.resize(n_users);
  double rad_sum = 0.0;
  for (int u = 0; u < n_users; ++u) {
    const UserSolution sol = solve_user(scn, out.w_rf_tx, u);
    out.w_bb_tx.col(u) = sol.w_bb;
    out.comm_gains_db[u] = to_db(sol.g_comm);
    out.mu_active[u] = sol.mu_active;
    rad_sum += sol.g_rad;
  }
  out.radar_gain_db = to_db(rad_sum);
  return out;
}

std::vector<cvec> design_rx(const HbfScenario& scn, const cmat& w_rf_tx,
                            const cmat& w_bb_tx,
                            const si::SiChannelSet& si_estimate) {
  const std::vector<int> nulls = scn.nsp.resolve_null_subcarriers(scn.wf);
  // BB weights are designed at the center subcarrier and reused
  // frequency-flat at the null subcarriers.
  const std::vector<cmat> w_bb_per_null(nulls.size(), w_bb_tx);
  const double lam = scn.wf.center_wavelength();

  std::vector<cvec> out(scn.array.l_rf_rx);
  for (int l = 0; l < scn.array.l_rf_rx; ++l) {
    cmat n_si;
    if (nulls.empty()) {
      n_si = cmat::Identity(scn.array.rx_subarray_size(),
                            scn.array.rx_subarray_size());
    } else {
      const cmat b_l = nsp::si_constraints_hbf(si_estimate, w_rf_tx,
                                               w_bb_per_null, l, nulls,
                                               scn.array);
      n_si = nsp::projector_from_columns(b_l, scn.nsp.svd_rcond).matrix;
    }
    const cvec a_l =
        subarray_steering(scn.array, Side::rx, l, lam, scn.theta_rad_deg);
    const cvec w = n_si * a_l;
    const double nrm = w.norm();
    if (nrm < 1e-12)
      throw FullRankNullspaceError("hbf: SI null space leaves no RX freedom in subarray " +
                                   std::to_string(l));
    out[l] = w / nrm;
  }
  return out;
}

double tx_radar_power(const HbfScenario& scn, const BeamformerWeights& w) {
  const double lam = scn.wf.center_wavelength();
  double acc = 0.0;
  for (int u = 0; u < w.w_bb_tx.cols(); ++u) {
    const double p = scn.stream_powers.empty() ? 1.0 : scn.stream_powers[u];
    acc += p * tx_gain_hbf(scn.array, w.w_rf_tx, w.w_bb_tx.col(u), lam,
                           scn.theta_rad_deg);
  }
  return acc;
}

void save_weights_csv(const BeamformerWeights& w, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << "role,chain_or_user,subcarrier,element,re,im\n";
  char buf[128];
  for (int c = 0; c < w.w_rf_tx.cols(); ++c)
    for (int e = 0; e < w.w_rf_tx.rows(); ++e) {
      std::snprintf(buf, sizeof(buf), "tx_rf,%d,-1,%d,%.17g,%.17g\n", c, e,
                    w.w_rf_tx(e, c).real(), w.w_rf_tx(e, c).imag());
      f << buf;
    }
  for (int u = 0; u < w.w_bb_tx.cols(); ++u)
    for (int e = 0; e < w.w_bb_tx.rows(); ++e) {
      std::snprintf(buf, sizeof(buf), "tx_bb,%d,-1,%d,%.17g,%.17g\n", u, e,
                    w.w_bb_tx(e, u).real(), w.w_bb_tx(e, u).imag());
      f << buf;
    }
  for (std::size_t l = 0; l < w.w_rf_rx.size(); ++l)
    for (int e = 0; e < w.w_rf_rx[l].size(); ++e) {
      std::snprintf(buf, sizeof(buf), "rx_rf,%zu,-1,%d,%.17g,%.17g\n", l, e,
                    w.w_rf_rx[l](e).real(), w.w_rf_rx[l](e).imag());
      f << buf;
    }
}

}  // namespace jcas::hbf
