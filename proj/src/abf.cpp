#include "jcas/abf.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace jcas::abf {

AbfConfig abf_config_from_string(const std::string& s) {
  if (s == "cf_a") return AbfConfig::cf_a;
  if (s == "cf_b") return AbfConfig::cf_b;
  if (s == "cf_c") return AbfConfig::cf_c;
  if (s == "cpsl") return AbfConfig::cpsl;
  throw ConfigError("unknown ABF config '" + s + "'");
}

std::string to_string(AbfConfig c) {
  switch (c) {
    case AbfConfig::cf_a: return "cf_a";
    case AbfConfig::cf_b: return "cf_b";
    case AbfConfig::cf_c: return "cf_c";
    case AbfConfig::cpsl: return "cpsl";
  }
  return "?";
}

void AbfScenario::validate() const {
  array.validate();
  wf.validate();
  nsp.validate();
  if (array.l_rf_tx != 1 || array.l_rf_rx != 1)
    throw ConfigError("abf: analog architecture has exactly one RF chain per side");
  if (static_cast<int>(rho_comm.size()) != n_users())
    throw ConfigError("abf: rho_comm length must equal the user count");
  double sum = rho_rad;
  for (double r : rho_comm) {
    if (r < 0.0) throw ConfigError("abf: rho values must be >= 0");
    sum += r;
  }
  if (rho_rad < 0.0) throw ConfigError("abf: rho values must be >= 0");
  if (std::abs(sum - 1.0) > 1e-12)
    throw ConfigError("abf: rho values must sum to 1");
}

void CrpMask::validate() const {
  if (!(delta_deg > 0.0)) throw ConfigError("mask: delta_deg must be > 0");
  if (!(cpsl_db < 0.0)) throw ConfigError("mask: cpsl_db must be negative");
  if (grid_deg.empty()) throw ConfigError("mask: empty grid");
  if (!eta.empty() && eta.size() != grid_deg.size())
    throw ConfigError("mask: eta length must match the grid");
  const double lo = grid_deg.front(), hi = grid_deg.back();
  if (lo > theta_rad_deg - 0.5 * delta_deg ||
      hi < theta_rad_deg + 0.5 * delta_deg)
    throw ConfigError("mask: grid must cover theta_rad +/- delta/2");
}

CrpMask CrpMask::make(double theta_rad_deg, double g_max_db, double delta_deg,
                      double cpsl_db, double grid_step_deg) {
  CrpMask m;
  m.theta_rad_deg = theta_rad_deg;
  m.g_max_db = g_max_db;
  m.delta_deg = delta_deg;
  m.cpsl_db = cpsl_db;
  m.grid_deg = default_angle_grid(grid_step_deg);
  m.validate();
  return m;
}

cvec cf_tx_weights(const AbfScenario& scn) {
  scn.validate();
  const double lam = scn.wf.center_wavelength();
  auto matched = [&](double theta) {
    const cvec a = steering_vector(scn.array, Side::tx, lam, theta);
    return cvec(a / a.norm());
  };
  cvec w = std::sqrt(scn.rho_rad) * matched(scn.theta_rad_deg);
  for (int u = 0; u < scn.n_users(); ++u)
    w += std::sqrt(scn.rho_comm[u]) * matched(scn.theta_comm_deg[u]);
  return w / w.norm();
}

namespace {

/// Frequency-null (and optionally angular-null) projector for the RX side.
nsp::Projector rx_projector(const AbfScenario& scn, const cvec& w_tx,
                            const si::SiChannelSet& est, bool with_angular) {
  const double lam = scn.wf.center_wavelength();
  std::vector<int> nulls;
  if (scn.config != AbfConfig::cf_a)
    nulls = scn.nsp.resolve_null_subcarriers(scn.wf);
  std::vector<cvec> ang;
  if (with_angular)
    for (double t : scn.nsp.null_angles_deg)
      ang.push_back(steering_vector(scn.array, Side::rx, lam, t));
  if (nulls.empty() && ang.empty()) {
    nsp::Projector p;
    p.matrix = cmat::Identity(scn.array.l_rx, scn.array.l_rx);
    p.rank_nulled = 0;
    return p;
  }
  const cmat f = nsp::si_constraints_abf(est, w_tx, nulls, ang);
  return nsp::projector_from_columns(f, scn.nsp.svd_rcond);
}

}  // namespace

cvec cf_rx_weights(const AbfScenario& scn, const cvec& w_tx,
                   const si::SiChannelSet& si_estimate) {
  if (scn.config == AbfConfig::cpsl)
    throw std::invalid_argument("cf_rx_weights: use cpsl_optimize for the cpsl config");
  const bool angular = scn.config == AbfConfig::cf_c;
  const nsp::Projector p = rx_projector(scn, w_tx, si_estimate, angular);
  const cvec a = steering_vector(scn.array, Side::rx,
                                 scn.wf.center_wavelength(),
                                 scn.theta_rad_deg);
  const cvec w = p.matrix * a;
  const double nrm = w.norm();
  if (nrm < 1e-12)
    throw FullRankNullspaceError("abf: null space leaves no RX freedom");
  return w / nrm;
}

double desired_crp(const CrpMask& mask, double theta_deg) {
  const double off = theta_deg - mask.theta_rad_deg;
  if (std::abs(off) <= 0.5 * mask.delta_deg)
    return off * off * mask.cpsl_db / (mask.delta_deg * mask.delta_deg / 4.0) +
           mask.g_max_db;
  return mask.g_max_db + mask.cpsl_db;
}

double measure_cpsl(const GainPattern& crp, double theta_rad_deg,
                    double delta_deg) {
  double peak = -std::numeric_limits<double>::infinity();
  double side = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < crp.angles_deg.size(); ++i) {
    peak = std::max(peak, crp.gains_db[i]);
    if (std::abs(crp.angles_deg[i] - theta_rad_deg) > 0.5 * delta_deg)
      side = std::max(side, crp.gains_db[i]);
  }
  return side - peak;
}

namespace {

constexpr double kDbScale = 10.0 / 2.302585092994045684;  // 10/ln(10)

/// Reduced-coordinate least-squares problem: w = V z with V an orthonormal
/// basis of the SI null space, z = x_re + j x_im. The fitted quantity is the
/// dB-domain CRP; the TX pattern term is a constant offset per direction.
struct CpslProblem {
  cmat c;           // k x S, c_s = V^H a_rx(theta_s)
  rvec tx_db;       // S
  rvec target_db;   // S
  rvec kappa;       // S, sqrt(eta_s / S)
  int k = 0;
  int s_count = 0;

  cvec z_of(const rvec& x) const {
    cvec z(k);
    for (int i = 0; i < k; ++i) z(i) = cplx(x(i), x(k + i));
    return z;
  }

  double objective(const rvec& x) const {
    const cvec z = z_of(x);
    const double n2 = z.squaredNorm();
    double acc = 0.0;
    for (int s = 0; s < s_count; ++s) {
      const double g = std::norm(c.col(s).dot(z)) / n2;
      const double r = kappa(s) * (tx_db(s) + to_db(g) - target_db(s));
      acc += r * r;
    }
    return acc;
  }

  void residuals_jacobian(const rvec& x, rvec& r, rmat& j) const {
    const cvec z = z_of(x);
    const double n2 = z.squaredNorm();
    r.resize(s_count);
    j.resize(s_count, 2 * k);
    for (int s = 0; s < s_count; ++s) {
      const cplx u = c.col(s).dot(z);  // c_s^H z
      const double pw = std::norm(u);
      const double g = pw / n2;
      r(s) = kappa(s) * (tx_db(s) + to_db(g) - target_db(s));
      if (g <= kGainFloorLin) {  // clamped: flat segment
        j.row(s).setZero();
        continue;
      }
      // d(pw)/dx = 2 [Re(c u); Im(c u)],  d(n2)/dx = 2 x
      const cvec cu = c.col(s) * u;
      const double f = kappa(s) * kDbScale / g;
      const double inv_n2 = 1.0 / n2;
      for (int i = 0; i < k; ++i) {
        const double dpw_re = 2.0 * cu(i).real();
        const double dpw_im = 2.0 * cu(i).imag();
        j(s, i) = f * (dpw_re * inv_n2 - pw * 2.0 * x(i) * inv_n2 * inv_n2);
        j(s, k + i) =
            f * (dpw_im * inv_n2 - pw * 2.0 * x(k + i) * inv_n2 * inv_n2);
      }
    }
  }
};

CpslProblem build_problem(const AbfScenario& scn, const cvec& w_tx,
                          const cmat& v_basis, const CrpMask& mask) {
  CpslProblem pb;
  pb.k = static_cast<int>(v_basis.cols());
  pb.s_count = static_cast<int>(mask.grid_deg.size());
  pb.c.resize(pb.k, pb.s_count);
  pb.tx_db.resize(pb.s_count);
  pb.target_db.resize(pb.s_count);
  pb.kappa.resize(pb.s_count);
  const double lam = scn.wf.center_wavelength();
  for (int s = 0; s < pb.s_count; ++s) {
    const double theta = mask.grid_deg[s];
    const cvec a = steering_vector(scn.array, Side::rx, lam, theta);
    pb.c.col(s) = v_basis.adjoint() * a;
    pb.tx_db(s) = to_db(abf_gain(scn.array, Side::tx, w_tx, lam, theta));
    pb.target_db(s) = desired_crp(mask, theta);
    const double eta = mask.eta.empty() ? 1.0 : mask.eta[s];
    pb.kappa(s) = std::sqrt(eta / pb.s_count);
  }
  return pb;
}

struct RestartResult {
  rvec x;
  double objective = std::numeric_limits<double>::infinity();
  bool converged = false;
  std::vector<double> trace;
};

RestartResult run_restart(const CpslProblem& pb, const rvec& x0,
                          const SolverOptions& opts) {
  RestartResult res;
  rvec x = x0 / x0.norm();
  double f = pb.objective(x);
  res.trace.push_back(f);
  double lambda = 1e-3;

  rvec r;
  rmat j;
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    pb.residuals_jacobian(x, r, j);
    const rvec grad = j.transpose() * r;
    const rmat h = j.transpose() * j;
    bool accepted = false;
    for (int tries = 0; tries < 40 && !accepted; ++tries) {
      rmat h_d = h;
      h_d.diagonal().array() += lambda;
      const rvec step = h_d.ldlt().solve(-grad);
      rvec x_new = x + step;
      x_new /= x_new.norm();
      const double f_new = pb.objective(x_new);
      if (f_new < f) {
        x = x_new;
        f = f_new;
        lambda = std::max(lambda * 0.3, 1e-14);
        accepted = true;
      } else {
        lambda *= 10.0;
        if (lambda > 1e14) break;
      }
    }
    if (!accepted) break;  // damping exhausted: local stall
    const double prev = res.trace.back();
    res.trace.push_back(f);
    if (prev - f < opts.tol * std::max(prev, 1e-300)) {
      res.converged = true;
      break;
    }
  }
  res.x = x;
  res.objective = f;
  return res;
}

}  // namespace

CpslResult cpsl_optimize(const AbfScenario& scn, const cvec& w_tx,
                         const si::SiChannelSet& si_estimate,
                         const CrpMask& mask, const SolverOptions& opts) {
  mask.validate();
  // The optimization null space implements the frequency nulls only; the
  // angular behaviour is shaped by the mask fit itself.
  AbfScenario freq_scn = scn;
  freq_scn.config = scn.nsp.n_freq > 0 ? AbfConfig::cf_b : AbfConfig::cf_a;
  const nsp::Projector proj =
      rx_projector(freq_scn, w_tx, si_estimate, /*with_angular=*/false);

  // Orthonormal basis of range(P) from the eigenvectors with eigenvalue ~1.
  cmat v_basis;
  if (proj.rank_nulled == 0) {
    v_basis = cmat::Identity(scn.array.l_rx, scn.array.l_rx);
  } else {
    Eigen::SelfAdjointEigenSolver<cmat> eig(proj.matrix);
    const int keep = scn.array.l_rx - proj.rank_nulled;
    v_basis = eig.eigenvectors().rightCols(keep);
  }

  const CpslProblem pb = build_problem(scn, w_tx, v_basis, mask);

  // Start 0: the closed-form design with angular nulls (cf_c), which lies
  // inside the frequency-null space; remaining starts are perturbations.
  AbfScenario cfc_scn = scn;
  cfc_scn.config = AbfConfig::cf_c;
  const cvec w_start = cf_rx_weights(cfc_scn, w_tx, si_estimate);
  const cvec z0 = v_basis.adjoint() * w_start;
  rvec x0(2 * pb.k);
  for (int i = 0; i < pb.k; ++i) {
    x0(i) = z0(i).real();
    x0(pb.k + i) = z0(i).imag();
  }

  std::vector<rvec> starts(opts.restarts, x0);
  for (int rs = 1; rs < opts.restarts; ++rs) {
    std::mt19937_64 rng(derive_seed(opts.seed, rs));
    std::normal_distribution<double> gauss(0.0, 1.0);
    rvec x = x0;
    for (int i = 0; i < x.size(); ++i) x(i) += 0.3 * gauss(rng);
    starts[rs] = x;
  }

  std::vector<RestartResult> results(opts.restarts);
  if (opts.exec == Exec::parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int rs = 0; rs < opts.restarts; ++rs)
      results[rs] = run_restart(pb, starts[rs], opts);
  } else {
    for (int rs = 0; rs < opts.restarts; ++rs)
      results[rs] = run_restart(pb, starts[rs], opts);
  }

  int best = 0;
  for (int rs = 1; rs < opts.restarts; ++rs)
    if (results[rs].objective < results[best].objective) best = rs;

  CpslResult out;
  out.best_restart = best;
  out.objective = results[best].objective;
  out.converged = results[best].converged;
  out.objective_trace = results[best].trace;
  const cvec z = pb.z_of(results[best].x);
  out.w_rx = v_basis * z;
  out.w_rx /= out.w_rx.norm();
  return out;
}

double cpsl_gradient_selftest(const AbfScenario& scn, const cvec& w_tx,
                              const si::SiChannelSet& si_estimate,
                              const CrpMask& mask, std::uint64_t seed) {
  AbfScenario freq_scn = scn;
  freq_scn.config = scn.nsp.n_freq > 0 ? AbfConfig::cf_b : AbfConfig::cf_a;
  const nsp::Projector proj =
      rx_projector(freq_scn, w_tx, si_estimate, false);
  cmat v_basis;
  if (proj.rank_nulled == 0) {
    v_basis = cmat::Identity(scn.array.l_rx, scn.array.l_rx);
  } else {
    Eigen::SelfAdjointEigenSolver<cmat> eig(proj.matrix);
    v_basis = eig.eigenvectors().rightCols(scn.array.l_rx - proj.rank_nulled);
  }
  const CpslProblem pb = build_problem(scn, w_tx, v_basis, mask);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  rvec x(2 * pb.k);
  for (int i = 0; i < x.size(); ++i) x(i) = gauss(rng);
  x /= x.norm();

  rvec r;
  rmat j;
  pb.residuals_jacobian(x, r, j);
  const rvec g_analytic = 2.0 * j.transpose() * r;

  rvec g_fd(x.size());
  const double h = 1e-6;
  for (int i = 0; i < x.size(); ++i) {
    rvec xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g_fd(i) = (pb.objective(xp) - pb.objective(xm)) / (2.0 * h);
  }
  const double scale = g_analytic.cwiseAbs().maxCoeff();
  return (g_analytic - g_fd).cwiseAbs().maxCoeff() / std::max(scale, 1e-30);
}

}  // namespace jcas::abf
