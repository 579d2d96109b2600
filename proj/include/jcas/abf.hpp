#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jcas/array.hpp"
#include "jcas/common.hpp"
#include "jcas/nsp.hpp"
#include "jcas/sichannel.hpp"

namespace jcas::abf {

/// RX beamformer variants for the analog array.
///  cf_a: matched filter only.
///  cf_b: adds n_freq SI frequency nulls.
///  cf_c: adds angular nulls at the communication directions on top of cf_b.
///  cpsl: least-squares fit of the combined radar pattern to a mask,
///        constrained to the SI null space (frequency nulls only).
enum class AbfConfig { cf_a, cf_b, cf_c, cpsl };

AbfConfig abf_config_from_string(const std::string& s);
std::string to_string(AbfConfig c);

struct AbfScenario {
  ArrayConfig array;
  WaveformConfig wf;
  double theta_rad_deg = 0.0;
  std::vector<double> theta_comm_deg;
  double rho_rad = 1.0;
  std::vector<double> rho_comm;
  nsp::NspConfig nsp;
  AbfConfig config = AbfConfig::cf_a;

  int n_users() const { return static_cast<int>(theta_comm_deg.size()); }
  void validate() const;
};

/// Desired combined-radar-pattern mask: parabolic mainlobe of width
/// delta_deg around theta_rad, flat g_max + cpsl outside.
struct CrpMask {
  double theta_rad_deg = 0.0;
  double g_max_db = 0.0;
  double delta_deg = 0.0;
  double cpsl_db = 0.0;           // negative
  std::vector<double> grid_deg;   // evaluation directions theta_s
  std::vector<double> eta;        // per-direction weights, defaults to 1

  void validate() const;
  static CrpMask make(double theta_rad_deg, double g_max_db, double delta_deg,
                      double cpsl_db, double grid_step_deg = 0.5);
};

struct SolverOptions {
  int restarts = 8;
  int max_iters = 500;
  double tol = 1e-8;
  std::uint64_t seed = 1;
  double grid_step_deg = 0.5;
  Exec exec = Exec::parallel;
};

/// rho-weighted coherent combination of per-beam matched weights,
/// renormalized to unit norm.
cvec cf_tx_weights(const AbfScenario& scn);

/// Closed-form RX weights w = N_RF a_rx(theta_rad) / ||.|| with the null
/// structure selected by scn.config (cf_a/cf_b/cf_c).
cvec cf_rx_weights(const AbfScenario& scn, const cvec& w_tx,
                   const si::SiChannelSet& si_estimate);

double desired_crp(const CrpMask& mask, double theta_deg);

struct CpslResult {
  cvec w_rx;
  double objective = 0.0;
  bool converged = false;
  std::vector<double> objective_trace;  // accepted values, non-increasing
  int best_restart = 0;
};

/// Gauss-Newton (Levenberg damped) fit of the dB-domain CRP to the mask over
/// the SI null space. Starts from the cf_c closed form plus seeded
/// perturbations; the returned weights are never worse than the start.
CpslResult cpsl_optimize(const AbfScenario& scn, const cvec& w_tx,
                         const si::SiChannelSet& si_estimate,
                         const CrpMask& mask, const SolverOptions& opts);

/// Peak CRP outside |theta - theta_rad| <= delta/2, relative to the CRP
/// peak, in dB.
double measure_cpsl(const GainPattern& crp, double theta_rad_deg,
                    double delta_deg);

/// Built-in check: analytic objective gradient against central finite
/// differences; returns the maximum relative error over the coordinates.
double cpsl_gradient_selftest(const AbfScenario& scn, const cvec& w_tx,
                              const si::SiChannelSet& si_estimate,
                              const CrpMask& mask, std::uint64_t seed = 7);

}  // namespace jcas::abf
