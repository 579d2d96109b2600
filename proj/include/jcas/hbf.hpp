#pragma once

#include <limits>
#include <string>
#include <vector>

#include "jcas/array.hpp"
#include "jcas/common.hpp"
#include "jcas/nsp.hpp"
#include "jcas/sichannel.hpp"

namespace jcas::hbf {

/// How the TX RF stage is built.
///  - subarray: block-diagonal, one phase-only steering column per subarray
///    (directions assigned round-robin over {radar, users...} unless an
///    explicit assignment is given). With isotropic elements this structure
///    caps the sum of the users' achievable gains at l_tx, so high per-user
///    gain requirements can be genuinely infeasible.
///  - fully_connected: every RF chain feeds all elements; columns are
///    steering vectors over the same direction set. l_rf_tx == l_tx always
///    uses the identity (full digital).
enum class RfStructure { subarray, fully_connected };

struct HbfScenario {
  ArrayConfig array;
  WaveformConfig wf;
  double theta_rad_deg = 0.0;
  std::vector<double> theta_comm_deg;
  std::vector<double> mu_db;          // per user; -inf disables the constraint
  std::vector<double> stream_powers;  // linear, defaults to 1
  nsp::NspConfig nsp;
  RfStructure rf_structure = RfStructure::subarray;
  std::vector<int> rf_assignment;     // optional: direction index per chain

  int n_users() const { return static_cast<int>(theta_comm_deg.size()); }
  void validate() const;
};

struct BeamformerWeights {
  cmat w_rf_tx;               // l_tx x l_rf_tx
  cmat w_bb_tx;               // l_rf_tx x U, designed at the center subcarrier
  std::vector<cvec> w_rf_rx;  // one vector per RX subarray
};

struct TxDesign {
  cmat w_rf_tx;
  cmat w_bb_tx;
  double radar_gain_db = 0.0;           // 10log10(sum_u G_u(theta_rad))
  std::vector<double> comm_gains_db;    // achieved G_u(theta_comm,u)
  std::vector<bool> mu_active;          // constraint active at the optimum
};

/// TX RF matrix for the scenario (no BB stage applied).
cmat build_tx_rf(const HbfScenario& scn);

/// Joint TX design: RF per `rf_structure`, per-user BB weights maximizing
/// the radar-direction gain subject to the per-user minimum communication
/// gain, unit effective norm, and exact inter-user nulls. Throws
/// InfeasibleError when a mu cannot be met inside the null space.
TxDesign design_tx(const HbfScenario& scn);

/// Closed-form NSP-constrained RX weights per subarray:
/// w_l = N_SI,l a_l(theta_rad) / ||.||.
std::vector<cvec> design_rx(const HbfScenario& scn, const cmat& w_rf_tx,
                            const cmat& w_bb_tx,
                            const si::SiChannelSet& si_estimate);

/// Beamformed TX power at the radar direction: sum_u G_u(theta_rad) P_u.
double tx_radar_power(const HbfScenario& scn, const BeamformerWeights& w);

/// CSV export, header `role,chain_or_user,subcarrier,element,re,im`.
/// Frequency-flat entries carry subcarrier = -1.
void save_weights_csv(const BeamformerWeights& w, const std::string& path);

}  // namespace jcas::hbf
