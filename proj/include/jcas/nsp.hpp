#pragma once

#include <string>
#include <vector>

#include "jcas/array.hpp"
#include "jcas/common.hpp"
#include "jcas/sichannel.hpp"

namespace jcas::nsp {

struct NspConfig {
  int n_freq = 0;
  std::vector<int> null_subcarriers;  // empty -> uniform placement rule
  int n_ang = 0;
  std::vector<double> null_angles_deg;
  double svd_rcond = 1e-10;

  void validate() const;

  /// Explicit list when given, otherwise the uniform rule; deduplicates
  /// colliding indices (with a warning on stderr).
  std::vector<int> resolve_null_subcarriers(const WaveformConfig& wf) const;
};

/// Null-space projector P = I - B B^dagger. Hermitian and idempotent;
/// P annihilates the columns of B.
struct Projector {
  cmat matrix;
  int rank_nulled = 0;

  int dim() const { return static_cast<int>(matrix.rows()); }
};

/// Moore-Penrose pseudoinverse via SVD; singular values below
/// rcond * sigma_max are treated as zero.
cmat pseudoinverse(const cmat& m, double rcond = 1e-10);

/// Builds P = I - b b^dagger from constraint columns in the weight space.
/// Throws FullRankNullspaceError when the constraints span the whole space.
Projector projector_from_columns(const cmat& b, double rcond = 1e-10);

/// Subcarriers nearest to f_low + BW * n' / (n_freq + 1), n' = 1..n_freq,
/// with f_low = f_center - BW/2 and BW = N * delta_f.
std::vector<int> uniform_null_frequencies(const WaveformConfig& wf, int n_freq);

/// Wideband SI constraint matrix for one RX subarray: one block of columns
/// H_hat_SI,n * W_RF * W_BB,n (restricted to the subarray's RX rows) per null
/// subcarrier. Result is (l_rx/l_rf_rx) x (n_nulls * U).
cmat si_constraints_hbf(const si::SiChannelSet& si_estimate,
                        const cmat& w_rf_tx,
                        const std::vector<cmat>& w_bb_per_null,
                        int rx_subarray, const std::vector<int>& null_subcarriers,
                        const ArrayConfig& cfg);

/// Analog-array constraint matrix: n_freq SI image columns H_hat_SI,n w_tx
/// followed by RX steering columns at the null angles (center subcarrier).
cmat si_constraints_abf(const si::SiChannelSet& si_estimate, const cvec& w_tx,
                        const std::vector<int>& null_subcarriers,
                        const std::vector<cvec>& rx_steering_at_null_angles);

/// Inter-user constraint rows for user u: a_tx(theta_c,u')^H W_RF for all
/// u' != u. Result is (U-1) x l_rf_tx. Duplicate user directions trigger a
/// DegenerateDirections warning on stderr; the projector remains valid.
cmat iui_constraints(const cmat& w_rf_tx, int user,
                     const std::vector<double>& comm_angles_deg,
                     double wavelength, const ArrayConfig& cfg);

/// Average beamformed SI power over the whole band per (subarray, user),
/// in dB, evaluated against the given (true) channel. Eq.-style mean
/// (1/N) sum_n |c_SI,n,l,u|^2, clamped at -300 dB.
rmat average_si_suppression(const si::SiChannelSet& si_true,
                            const cmat& w_rf_tx, const cmat& w_bb_tx,
                            const std::vector<cvec>& w_rf_rx,
                            const ArrayConfig& cfg);

/// Analog-array counterpart: scalar average of |w_rx^H H_SI,n w_tx|^2 in dB.
double average_si_suppression_abf(const si::SiChannelSet& si_true,
                                  const cvec& w_tx, const cvec& w_rx);

/// Per-subcarrier beamformed SI power |w_rx^H H_SI,n w_tx|^2 (linear).
std::vector<double> beamformed_si_profile_abf(const si::SiChannelSet& si,
                                              const cvec& w_tx,
                                              const cvec& w_rx);

/// Debug export: complex matrix as CSV with interleaved re,im columns.
void save_matrix_csv(const cmat& m, const std::string& path);

}  // namespace jcas::nsp
