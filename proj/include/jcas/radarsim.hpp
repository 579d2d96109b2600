#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "jcas/array.hpp"
#include "jcas/common.hpp"
#include "jcas/hbf.hpp"
#include "jcas/sichannel.hpp"

namespace jcas::sim {

struct TargetSpec {
  double theta_deg = 0.0;
  double range_m = 1.0;
  double rcs_m2 = 1.0;

  void validate() const;
};

/// Warns (stderr) when a target violates the far-field distance
/// 2 (L d_ant)^2 / lambda for either array.
void check_far_field(const ArrayConfig& cfg, const WaveformConfig& wf,
                     const TargetSpec& t);

enum class Window { rect, hamming };
Window window_from_string(const std::string& s);
std::string to_string(Window w);

/// Monostatic point-target channel coefficient at subcarrier n:
/// b * exp(-j 2 pi n df tau), b from the radar range equation, tau = 2d/c0.
cplx target_channel_coeff(const WaveformConfig& wf, const TargetSpec& target,
                          int subcarrier);

/// Unit-power QPSK symbol grids, one N x n_symbols matrix per stream,
/// scaled so the total transmit power across subcarriers is tx_power_dbm.
std::vector<cmat> make_qpsk_symbols(const WaveformConfig& wf, int n_streams,
                                    std::uint64_t seed);

/// Post-beamforming received samples for the analog architecture (N x M).
/// si_true may be null (no self-interference term).
cmat synth_received_abf(const ArrayConfig& cfg, const WaveformConfig& wf,
                        const cvec& w_tx, const cvec& w_rx,
                        const std::vector<TargetSpec>& targets,
                        const si::SiChannelSet* si_true, const cmat& symbols,
                        std::uint64_t noise_seed, bool noise_on);

/// Per-RX-chain received samples for the hybrid architecture.
std::vector<cmat> synth_received_hbf(const ArrayConfig& cfg,
                                     const WaveformConfig& wf,
                                     const hbf::BeamformerWeights& w,
                                     const std::vector<TargetSpec>& targets,
                                     const si::SiChannelSet* si_true,
                                     const std::vector<cmat>& symbols,
                                     std::uint64_t noise_seed, bool noise_on);

/// Subcarrier-domain range profile: element-wise divide rx/tx per symbol,
/// window across subcarriers, inverse DFT of length fft_size, average of the
/// per-symbol magnitudes. Bin k maps to k * c0 / (2 * fft_size * delta_f).
std::vector<double> range_profile(const cmat& rx, const cmat& tx,
                                  Window window, int fft_size);

/// Matched second-stage combiner across RX RF chains: maximizes the
/// subarray-combined response toward theta_rad with nulls at the
/// communication directions.
cvec second_stage_combiner(const ArrayConfig& cfg, const WaveformConfig& wf,
                           const std::vector<cvec>& w_rf_rx,
                           double theta_rad_deg,
                           const std::vector<double>& theta_comm_deg,
                           double svd_rcond = 1e-10);

/// Hybrid-architecture range profile: combines the chain outputs, estimates
/// each stream's effective channel per subcarrier by least squares over the
/// symbols, and sums the per-stream profiles noncoherently.
std::vector<double> hbf_range_profile(const std::vector<cmat>& rx_chains,
                                      const cvec& combiner,
                                      const std::vector<cmat>& symbols,
                                      Window window, int fft_size);

struct RadarImage {
  std::vector<double> range_bins_m;
  std::vector<double> angles_deg;
  rmat magnitude_db;  // angles x ranges, 20*log10 of profile amplitude
  std::string window;
  int fft_size = 0;
  std::uint64_t scenario_hash = 0;
};

struct ScanConfig {
  double angle_min_deg = -60.0;
  double angle_max_deg = 60.0;
  double angle_step_deg = 1.0;
  Window window = Window::hamming;
  int fft_size = 0;        // 0: next power of two >= N
  double max_range_m = 0;  // 0: full unambiguous range
  bool noise_on = true;
};

int default_fft_size(int n_subcarriers);

struct AbfBeams {
  cvec w_tx, w_rx;
};
struct HbfBeams {
  hbf::BeamformerWeights weights;
  cvec combiner;
};

/// Beam designer callbacks: given the scan (radar) direction, return the
/// weights to use. Must be pure; they are invoked concurrently.
using AbfDesigner = std::function<AbfBeams(double theta_rad_deg)>;
using HbfDesigner = std::function<HbfBeams(double theta_rad_deg)>;

RadarImage scan_abf(const ArrayConfig& cfg, const WaveformConfig& wf,
                    const AbfDesigner& designer,
                    const std::vector<TargetSpec>& targets,
                    const si::SiChannelSet* si_true, const ScanConfig& scan,
                    std::uint64_t seed, Exec exec);

RadarImage scan_hbf(const ArrayConfig& cfg, const WaveformConfig& wf,
                    const HbfDesigner& designer,
                    const std::vector<TargetSpec>& targets,
                    const si::SiChannelSet* si_true, const ScanConfig& scan,
                    std::uint64_t seed, Exec exec);

/// CSV matrix (first row range bins, first column angles) plus a JSON
/// metadata sidecar next to it (same path with .json appended).
void save_radar_image(const RadarImage& img, const std::string& csv_path);

}  // namespace jcas::sim
