#pragma once

#include <string>
#include <vector>

#include "jcas/common.hpp"

namespace jcas {

/// Uniform linear array geometry shared by both beamforming architectures.
/// TX and RX are separate colinear ULAs; `tx_rx_gap` is the spacing between
/// the last TX element and the first RX element.
struct ArrayConfig {
  int l_tx = 1;
  int l_rx = 1;
  int l_rf_tx = 1;
  int l_rf_rx = 1;
  double d_ant = 0.0;      // element spacing, meters
  double tx_rx_gap = 0.0;  // TX edge to RX edge, meters

  int tx_subarray_size() const { return l_tx / l_rf_tx; }
  int rx_subarray_size() const { return l_rx / l_rf_rx; }

  void validate() const;
};

struct WaveformConfig {
  double f_center = 0.0;    // Hz
  int n_subcarriers = 1;    // N
  double delta_f = 0.0;     // Hz
  int n_symbols = 1;
  double tx_power_dbm = 0.0;
  double noise_power_dbm = -90.0;

  // Subcarrier grid is centered on the carrier: f_n = fc + (n - (N-1)/2) df.
  double subcarrier_freq(int n) const {
    return f_center + (n - 0.5 * (n_subcarriers - 1)) * delta_f;
  }
  double wavelength(int n) const { return kC0 / subcarrier_freq(n); }
  int center_subcarrier() const {
    return static_cast<int>(std::llround(0.5 * (n_subcarriers - 1)));
  }
  double center_wavelength() const { return wavelength(center_subcarrier()); }
  double bandwidth() const { return n_subcarriers * delta_f; }

  void validate() const;
};

/// Half-wavelength spacing at the carrier; the default element pitch.
double default_spacing(const WaveformConfig& wf);

struct GainPattern {
  std::vector<double> angles_deg;
  std::vector<double> gains_db;

  void validate() const;
};

enum class Side { tx, rx };

/// Electrical angle per element: 2*pi*(d/lambda)*sin(theta).
double electrical_angle(const ArrayConfig& cfg, double wavelength,
                        double theta_deg);

/// ULA steering vector; element i has phase i*Phi, element 0 is 1+0j.
cvec steering_vector(const ArrayConfig& cfg, Side side, double wavelength,
                     double theta_deg);

/// Steering sub-vector of one subarray, keeping the global element indices
/// so inter-subarray phase relations survive (needed when subarray outputs
/// are combined coherently).
cvec subarray_steering(const ArrayConfig& cfg, Side side, int subarray,
                       double wavelength, double theta_deg);

/// Effective TX gain of one stream: |a(theta)^H W_RF w_bb|^2.
double tx_gain_hbf(const ArrayConfig& cfg, const cmat& w_rf_tx,
                   const cvec& w_bb_u, double wavelength, double theta_deg);

/// RX gain of one subarray's RF chain: |w^H a_sub(theta)|^2.
double rx_gain_subarray(const ArrayConfig& cfg, const cvec& w_rf_rx_l,
                        int subarray, double wavelength, double theta_deg);

/// Single-weight-vector gain |a(theta)^H w|^2 (analog TX) or |w^H a|^2
/// (analog RX); the two coincide in magnitude.
double abf_gain(const ArrayConfig& cfg, Side side, const cvec& w,
                double wavelength, double theta_deg);

struct AbfPatterns {
  GainPattern tx;
  GainPattern rx;
  GainPattern crp;  // crp_db = tx_db + rx_db pointwise
};

AbfPatterns abf_gains(const ArrayConfig& cfg, const cvec& w_tx,
                      const cvec& w_rx, double wavelength,
                      const std::vector<double>& theta_grid_deg);

std::vector<double> default_angle_grid(double step_deg = 0.25,
                                       double min_deg = -90.0,
                                       double max_deg = 90.0);

void save_gain_pattern(const GainPattern& p, const std::string& path);

}  // namespace jcas
