#include "jcas/array.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace jcas {

void ArrayConfig::validate() const {
  if (l_tx < 1 || l_rx < 1 || l_rf_tx < 1 || l_rf_rx < 1)
    throw ConfigError("array: all element and RF chain counts must be >= 1");
  if (l_tx % l_rf_tx != 0)
    throw ConfigError("array: l_rf_tx must divide l_tx");
  if (l_rx % l_rf_rx != 0)
    throw ConfigError("array: l_rf_rx must divide l_rx");
  if (!(d_ant > 0.0))
    throw ConfigError("array: d_ant must be > 0");
  if (!(tx_rx_gap > 0.0))
    throw ConfigError("array: tx_rx_gap must be > 0");
}

void WaveformConfig::validate() const {
  if (n_subcarriers < 1)
    throw ConfigError("waveform: n_subcarriers must be >= 1");
  if (!(delta_f > 0.0))
    throw ConfigError("waveform: delta_f must be > 0");
  if (n_symbols < 1)
    throw ConfigError("waveform: n_symbols must be >= 1");
  if (!(subcarrier_freq(0) > 0.0))
    throw ConfigError("waveform: lowest subcarrier frequency must be > 0");
}

double default_spacing(const WaveformConfig& wf) {
  return 0.5 * kC0 / wf.f_center;
}

void GainPattern::validate() const {
  if (angles_deg.size() != gains_db.size())
    throw ConfigError("gain pattern: angle and gain lengths differ");
  for (std::size_t i = 1; i < angles_deg.size(); ++i)
    if (!(angles_deg[i] > angles_deg[i - 1]))
      throw ConfigError("gain pattern: angles must be strictly increasing");
}

double electrical_angle(const ArrayConfig& cfg, double wavelength,
                        double theta_deg) {
  return 2.0 * kPi * (cfg.d_ant / wavelength) * std::sin(deg2rad(theta_deg));
}

cvec steering_vector(const ArrayConfig& cfg, Side side, double wavelength,
                     double theta_deg) {
  const int n = side == Side::tx ? cfg.l_tx : cfg.l_rx;
  const double phi = electrical_angle(cfg, wavelength, theta_deg);
  cvec a(n);
  for (int i = 0; i < n; ++i) a(i) = std::polar(1.0, i * phi);
  return a;
}

cvec subarray_steering(const ArrayConfig& cfg, Side side, int subarray,
                       double wavelength, double theta_deg) {
  const int n_sub = side == Side::tx ? cfg.tx_subarray_size()
                                     : cfg.rx_subarray_size();
  const int n_rf = side == Side::tx ? cfg.l_rf_tx : cfg.l_rf_rx;
  if (subarray < 0 || subarray >= n_rf)
    throw std::out_of_range("subarray index " + std::to_string(subarray) +
                            " outside [0, " + std::to_string(n_rf) + ")");
  const double phi = electrical_angle(cfg, wavelength, theta_deg);
  cvec a(n_sub);
  for (int i = 0; i < n_sub; ++i)
    a(i) = std::polar(1.0, (subarray * n_sub + i) * phi);
  return a;
}

double tx_gain_hbf(const ArrayConfig& cfg, const cmat& w_rf_tx,
                   const cvec& w_bb_u, double wavelength, double theta_deg) {
  if (w_rf_tx.rows() != cfg.l_tx || w_rf_tx.cols() != cfg.l_rf_tx ||
      w_bb_u.size() != cfg.l_rf_tx)
    throw std::invalid_argument("tx_gain_hbf: weight dimensions do not match array config");
  const cvec a = steering_vector(cfg, Side::tx, wavelength, theta_deg);
  const cplx v = a.dot(w_rf_tx * w_bb_u);  // a^H W_RF w_bb
  return std::norm(v);
}

double rx_gain_subarray(const ArrayConfig& cfg, const cvec& w_rf_rx_l,
                        int subarray, double wavelength, double theta_deg) {
  if (w_rf_rx_l.size() != cfg.rx_subarray_size())
    throw std::invalid_argument("rx_gain_subarray: weight length does not match subarray size");
  const cvec a = subarray_steering(cfg, Side::rx, subarray, wavelength,
                                   theta_deg);
  return std::norm(w_rf_rx_l.dot(a));  // |w^H a|^2
}

double abf_gain(const ArrayConfig& cfg, Side side, const cvec& w,
                double wavelength, double theta_deg) {
  const int n = side == Side::tx ? cfg.l_tx : cfg.l_rx;
  if (w.size() != n)
    throw std::invalid_argument("abf_gain: weight length does not match array size");
  const cvec a = steering_vector(cfg, side, wavelength, theta_deg);
  return std::norm(a.dot(w));
}

AbfPatterns abf_gains(const ArrayConfig& cfg, const cvec& w_tx,
                      const cvec& w_rx, double wavelength,
                      const std::vector<double>& theta_grid_deg) {
  if (theta_grid_deg.empty())
    throw std::invalid_argument("abf_gains: empty angle grid");
  AbfPatterns out;
  out.tx.angles_deg = theta_grid_deg;
  out.rx.angles_deg = theta_grid_deg;
  out.crp.angles_deg = theta_grid_deg;
  const std::size_t s = theta_grid_deg.size();
  out.tx.gains_db.resize(s);
  out.rx.gains_db.resize(s);
  out.crp.gains_db.resize(s);
  for (std::size_t i = 0; i < s; ++i) {
    const double gt = to_db(abf_gain(cfg, Side::tx, w_tx, wavelength,
                                     theta_grid_deg[i]));
    const double gr = to_db(abf_gain(cfg, Side::rx, w_rx, wavelength,
                                     theta_grid_deg[i]));
    out.tx.gains_db[i] = gt;
    out.rx.gains_db[i] = gr;
    out.crp.gains_db[i] = gt + gr;
  }
  return out;
}

std::vector<double> default_angle_grid(double step_deg, double min_deg,
                                       double max_deg) {
  std::vector<double> grid;
  const int n = static_cast<int>(std::llround((max_deg - min_deg) / step_deg));
  grid.reserve(n + 1);
  for (int i = 0; i <= n; ++i) grid.push_back(min_deg + i * step_deg);
  return grid;
}

void save_gain_pattern(const GainPattern& p, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << "angle_deg,gain_db\n";
  char buf[64];
  for (std::size_t i = 0; i < p.angles_deg.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", p.angles_deg[i],
                  p.gains_db[i]);
    f << buf;
  }
}

}  // namespace jcas
