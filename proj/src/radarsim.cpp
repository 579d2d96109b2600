#include "jcas/radarsim.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>

#include <fftw3.h>

#include <nlohmann/json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace jcas::sim {

void TargetSpec::validate() const {
  if (!(range_m > 0.0)) throw ConfigError("target: range_m must be > 0");
  if (rcs_m2 < 0.0) throw ConfigError("target: rcs_m2 must be >= 0");
}

void check_far_field(const ArrayConfig& cfg, const WaveformConfig& wf,
                     const TargetSpec& t) {
  const double lam = wf.center_wavelength();
  const double ap = std::max(cfg.l_tx, cfg.l_rx) * cfg.d_ant;
  const double limit = 2.0 * ap * ap / lam;
  if (t.range_m < limit)
    std::cerr << "warning: target at " << t.range_m
              << " m is inside the far-field limit of " << limit << " m\n";
}

Window window_from_string(const std::string& s) {
  if (s == "rect") return Window::rect;
  if (s == "hamming") return Window::hamming;
  throw ConfigError("unknown window '" + s + "'");
}

std::string to_string(Window w) {
  return w == Window::rect ? "rect" : "hamming";
}

cplx target_channel_coeff(const WaveformConfig& wf, const TargetSpec& target,
                          int subcarrier) {
  target.validate();
  const double lam = wf.wavelength(subcarrier);
  const double d = target.range_m;
  const double b = std::sqrt(lam * lam * target.rcs_m2 /
                             (std::pow(4.0 * kPi, 3) * std::pow(d, 4)));
  const double tau = 2.0 * d / kC0;
  return std::polar(b, -2.0 * kPi * subcarrier * wf.delta_f * tau);
}

std::vector<cmat> make_qpsk_symbols(const WaveformConfig& wf, int n_streams,
                                    std::uint64_t seed) {
  const int n = wf.n_subcarriers, m = wf.n_symbols;
  const double amp =
      std::sqrt(db_to_lin(wf.tx_power_dbm) / n);  // per-subcarrier power
  static const cplx kQpsk[4] = {{M_SQRT1_2, M_SQRT1_2},
                                {M_SQRT1_2, -M_SQRT1_2},
                                {-M_SQRT1_2, M_SQRT1_2},
                                {-M_SQRT1_2, -M_SQRT1_2}};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, 3);
  std::vector<cmat> out(n_streams);
  for (int u = 0; u < n_streams; ++u) {
    out[u].resize(n, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) out[u](i, j) = amp * kQpsk[pick(rng)];
  }
  return out;
}

cmat synth_received_abf(const ArrayConfig& cfg, const WaveformConfig& wf,
                        const cvec& w_tx, const cvec& w_rx,
                        const std::vector<TargetSpec>& targets,
                        const si::SiChannelSet* si_true, const cmat& symbols,
                        std::uint64_t noise_seed, bool noise_on) {
  if (w_tx.size() != cfg.l_tx || w_rx.size() != cfg.l_rx)
    throw std::invalid_argument("synth_received_abf: weight dimensions mismatch");
  if (symbols.rows() != wf.n_subcarriers || symbols.cols() != wf.n_symbols)
    throw std::invalid_argument("synth_received_abf: symbol grid mismatch");
  const int n = wf.n_subcarriers, m = wf.n_symbols;

  cmat rx(n, m);
  const double sigma =
      std::sqrt(db_to_lin(wf.noise_power_dbm) / n) * w_rx.norm();
  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (int i = 0; i < n; ++i) {
    const double lam = wf.wavelength(i);
    cplx chan = 0.0;
    for (const TargetSpec& t : targets) {
      if (t.rcs_m2 == 0.0) continue;
      const cvec a_rx = steering_vector(cfg, Side::rx, lam, t.theta_deg);
      const cvec a_tx = steering_vector(cfg, Side::tx, lam, t.theta_deg);
      chan += w_rx.dot(a_rx) * target_channel_coeff(wf, t, i) *
              (a_tx.dot(w_tx));
    }
    if (si_true) chan += w_rx.dot(si_true->at(i) * w_tx);
    for (int j = 0; j < m; ++j) {
      cplx y = chan * symbols(i, j);
      if (noise_on)
        y += sigma * M_SQRT1_2 * cplx(gauss(rng), gauss(rng));
      rx(i, j) = y;
    }
  }
  return rx;
}

std::vector<cmat> synth_received_hbf(const ArrayConfig& cfg,
                                     const WaveformConfig& wf,
                                     const hbf::BeamformerWeights& w,
                                     const std::vector<TargetSpec>& targets,
                                     const si::SiChannelSet* si_true,
                                     const std::vector<cmat>& symbols,
                                     std::uint64_t noise_seed, bool noise_on) {
  const int n_users = static_cast<int>(w.w_bb_tx.cols());
  if (static_cast<int>(symbols.size()) != n_users)
    throw std::invalid_argument("synth_received_hbf: one symbol grid per stream required");
  const int n = wf.n_subcarriers, m = wf.n_symbols;
  const int n_chains = static_cast<int>(w.w_rf_rx.size());
  const int sub = cfg.rx_subarray_size();
  const cmat tx_eff = w.w_rf_tx * w.w_bb_tx;  // l_tx x U

  std::vector<cmat> rx(n_chains, cmat(n, m));
  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double noise_pow = db_to_lin(wf.noise_power_dbm) / n;

  for (int i = 0; i < n; ++i) {
    const double lam = wf.wavelength(i);
    // chan(l, u): effective scalar channel stream u -> chain l
    cmat chan = cmat::Zero(n_chains, n_users);
    for (const TargetSpec& t : targets) {
      if (t.rcs_m2 == 0.0) continue;
      const cvec a_tx = steering_vector(cfg, Side::tx, lam, t.theta_deg);
      const cplx h = target_channel_coeff(wf, t, i);
      Eigen::RowVectorXcd dep = a_tx.adjoint() * tx_eff;  // 1 x U
      for (int l = 0; l < n_chains; ++l) {
        const cvec a_rx = subarray_steering(cfg, Side::rx, l, lam, t.theta_deg);
        chan.row(l) += w.w_rf_rx[l].dot(a_rx) * h * dep;
      }
    }
    if (si_true) {
      const cmat& h_si = si_true->at(i);
      for (int l = 0; l < n_chains; ++l)
        chan.row(l) +=
            w.w_rf_rx[l].adjoint() * h_si.middleRows(l * sub, sub) * tx_eff;
    }
    for (int j = 0; j < m; ++j)
      for (int l = 0; l < n_chains; ++l) {
        cplx y = 0.0;
        for (int u = 0; u < n_users; ++u) y += chan(l, u) * symbols[u](i, j);
        if (noise_on) {
          const double s = std::sqrt(noise_pow) * w.w_rf_rx[l].norm();
          y += s * M_SQRT1_2 * cplx(gauss(rng), gauss(rng));
        }
        rx[l](i, j) = y;
      }
  }
  return rx;
}

namespace {

std::vector<double> window_taps(Window w, int n) {
  std::vector<double> taps(n, 1.0);
  if (w == Window::hamming && n > 1)
    for (int i = 0; i < n; ++i)
      taps[i] = 0.54 - 0.46 * std::cos(2.0 * kPi * i / (n - 1));
  return taps;
}

// FFTW planning is not thread-safe; executions on private buffers are.
std::mutex g_fftw_mutex;

class InverseFft {
 public:
  explicit InverseFft(int n) : n_(n) {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    in_ = fftw_alloc_complex(n);
    out_ = fftw_alloc_complex(n);
    plan_ = fftw_plan_dft_1d(n, in_, out_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~InverseFft() {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  InverseFft(const InverseFft&) = delete;
  InverseFft& operator=(const InverseFft&) = delete;

  void execute(const std::vector<cplx>& in, std::vector<cplx>& out) {
    for (int i = 0; i < n_; ++i) {
      in_[i][0] = i < static_cast<int>(in.size()) ? in[i].real() : 0.0;
      in_[i][1] = i < static_cast<int>(in.size()) ? in[i].imag() : 0.0;
    }
    fftw_execute(plan_);
    out.resize(n_);
    for (int i = 0; i < n_; ++i) out[i] = cplx(out_[i][0], out_[i][1]);
  }

 private:
  int n_;
  fftw_complex* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

std::vector<double> profile_from_dechirped(const std::vector<std::vector<cplx>>& per_symbol,
                                           Window window, int fft_size) {
  const int n = static_cast<int>(per_symbol.front().size());
  const std::vector<double> taps = window_taps(window, n);
  InverseFft fft(fft_size);
  std::vector<double> profile(fft_size, 0.0);
  std::vector<cplx> buf(n), spec;
  for (const auto& q : per_symbol) {
    for (int i = 0; i < n; ++i) buf[i] = q[i] * taps[i];
    fft.execute(buf, spec);
    for (int k = 0; k < fft_size; ++k) profile[k] += std::abs(spec[k]);
  }
  const double scale = 1.0 / (per_symbol.size() * n);
  for (double& v : profile) v *= scale;
  return profile;
}

}  // namespace

int default_fft_size(int n_subcarriers) {
  int f = 1;
  while (f < n_subcarriers) f *= 2;
  return f;
}

std::vector<double> range_profile(const cmat& rx, const cmat& tx,
                                  Window window, int fft_size) {
  if (rx.rows() != tx.rows() || rx.cols() != tx.cols())
    throw std::invalid_argument("range_profile: rx/tx grids differ");
  if (fft_size < rx.rows())
    throw std::invalid_argument("range_profile: fft_size must be >= subcarrier count");
  const int n = static_cast<int>(rx.rows()), m = static_cast<int>(rx.cols());
  std::vector<std::vector<cplx>> per_symbol(m, std::vector<cplx>(n));
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) per_symbol[j][i] = rx(i, j) / tx(i, j);
  return profile_from_dechirped(per_symbol, window, fft_size);
}

cvec second_stage_combiner(const ArrayConfig& cfg, const WaveformConfig& wf,
                           const std::vector<cvec>& w_rf_rx,
                           double theta_rad_deg,
                           const std::vector<double>& theta_comm_deg,
                           double svd_rcond) {
  const double lam = wf.center_wavelength();
  const int n_chains = static_cast<int>(w_rf_rx.size());
  auto response = [&](double theta) {
    cvec e(n_chains);
    for (int l = 0; l < n_chains; ++l)
      e(l) = w_rf_rx[l].dot(subarray_steering(cfg, Side::rx, l, lam, theta));
    return e;
  };
  const cvec e_rad = response(theta_rad_deg);
  if (theta_comm_deg.empty() || n_chains == 1) return e_rad / e_rad.norm();

  cmat d(n_chains, theta_comm_deg.size());
  for (std::size_t u = 0; u < theta_comm_deg.size(); ++u)
    d.col(u) = response(theta_comm_deg[u]);
  const nsp::Projector p = nsp::projector_from_columns(d, svd_rcond);
  const cvec g = p.matrix * e_rad;
  const double nrm = g.norm();
  if (nrm < 1e-12)
    throw FullRankNullspaceError("second-stage combiner: nulls leave no freedom");
  return g / nrm;
}

std::vector<double> hbf_range_profile(const std::vector<cmat>& rx_chains,
                                      const cvec& combiner,
                                      const std::vector<cmat>& symbols,
                                      Window window, int fft_size) {
  const int n_chains = static_cast<int>(rx_chains.size());
  if (combiner.size() != n_chains)
    throw std::invalid_argument("hbf_range_profile: combiner length mismatch");
  const int n = static_cast<int>(rx_chains.front().rows());
  const int m = static_cast<int>(rx_chains.front().cols());
  const int n_users = static_cast<int>(symbols.size());
  if (fft_size < n)
    throw std::invalid_argument("hbf_range_profile: fft_size must be >= subcarrier count");
  if (m < n_users)
    throw std::invalid_argument("hbf_range_profile: need at least U symbols for the LS estimate");

  // Combined scalar output, then per-subcarrier LS estimate of each
  // stream's effective channel from the known symbols.
  std::vector<std::vector<cplx>> streams(n_users, std::vector<cplx>(n));
  Eigen::RowVectorXcd y(m);
  cmat x(n_users, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      cplx acc = 0.0;
      for (int l = 0; l < n_chains; ++l)
        acc += std::conj(combiner(l)) * rx_chains[l](i, j);
      y(j) = acc;
    }
    for (int u = 0; u < n_users; ++u) x.row(u) = symbols[u].row(i);
    const cmat gram = x * x.adjoint();  // U x U
    const Eigen::RowVectorXcd c =
        (y * x.adjoint()) * gram.inverse();
    for (int u = 0; u < n_users; ++u) streams[u][i] = c(u);
  }

  const std::vector<double> taps = window_taps(window, n);
  InverseFft fft(fft_size);
  std::vector<double> power(fft_size, 0.0);
  std::vector<cplx> buf(n), spec;
  for (int u = 0; u < n_users; ++u) {
    for (int i = 0; i < n; ++i) buf[i] = streams[u][i] * taps[i];
    fft.execute(buf, spec);
    for (int k = 0; k < fft_size; ++k) power[k] += std::norm(spec[k]);
  }
  std::vector<double> profile(fft_size);
  const double scale = 1.0 / n;
  for (int k = 0; k < fft_size; ++k)
    profile[k] = std::sqrt(power[k]) * scale;
  return profile;
}

namespace {

RadarImage scan_common(const ArrayConfig& cfg, const WaveformConfig& wf,
                       const std::vector<TargetSpec>& targets,
                       const ScanConfig& scan, std::uint64_t seed, Exec exec,
                       const std::function<std::vector<double>(
                           double /*theta*/, std::uint64_t /*noise_seed*/)>& per_angle) {
  for (const TargetSpec& t : targets) {
    t.validate();
    check_far_field(cfg, wf, t);
  }
  const int fft_size =
      scan.fft_size > 0 ? scan.fft_size : default_fft_size(wf.n_subcarriers);
  if (fft_size < wf.n_subcarriers)
    throw ConfigError("scan: fft_size must be >= n_subcarriers");

  RadarImage img;
  img.fft_size = fft_size;
  img.window = to_string(scan.window);
  const int n_angles = static_cast<int>(std::llround(
                           (scan.angle_max_deg - scan.angle_min_deg) /
                           scan.angle_step_deg)) + 1;
  img.angles_deg.resize(n_angles);
  for (int i = 0; i < n_angles; ++i)
    img.angles_deg[i] = scan.angle_min_deg + i * scan.angle_step_deg;

  const double bin_w = kC0 / (2.0 * fft_size * wf.delta_f);
  int n_bins = fft_size;
  if (scan.max_range_m > 0)
    n_bins = std::min(fft_size,
                      static_cast<int>(std::floor(scan.max_range_m / bin_w)) + 1);
  img.range_bins_m.resize(n_bins);
  for (int k = 0; k < n_bins; ++k) img.range_bins_m[k] = k * bin_w;

  img.magnitude_db.resize(n_angles, n_bins);
  auto run_angle = [&](int i) {
    const std::vector<double> profile =
        per_angle(img.angles_deg[i], derive_seed(seed, 1000 + i));
    for (int k = 0; k < n_bins; ++k)
      img.magnitude_db(i, k) =
          20.0 * std::log10(std::max(profile[k], 1e-15));
  };

  if (exec == Exec::parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int i = 0; i < n_angles; ++i) run_angle(i);
  } else {
    for (int i = 0; i < n_angles; ++i) run_angle(i);
  }
  return img;
}

}  // namespace

RadarImage scan_abf(const ArrayConfig& cfg, const WaveformConfig& wf,
                    const AbfDesigner& designer,
                    const std::vector<TargetSpec>& targets,
                    const si::SiChannelSet* si_true, const ScanConfig& scan,
                    std::uint64_t seed, Exec exec) {
  const std::vector<cmat> symbols =
      make_qpsk_symbols(wf, 1, derive_seed(seed, 1));
  const int fft_size =
      scan.fft_size > 0 ? scan.fft_size : default_fft_size(wf.n_subcarriers);
  return scan_common(
      cfg, wf, targets, scan, seed, exec,
      [&](double theta, std::uint64_t noise_seed) {
        const AbfBeams beams = designer(theta);
        const cmat rx =
            synth_received_abf(cfg, wf, beams.w_tx, beams.w_rx, targets,
                               si_true, symbols[0], noise_seed, scan.noise_on);
        return range_profile(rx, symbols[0], scan.window, fft_size);
      });
}

RadarImage scan_hbf(const ArrayConfig& cfg, const WaveformConfig& wf,
                    const HbfDesigner& designer,
                    const std::vector<TargetSpec>& targets,
                    const si::SiChannelSet* si_true, const ScanConfig& scan,
                    std::uint64_t seed, Exec exec) {
  const int fft_size =
      scan.fft_size > 0 ? scan.fft_size : default_fft_size(wf.n_subcarriers);
  std::vector<cmat> symbols;  // sized on first use; stream count from designer
  {
    const HbfBeams probe = designer(0.0);
    symbols = make_qpsk_symbols(
        wf, static_cast<int>(probe.weights.w_bb_tx.cols()), derive_seed(seed, 1));
  }
  return scan_common(
      cfg, wf, targets, scan, seed, exec,
      [&](double theta, std::uint64_t noise_seed) {
        const HbfBeams beams = designer(theta);
        const std::vector<cmat> rx =
            synth_received_hbf(cfg, wf, beams.weights, targets, si_true,
                               symbols, noise_seed, scan.noise_on);
        return hbf_range_profile(rx, beams.combiner, symbols, scan.window,
                                 fft_size);
      });
}

void save_radar_image(const RadarImage& img, const std::string& csv_path) {
  std::ofstream f(csv_path);
  if (!f) throw std::runtime_error("cannot open " + csv_path + " for writing");
  char buf[64];
  f << "angle_deg";
  for (double r : img.range_bins_m) {
    std::snprintf(buf, sizeof(buf), ",%.17g", r);
    f << buf;
  }
  f << "\n";
  for (int i = 0; i < img.magnitude_db.rows(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", img.angles_deg[i]);
    f << buf;
    for (int k = 0; k < img.magnitude_db.cols(); ++k) {
      std::snprintf(buf, sizeof(buf), ",%.17g", img.magnitude_db(i, k));
      f << buf;
    }
    f << "\n";
  }
  f.close();

  nlohmann::json meta;
  meta["window"] = img.window;
  meta["fft_size"] = img.fft_size;
  meta["scenario_hash"] = img.scenario_hash;
  meta["n_angles"] = img.angles_deg.size();
  meta["n_range_bins"] = img.range_bins_m.size();
  std::ofstream mf(csv_path + ".json");
  if (!mf) throw std::runtime_error("cannot open " + csv_path + ".json");
  mf << meta.dump(2) << "\n";
}

}  // namespace jcas::sim
