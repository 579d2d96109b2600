#include "jcas/nsp.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

#include <Eigen/SVD>

namespace jcas::nsp {

void NspConfig::validate() const {
  if (n_freq < 0 || n_ang < 0)
    throw ConfigError("nsp: null counts must be >= 0");
  if (!null_subcarriers.empty() &&
      static_cast<int>(null_subcarriers.size()) != n_freq)
    throw ConfigError("nsp: null_subcarriers length must equal n_freq");
  if (static_cast<int>(null_angles_deg.size()) != n_ang)
    throw ConfigError("nsp: null_angles_deg length must equal n_ang");
  if (!(svd_rcond > 0.0 && svd_rcond < 1.0))
    throw ConfigError("nsp: svd_rcond must lie in (0, 1)");
}

std::vector<int> NspConfig::resolve_null_subcarriers(
    const WaveformConfig& wf) const {
  std::vector<int> out = null_subcarriers.empty() && n_freq > 0
                             ? uniform_null_frequencies(wf, n_freq)
                             : null_subcarriers;
  std::vector<int> dedup;
  std::set<int> used;
  for (int n : out) {
    if (n < 0 || n >= wf.n_subcarriers)
      throw ConfigError("nsp: null subcarrier " + std::to_string(n) +
                        " outside [0, N)");
    if (used.insert(n).second) dedup.push_back(n);
  }
  if (dedup.size() != out.size())
    std::cerr << "warning: duplicate null subcarriers collapsed ("
              << out.size() << " -> " << dedup.size() << ")\n";
  return dedup;
}

cmat pseudoinverse(const cmat& m, double rcond) {
  if (!m.allFinite())
    throw std::invalid_argument("pseudoinverse: non-finite entries");
  if (m.size() == 0) return cmat::Zero(m.cols(), m.rows());
  Eigen::JacobiSVD<cmat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cutoff = rcond * (sv.size() > 0 ? sv(0) : 0.0);
  rvec inv = rvec::Zero(sv.size());
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff && sv(i) > 0.0) inv(i) = 1.0 / sv(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

Projector projector_from_columns(const cmat& b, double rcond) {
  if (b.rows() < 1)
    throw std::invalid_argument("projector: constraint matrix needs rows");
  const auto dim = b.rows();
  Projector p;
  if (b.cols() == 0 || b.norm() == 0.0) {
    p.matrix = cmat::Identity(dim, dim);
    p.rank_nulled = 0;
    return p;
  }
  Eigen::JacobiSVD<cmat> svd(b, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double cutoff = rcond * sv(0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++rank;
  if (rank >= dim)
    throw FullRankNullspaceError(
        "constraints span the whole weight space (rank " +
        std::to_string(rank) + " of dim " + std::to_string(dim) + ")");
  // P = I - U_r U_r^H with U_r the leading left singular vectors; identical
  // to I - B B^dagger but numerically symmetric by construction.
  const cmat u_r = svd.matrixU().leftCols(rank);
  p.matrix = cmat::Identity(dim, dim) - u_r * u_r.adjoint();
  // Enforce exact Hermitian symmetry against roundoff.
  p.matrix = 0.5 * (p.matrix + p.matrix.adjoint().eval());
  p.rank_nulled = rank;
  return p;
}

std::vector<int> uniform_null_frequencies(const WaveformConfig& wf,
                                          int n_freq) {
  if (n_freq < 1)
    throw ConfigError("uniform_null_frequencies: n_freq must be >= 1");
  if (n_freq >= wf.n_subcarriers)
    throw ConfigError("uniform_null_frequencies: n_freq must be < N");
  const double bw = wf.bandwidth();
  const double f_low = wf.f_center - 0.5 * bw;
  std::vector<int> out;
  out.reserve(n_freq);
  for (int k = 1; k <= n_freq; ++k) {
    const double f_t = f_low + bw * k / (n_freq + 1.0);
    // f_n = fc + (n - (N-1)/2) df  =>  n = (f_t - fc)/df + (N-1)/2
    const double n_exact =
        (f_t - wf.f_center) / wf.delta_f + 0.5 * (wf.n_subcarriers - 1);
    int n = static_cast<int>(std::llround(n_exact));
    n = std::clamp(n, 0, wf.n_subcarriers - 1);
    out.push_back(n);
  }
  return out;
}

cmat si_constraints_hbf(const si::SiChannelSet& si_estimate,
                        const cmat& w_rf_tx,
                        const std::vector<cmat>& w_bb_per_null,
                        int rx_subarray, const std::vector<int>& null_subcarriers,
                        const ArrayConfig& cfg) {
  if (w_bb_per_null.size() != null_subcarriers.size())
    throw ConfigError("si_constraints_hbf: need BB weights for every null subcarrier");
  if (rx_subarray < 0 || rx_subarray >= cfg.l_rf_rx)
    throw std::out_of_range("si_constraints_hbf: bad subarray index");
  if (si_estimate.rx_count() != cfg.l_rx || si_estimate.tx_count() != cfg.l_tx)
    throw std::invalid_argument("si_constraints_hbf: channel shape does not match array");

  const int m = cfg.rx_subarray_size();
  const int n_users = w_bb_per_null.empty() ? 0 : static_cast<int>(w_bb_per_null.front().cols());
  cmat b(m, static_cast<int>(null_subcarriers.size()) * n_users);
  for (std::size_t k = 0; k < null_subcarriers.size(); ++k) {
    const int n = null_subcarriers[k];
    if (n < 0 || n >= si_estimate.n_subcarriers())
      throw ConfigError("si_constraints_hbf: null subcarrier outside channel set");
    const cmat rows =
        si_estimate.at(n).middleRows(rx_subarray * m, m);  // subarray's RX rows
    b.middleCols(static_cast<int>(k) * n_users, n_users) =
        rows * w_rf_tx * w_bb_per_null[k];
  }
  return b;
}

cmat si_constraints_abf(const si::SiChannelSet& si_estimate, const cvec& w_tx,
                        const std::vector<int>& null_subcarriers,
                        const std::vector<cvec>& rx_steering_at_null_angles) {
  const int l_rx = si_estimate.rx_count();
  if (si_estimate.tx_count() != w_tx.size())
    throw std::invalid_argument("si_constraints_abf: TX weight length mismatch");
  const int nf = static_cast<int>(null_subcarriers.size());
  const int na = static_cast<int>(rx_steering_at_null_angles.size());
  cmat f(l_rx, nf + na);
  for (int k = 0; k < nf; ++k) {
    const int n = null_subcarriers[k];
    if (n < 0 || n >= si_estimate.n_subcarriers())
      throw ConfigError("si_constraints_abf: null subcarrier outside channel set");
    f.col(k) = si_estimate.at(n) * w_tx;
  }
  for (int k = 0; k < na; ++k) {
    if (rx_steering_at_null_angles[k].size() != l_rx)
      throw std::invalid_argument("si_constraints_abf: steering length mismatch");
    f.col(nf + k) = rx_steering_at_null_angles[k];
  }
  return f;
}

cmat iui_constraints(const cmat& w_rf_tx, int user,
                     const std::vector<double>& comm_angles_deg,
                     double wavelength, const ArrayConfig& cfg) {
  const int n_users = static_cast<int>(comm_angles_deg.size());
  if (n_users < 1) throw ConfigError("iui_constraints: need at least one user");
  if (user < 0 || user >= n_users)
    throw std::out_of_range("iui_constraints: bad user index");

  for (int a = 0; a < n_users; ++a)
    for (int b = a + 1; b < n_users; ++b)
      if (std::abs(comm_angles_deg[a] - comm_angles_deg[b]) < 1e-9)
        std::cerr << "warning: DegenerateDirections: users " << a << " and "
                  << b << " share direction " << comm_angles_deg[a]
                  << " deg; IUI constraints are rank-deficient\n";

  cmat d(n_users - 1, w_rf_tx.cols());
  int row = 0;
  for (int u = 0; u < n_users; ++u) {
    if (u == user) continue;
    const cvec a = steering_vector(cfg, Side::tx, wavelength,
                                   comm_angles_deg[u]);
    d.row(row++) = a.adjoint() * w_rf_tx;
  }
  return d;
}

rmat average_si_suppression(const si::SiChannelSet& si_true,
                            const cmat& w_rf_tx, const cmat& w_bb_tx,
                            const std::vector<cvec>& w_rf_rx,
                            const ArrayConfig& cfg) {
  const int n_users = static_cast<int>(w_bb_tx.cols());
  const int n_sub = static_cast<int>(w_rf_rx.size());
  const int m = cfg.rx_subarray_size();
  const int N = si_true.n_subcarriers();
  rmat acc = rmat::Zero(n_sub, n_users);
  const cmat tx_eff = w_rf_tx * w_bb_tx;  // l_tx x U, frequency-flat
  for (int n = 0; n < N; ++n) {
    const cmat& h = si_true.at(n);
    for (int l = 0; l < n_sub; ++l) {
      const Eigen::RowVectorXcd c =
          w_rf_rx[l].adjoint() * h.middleRows(l * m, m) * tx_eff;
      for (int u = 0; u < n_users; ++u) acc(l, u) += std::norm(c(u));
    }
  }
  acc /= static_cast<double>(N);
  rmat out(n_sub, n_users);
  for (int l = 0; l < n_sub; ++l)
    for (int u = 0; u < n_users; ++u)
      out(l, u) = to_db_floor(acc(l, u), kSuppressionFloorDb);
  return out;
}

double average_si_suppression_abf(const si::SiChannelSet& si_true,
                                  const cvec& w_tx, const cvec& w_rx) {
  const int N = si_true.n_subcarriers();
  double acc = 0.0;
  for (int n = 0; n < N; ++n)
    acc += std::norm(w_rx.dot(si_true.at(n) * w_tx));
  return to_db_floor(acc / N, kSuppressionFloorDb);
}

std::vector<double> beamformed_si_profile_abf(const si::SiChannelSet& si,
                                              const cvec& w_tx,
                                              const cvec& w_rx) {
  std::vector<double> out(si.n_subcarriers());
  for (int n = 0; n < si.n_subcarriers(); ++n)
    out[n] = std::norm(w_rx.dot(si.at(n) * w_tx));
  return out;
}

void save_matrix_csv(const cmat& m, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  char buf[64];
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%s%.17g,%.17g", c ? "," : "",
                    m(r, c).real(), m(r, c).imag());
      f << buf;
    }
    f << "\n";
  }
}

}  // namespace jcas::nsp
