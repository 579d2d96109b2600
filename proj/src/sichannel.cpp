#include "jcas/sichannel.hpp"

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace jcas::si {

void SiChannelSet::validate() const {
  if (subcarrier_indices.size() != matrices.size())
    throw ConfigError("si channel: index/matrix count mismatch");
  for (std::size_t i = 1; i < subcarrier_indices.size(); ++i)
    if (subcarrier_indices[i] <= subcarrier_indices[i - 1])
      throw ConfigError("si channel: subcarrier indices must be strictly increasing");
  for (const cmat& m : matrices) {
    if (m.rows() != matrices.front().rows() || m.cols() != matrices.front().cols())
      throw ConfigError("si channel: matrices must share one shape");
    if (!m.allFinite())
      throw ConfigError("si channel: non-finite entry");
  }
}

SiChannelSet synth_si_channel(const ArrayConfig& cfg, const WaveformConfig& wf,
                              double isolation_db) {
  cfg.validate();
  wf.validate();
  if (!(isolation_db > 0.0))
    throw ConfigError("si channel: isolation_db must be > 0");

  // TX element t at t*d_ant; RX element r at (l_tx-1)*d_ant + gap + r*d_ant.
  const int n_rx = cfg.l_rx, n_tx = cfg.l_tx;
  rmat dist(n_rx, n_tx);
  double d_min = std::numeric_limits<double>::max();
  for (int r = 0; r < n_rx; ++r)
    for (int t = 0; t < n_tx; ++t) {
      const double d = (n_tx - 1 - t) * cfg.d_ant + cfg.tx_rx_gap + r * cfg.d_ant;
      dist(r, t) = d;
      d_min = std::min(d_min, d);
    }

  // alpha such that the Frobenius-mean power of any matrix is -isolation_db
  // (magnitudes are frequency-flat; only phases vary across the band).
  double mean_inv2 = 0.0;
  for (int r = 0; r < n_rx; ++r)
    for (int t = 0; t < n_tx; ++t) {
      const double q = d_min / dist(r, t);
      mean_inv2 += q * q;
    }
  mean_inv2 /= static_cast<double>(n_rx) * n_tx;
  const double alpha = std::sqrt(db_to_lin(-isolation_db) / mean_inv2);

  SiChannelSet set;
  set.source = SiChannelSet::Source::synthetic;
  const int N = wf.n_subcarriers;
  set.subcarrier_indices.resize(N);
  set.matrices.resize(N);
  for (int n = 0; n < N; ++n) {
    set.subcarrier_indices[n] = n;
    const double f_n = wf.subcarrier_freq(n);
    cmat h(n_rx, n_tx);
    for (int r = 0; r < n_rx; ++r)
      for (int t = 0; t < n_tx; ++t) {
        const double d = dist(r, t);
        h(r, t) = std::polar(alpha * d_min / d, -2.0 * kPi * d * f_n / kC0);
      }
    set.matrices[n] = std::move(h);
  }
  return set;
}

namespace {

struct SiRow {
  int sc, rx, tx;
  cplx value;
  long row;
};

}  // namespace

SiChannelSet load_si_channel(const std::string& path, int n_subcarriers) {
  std::ifstream f(path);
  if (!f) throw LoadError("cannot open SI channel file " + path, 0);

  std::string line;
  long row = 0;
  if (!std::getline(f, line)) throw LoadError("empty SI channel file", 0);
  ++row;
  if (line != "subcarrier,rx,tx,re,im")
    throw LoadError("expected header 'subcarrier,rx,tx,re,im'", row);

  std::vector<SiRow> rows;
  while (std::getline(f, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 5) throw LoadError("expected 5 fields", row);
    SiRow r;
    try {
      r.sc = std::stoi(fields[0]);
      r.rx = std::stoi(fields[1]);
      r.tx = std::stoi(fields[2]);
      r.value = cplx(std::stod(fields[3]), std::stod(fields[4]));
      r.row = row;
    } catch (const std::exception&) {
      throw LoadError("malformed numeric field", row);
    }
    if (r.sc < 0 || r.sc >= n_subcarriers)
      throw LoadError("subcarrier index out of range", row);
    if (r.rx < 0 || r.tx < 0) throw LoadError("negative element index", row);
    if (!rows.empty() && r.sc < rows.back().sc)
      throw LoadError("subcarrier indices must be ascending", row);
    rows.push_back(r);
  }
  if (rows.empty()) throw LoadError("no data rows", row);

  // Dimensions come from the first subcarrier block.
  int n_rx = 0, n_tx = 0;
  for (const SiRow& r : rows) {
    if (r.sc != rows.front().sc) break;
    n_rx = std::max(n_rx, r.rx + 1);
    n_tx = std::max(n_tx, r.tx + 1);
  }

  std::vector<int> listed_idx;
  std::vector<cmat> listed;
  Eigen::MatrixXi seen;
  for (const SiRow& r : rows) {
    if (listed_idx.empty() || r.sc != listed_idx.back()) {
      if (!listed_idx.empty() && seen.sum() != n_rx * n_tx)
        throw LoadError("subcarrier block " + std::to_string(listed_idx.back()) +
                        " is missing entries", r.row);
      listed_idx.push_back(r.sc);
      listed.emplace_back(cmat::Zero(n_rx, n_tx));
      seen = Eigen::MatrixXi::Zero(n_rx, n_tx);
    }
    if (r.rx >= n_rx || r.tx >= n_tx)
      throw LoadError("element index inconsistent with first block dimensions", r.row);
    if (seen(r.rx, r.tx))
      throw LoadError("duplicate entry", r.row);
    listed.back()(r.rx, r.tx) = r.value;
    seen(r.rx, r.tx) = 1;
  }
  if (seen.sum() != n_rx * n_tx)
    throw LoadError("subcarrier block " + std::to_string(listed_idx.back()) +
                    " is missing entries", rows.back().row);

  // Expand to the full grid; linear interpolation between listed subcarriers,
  // constant beyond the ends.
  SiChannelSet set;
  set.source = SiChannelSet::Source::file;
  set.subcarrier_indices.resize(n_subcarriers);
  set.matrices.resize(n_subcarriers);
  std::size_t k = 0;
  for (int n = 0; n < n_subcarriers; ++n) {
    set.subcarrier_indices[n] = n;
    while (k + 1 < listed_idx.size() && listed_idx[k + 1] <= n) ++k;
    if (n <= listed_idx.front() || listed_idx[k] == n ||
        k + 1 >= listed_idx.size()) {
      set.matrices[n] = listed[std::min(k, listed.size() - 1)];
      if (n < listed_idx.front()) set.matrices[n] = listed.front();
    } else {
      const double w = static_cast<double>(n - listed_idx[k]) /
                       (listed_idx[k + 1] - listed_idx[k]);
      set.matrices[n] = (1.0 - w) * listed[k] + w * listed[k + 1];
    }
  }
  set.validate();
  return set;
}

void save_si_channel(const SiChannelSet& set, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << "subcarrier,rx,tx,re,im\n";
  char buf[96];
  for (std::size_t i = 0; i < set.matrices.size(); ++i) {
    const cmat& m = set.matrices[i];
    for (int r = 0; r < m.rows(); ++r)
      for (int t = 0; t < m.cols(); ++t) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.17g,%.17g\n",
                      set.subcarrier_indices[i], r, t, m(r, t).real(),
                      m(r, t).imag());
        f << buf;
      }
  }
}

SiChannelSet perturb_estimate(const SiChannelSet& truth,
                              const SiErrorConfig& err) {
  if (err.epsilon < 0.0)
    throw ConfigError("si error: epsilon must be >= 0");
  if (err.epsilon == 0.0) return truth;

  SiChannelSet est = truth;
  std::mt19937_64 rng(err.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (cmat& m : est.matrices) {
    const double mean_pow = m.squaredNorm() / static_cast<double>(m.size());
    // Circular complex Gaussian, total variance eps^2 * mean entry power.
    const double s = err.epsilon * std::sqrt(mean_pow / 2.0);
    for (int t = 0; t < m.cols(); ++t)
      for (int r = 0; r < m.rows(); ++r)
        m(r, t) += cplx(s * gauss(rng), s * gauss(rng));
  }
  return est;
}

}  // namespace jcas::si
