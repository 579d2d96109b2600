#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jcas/array.hpp"
#include "jcas/common.hpp"

namespace jcas::si {

/// Per-subcarrier TX->RX coupling matrices (l_rx x l_tx). Immutable after
/// construction; safe to share across threads.
struct SiChannelSet {
  enum class Source { synthetic, file };

  std::vector<int> subcarrier_indices;  // strictly increasing, 0-based
  std::vector<cmat> matrices;           // one per subcarrier index
  Source source = Source::synthetic;

  int n_subcarriers() const { return static_cast<int>(matrices.size()); }
  int rx_count() const { return matrices.empty() ? 0 : static_cast<int>(matrices.front().rows()); }
  int tx_count() const { return matrices.empty() ? 0 : static_cast<int>(matrices.front().cols()); }
  const cmat& at(int n) const { return matrices.at(static_cast<std::size_t>(n)); }

  void validate() const;
};

struct SiErrorConfig {
  double epsilon = 0.0;  // relative error level, linear
  std::uint64_t seed = 0;
};

/// Parametric coupling model: colinear TX and RX ULAs, inverse-distance
/// magnitude with free-space phase per element pair. The overall level is
/// scaled so the Frobenius-mean power of the center-subcarrier matrix equals
/// -isolation_db. Deterministic (no RNG).
SiChannelSet synth_si_channel(const ArrayConfig& cfg, const WaveformConfig& wf,
                              double isolation_db);

/// Loads a channel from CSV (`subcarrier,rx,tx,re,im`). Subcarriers absent
/// from the file are filled by linear interpolation of real and imaginary
/// parts between the listed ones (constant beyond the ends).
SiChannelSet load_si_channel(const std::string& path, int n_subcarriers);

void save_si_channel(const SiChannelSet& set, const std::string& path);

/// Adds independent circular complex Gaussian noise per entry with variance
/// epsilon^2 times the mean entry power of the true matrix at that
/// subcarrier. epsilon = 0 returns the input unchanged.
SiChannelSet perturb_estimate(const SiChannelSet& truth,
                              const SiErrorConfig& err);

}  // namespace jcas::si
