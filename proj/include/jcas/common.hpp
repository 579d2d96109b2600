#pragma once

#include <complex>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace jcas {

using cplx = std::complex<double>;
using cvec = Eigen::VectorXcd;
using cmat = Eigen::MatrixXcd;
using rvec = Eigen::VectorXd;
using rmat = Eigen::MatrixXd;

inline constexpr double kC0 = 299792458.0;  // speed of light, m/s
inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Linear gains below this are clamped before dB conversion so patterns with
// exact nulls stay finite in file output.
inline constexpr double kGainFloorLin = 1e-20;
inline constexpr double kGainFloorDb = -200.0;

// Floor for SI suppression metrics (deeper than pattern floor; exact nulls
// land around -300 dB in double precision).
inline constexpr double kSuppressionFloorDb = -300.0;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

inline double to_db(double lin) {
  return 10.0 * std::log10(std::max(lin, kGainFloorLin));
}

inline double to_db_floor(double lin, double floor_db) {
  const double f = std::pow(10.0, floor_db / 10.0);
  return 10.0 * std::log10(std::max(lin, f));
}

inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }

// Execution policy for the data-parallel kernels. Every parallel path has a
// serial twin that produces bit-identical results; tests compare the two.
enum class Exec { serial, parallel };

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct LoadError : std::runtime_error {
  LoadError(const std::string& what, long row)
      : std::runtime_error(what + " (row " + std::to_string(row) + ")"),
        row(row) {}
  long row;
};

struct InfeasibleError : std::runtime_error {
  InfeasibleError(int user, double requested_db, double achievable_db)
      : std::runtime_error("minimum gain of " + std::to_string(requested_db) +
                           " dBi for user " + std::to_string(user) +
                           " is infeasible; achievable maximum is " +
                           std::to_string(achievable_db) + " dBi"),
        user(user),
        requested_db(requested_db),
        achievable_db(achievable_db) {}
  int user;
  double requested_db;
  double achievable_db;
};

struct FullRankNullspaceError : std::runtime_error {
  explicit FullRankNullspaceError(const std::string& what)
      : std::runtime_error(what) {}
};

// splitmix64; used to derive independent per-unit RNG streams (per scan
// angle, per trial, per restart) so parallel runs stay deterministic.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(base ^ splitmix64(index + 1));
}

}  // namespace jcas
