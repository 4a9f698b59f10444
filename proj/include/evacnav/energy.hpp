#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "errors.hpp"
#include "random.hpp"

namespace evacnav {

enum class Radio { threeg, bluetooth };
enum class Direction { upload, download };

// Per-byte transfer energy (joules) and signalling rate for each radio of a handset.
struct EnergyModel {
  double threeg_download_j_per_byte = 0.001224;
  double threeg_upload_j_per_byte = 0.0003375;
  double bluetooth_download_j_per_byte = 0.0001377;
  double bluetooth_upload_j_per_byte = 0.00012012;
  double threeg_rate_bps = 2e6;
  double bluetooth_rate_bps = 1e6;

  double coefficient(Radio r, Direction d) const {
    if (r == Radio::threeg)
      return d == Direction::upload ? threeg_upload_j_per_byte : threeg_download_j_per_byte;
    return d == Direction::upload ? bluetooth_upload_j_per_byte : bluetooth_download_j_per_byte;
  }

  double rate_bps(Radio r) const { return r == Radio::threeg ? threeg_rate_bps : bluetooth_rate_bps; }

  void validate() const {
    for (double c : {threeg_download_j_per_byte, threeg_upload_j_per_byte, bluetooth_download_j_per_byte,
                     bluetooth_upload_j_per_byte, threeg_rate_bps, bluetooth_rate_bps})
      if (!(c > 0.0)) throw ConfigError("energy coefficients and rates must be positive");
  }
};

inline double tx_energy(const EnergyModel& m, Radio r, Direction d, std::uint64_t bytes) {
  return m.coefficient(r, d) * static_cast<double>(bytes);
}

inline double tx_time(const EnergyModel& m, Radio r, std::uint64_t bytes) {
  return static_cast<double>(bytes) * 8.0 / m.rate_bps(r);
}

// Battery charge is held in integer nanojoules so that a run's debits and the drop in stored
// charge agree to the last unit.
using Nanojoules = std::int64_t;

inline Nanojoules to_nanojoules(double joules) { return std::llround(joules * 1e9); }
inline double to_joules(Nanojoules nj) { return static_cast<double>(nj) * 1e-9; }

struct DebitResult {
  Nanojoules debited = 0;  // what actually left the battery (clamped at the remaining charge)
  bool drained = false;
};

class Battery {
 public:
  Battery() = default;
  Battery(double remaining_j, double capacity_j)
      : remaining_(to_nanojoules(remaining_j)), capacity_(to_nanojoules(capacity_j)) {
    if (remaining_ < 0 || remaining_ > capacity_)
      throw PreconditionError("battery charge must lie in [0, capacity]");
  }

  double remaining_j() const { return to_joules(remaining_); }
  double capacity_j() const { return to_joules(capacity_); }
  Nanojoules remaining_nj() const { return remaining_; }
  bool empty() const { return remaining_ == 0; }

  // Removes `joules`. Asking for the whole remaining charge or more empties the battery and
  // reports Drained; the transmission that asked for it counts as failed.
  DebitResult debit(double joules) {
    if (!(joules >= 0.0)) throw PreconditionError("debit must be non-negative");
    const Nanojoules want = to_nanojoules(joules);
    if (want >= remaining_ && want > 0) {
      DebitResult r{remaining_, true};
      remaining_ = 0;
      return r;
    }
    remaining_ -= want;
    return {want, false};
  }

  friend bool operator==(const Battery&, const Battery&) = default;

 private:
  Nanojoules remaining_ = 0;
  Nanojoules capacity_ = 0;
};

inline DebitResult debit(Battery& b, double joules) { return b.debit(joules); }

struct BatteryParams {
  double mean_j = 1500.0;
  double sd_j = 500.0;
  double min_j = 100.0;
  double max_j = 3000.0;

  void validate() const {
    if (!(min_j > 0.0 && min_j <= mean_j && mean_j <= max_j && sd_j >= 0.0))
      throw ConfigError("battery parameters need 0 < min <= mean <= max and sd >= 0");
  }
};

// Truncated normal by rejection; capacity is the upper bound.
inline Battery sample_initial_battery(Rng& rng, const BatteryParams& p) {
  p.validate();
  if (p.sd_j == 0.0) return Battery(p.mean_j, p.max_j);
  while (true) {
    const double x = rng.normal(p.mean_j, p.sd_j);
    if (x >= p.min_j && x <= p.max_j) return Battery(x, p.max_j);
  }
}

}  // namespace evacnav
