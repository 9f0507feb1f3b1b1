#pragma once

#include <cstdint>

#include "dtc/schema.hpp"

namespace dtc {

/// Hierarchical flow-like data. The stage III class c fixes the rest:
/// stage II = c / 2 and stage I is Malicious for Tor and VPN.
struct SyntheticParams {
  int n_rows = 5000;
  int n_informative = 8;
  int n_noise = 12;
  double separation = 6.0;  // class-mean gap in noise standard deviations
  double missing_fraction = 0.0;
  /// Stage II shares of Tor, Non-Tor, VPN, Non-VPN.
  std::array<double, 4> stage_two_shares{0.05, 0.45, 0.05, 0.45};
};

PreparedData make_synthetic(const SyntheticParams& params, std::uint64_t seed);

}  // namespace dtc
