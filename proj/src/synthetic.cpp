#include "dtc/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "dtc/error.hpp"
#include "dtc/random.hpp"

namespace dtc {

namespace {

// Informative column j encodes one view of the stage III class.
double informative_mean(int j, int c3, double sep) {
  const int bit = j % 4;
  if (bit < 3) return sep * ((c3 >> bit) & 1);
  return sep * 0.5 * (c3 >> 1);  // coarse stage II level
}

}  // namespace

PreparedData make_synthetic(const SyntheticParams& params, std::uint64_t seed) {
  if (params.n_rows < 16) throw Error(Errc::Config, "synthetic data needs at least 16 rows");
  if (params.n_informative < 3) throw Error(Errc::Config, "synthetic data needs at least 3 informative features");
  if (params.n_noise < 0) throw Error(Errc::Config, "noise feature count must be >= 0");
  if (params.missing_fraction < 0.0 || params.missing_fraction >= 1.0) {
    throw Error(Errc::Config, "missing fraction must lie in [0, 1)");
  }
  const double share_sum =
      std::accumulate(params.stage_two_shares.begin(), params.stage_two_shares.end(), 0.0);
  if (!(share_sum > 0.0)) throw Error(Errc::Config, "stage II shares must sum to a positive value");

  Rng rng(derive_seed(seed, 0));
  const int n = params.n_rows;
  const int f_total = params.n_informative + params.n_noise;

  // Exact quotas per stage II class, split evenly over its two stage III children.
  std::vector<int> c3(static_cast<std::size_t>(n));
  int filled = 0;
  for (int s2 = 0; s2 < 4; ++s2) {
    const int quota = s2 == 3 ? n - filled
                              : static_cast<int>(std::lround(n * params.stage_two_shares[static_cast<std::size_t>(s2)] / share_sum));
    for (int i = 0; i < quota; ++i) c3[static_cast<std::size_t>(filled + i)] = 2 * s2 + (i % 2);
    filled += quota;
  }
  rng.shuffle(c3.begin(), c3.end());

  PreparedData p;
  p.rows_in = static_cast<std::size_t>(n);
  p.features.resize(n, f_total);
  p.missing_mask = MissingMask::Constant(n, f_total, false);
  p.imputed_counts = Eigen::VectorXi::Zero(f_total);
  for (int j = 0; j < f_total; ++j) {
    char name[32];
    if (j < params.n_informative) {
      std::snprintf(name, sizeof name, "info_%02d", j);
    } else {
      std::snprintf(name, sizeof name, "noise_%02d", j - params.n_informative);
    }
    p.feature_names.emplace_back(name);
  }

  Rng feat(derive_seed(seed, 1));
  for (int i = 0; i < n; ++i) {
    const int c = c3[static_cast<std::size_t>(i)];
    for (int j = 0; j < params.n_informative; ++j) {
      double v = informative_mean(j, c, params.separation) + feat.normal();
      // Second copies of each view get a heavy right tail, like byte and duration counters.
      if (j >= 4) v = std::exp(0.5 * v);
      p.features(i, j) = v;
    }
    for (int j = 0; j < params.n_noise; ++j) {
      double v = 0.0;
      switch (j % 3) {
        case 0: v = feat.normal(); break;
        case 1: v = feat.uniform(0.0, 100.0); break;
        default: v = -std::log1p(-feat.uniform()) * 10.0; break;
      }
      p.features(i, params.n_informative + j) = v;
    }
  }

  if (params.missing_fraction > 0.0) {
    Rng hole(derive_seed(seed, 2));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < f_total; ++j) {
        if (hole.uniform() < params.missing_fraction) {
          p.missing_mask(i, j) = true;
          p.features(i, j) = 0.0;
        }
      }
    }
  }

  LabelVector y1(n), y2(n), y3(n);
  for (int i = 0; i < n; ++i) {
    const int c = c3[static_cast<std::size_t>(i)];
    y3(i) = c;
    y2(i) = c >> 1;
    y1(i) = (y2(i) == 0 || y2(i) == 2) ? 1 : 0;  // Tor and VPN are Malicious
  }
  p.labels = {y1, y2, y3};
  return p;
}

}  // namespace dtc
