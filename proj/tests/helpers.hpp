#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "dtc/data.hpp"
#include "dtc/random.hpp"

namespace testing {

// Gaussian blobs: class c is centred at `sep * c` on the first `informative`
// columns; the rest is unit noise.
inline dtc::Dataset blobs(int n, int n_features, int n_classes, std::uint64_t seed, double sep = 3.0,
                          int informative = 2) {
  dtc::Rng rng(seed);
  dtc::Matrix x(n, n_features);
  dtc::LabelVector y(n);
  for (int i = 0; i < n; ++i) {
    const int c = i % n_classes;
    y(i) = c;
    for (int j = 0; j < n_features; ++j) x(i, j) = rng.normal() + (j < informative ? sep * c : 0.0);
  }
  std::vector<std::string> names;
  for (int j = 0; j < n_features; ++j) names.push_back("f" + std::to_string(j));
  const auto tax = n_classes == 2   ? dtc::ClassTaxonomy::stage_one()
                   : n_classes == 4 ? dtc::ClassTaxonomy::stage_two()
                   : n_classes == 8 ? dtc::ClassTaxonomy::stage_three()
                                    : [&] {
                                        std::vector<std::string> cls;
                                        for (int c = 0; c < n_classes; ++c) cls.push_back("c" + std::to_string(c));
                                        return dtc::ClassTaxonomy::custom(cls);
                                      }();
  return dtc::make_dataset(std::move(x), std::move(y), tax, names);
}

// Per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("dtc_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing
