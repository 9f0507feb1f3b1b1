#include <algorithm>
#include <cmath>

#include "dtc/data.hpp"
#include "dtc/error.hpp"
#include "dtc/random.hpp"

namespace dtc {

namespace {

std::vector<IndexList> group_by_class(const LabelVector& labels, int n_classes) {
  std::vector<IndexList> groups(static_cast<std::size_t>(n_classes));
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const int c = labels(i);
    if (c < 0 || c >= n_classes) {
      throw Error(Errc::IndexOutOfRange, "label " + std::to_string(c) + " at row " + std::to_string(i));
    }
    groups[static_cast<std::size_t>(c)].push_back(static_cast<int>(i));
  }
  return groups;
}

}  // namespace

SplitPlan stratified_split(const LabelVector& labels, int n_classes, double test_fraction,
                           std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(Errc::OutOfRange, "test fraction must lie in (0, 1)");
  }
  auto groups = group_by_class(labels, n_classes);
  for (std::size_t c = 0; c < groups.size(); ++c) {
    if (groups[c].size() == 1) {
      throw Error(Errc::TooFewSamples, "class " + std::to_string(c) + " has a single sample");
    }
  }

  SplitPlan plan;
  plan.seed = seed;
  Rng rng(seed);
  for (auto& members : groups) {
    if (members.empty()) continue;
    rng.shuffle(members.begin(), members.end());
    const auto count = static_cast<long long>(members.size());
    const auto wanted = std::llround(static_cast<double>(count) * test_fraction);
    const auto n_test = static_cast<std::size_t>(std::clamp<long long>(wanted, 1, count - 1));
    plan.test_indices.insert(plan.test_indices.end(), members.begin(),
                             members.begin() + static_cast<std::ptrdiff_t>(n_test));
    plan.train_indices.insert(plan.train_indices.end(),
                              members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
  }
  std::sort(plan.train_indices.begin(), plan.train_indices.end());
  std::sort(plan.test_indices.begin(), plan.test_indices.end());
  return plan;
}

SplitPlan stratified_split(const Dataset& d, double test_fraction, std::uint64_t seed) {
  return stratified_split(d.labels, d.taxonomy.size(), test_fraction, seed);
}

std::vector<SplitPlan> kfold(const LabelVector& labels, int n_classes, int k, std::uint64_t seed) {
  if (k < 2) throw Error(Errc::OutOfRange, "k-fold needs k >= 2");
  auto groups = group_by_class(labels, n_classes);
  for (std::size_t c = 0; c < groups.size(); ++c) {
    const auto size = groups[c].size();
    if (size > 0 && size < static_cast<std::size_t>(k)) {
      throw Error(Errc::TooFewSamples, "class " + std::to_string(c) + " has " + std::to_string(size) +
                                           " samples, fewer than k=" + std::to_string(k));
    }
  }

  // Dealing each shuffled class round-robin from a running offset keeps both
  // the per-class and the total fold sizes within one of each other.
  std::vector<int> fold_of(static_cast<std::size_t>(labels.size()), 0);
  Rng rng(seed);
  std::size_t dealt = 0;
  for (auto& members : groups) {
    rng.shuffle(members.begin(), members.end());
    for (const int idx : members) fold_of[static_cast<std::size_t>(idx)] = static_cast<int>(dealt++ % static_cast<std::size_t>(k));
  }

  std::vector<SplitPlan> plans(static_cast<std::size_t>(k));
  for (std::size_t f = 0; f < plans.size(); ++f) plans[f].seed = seed;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    for (std::size_t f = 0; f < plans.size(); ++f) {
      auto& list = static_cast<int>(f) == fold_of[i] ? plans[f].test_indices : plans[f].train_indices;
      list.push_back(static_cast<int>(i));
    }
  }
  return plans;
}

std::vector<SplitPlan> kfold(const Dataset& d, int k, std::uint64_t seed) {
  return kfold(d.labels, d.taxonomy.size(), k, seed);
}

}  // namespace dtc
