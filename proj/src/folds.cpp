#include "ssread/folds.hpp"

#include <algorithm>
#include <stdexcept>

#include "ssread/rng.hpp"

namespace ssread {

namespace {

std::vector<std::vector<int>> by_class(const Dataset& ds) {
  std::vector<std::vector<int>> groups(ds.num_classes);
  for (std::size_t i = 0; i < ds.graphs.size(); ++i)
    groups[ds.graphs[i].label].push_back(static_cast<int>(i));
  return groups;
}

}  // namespace

FoldPlan make_folds(const Dataset& ds, int num_folds, std::uint64_t seed, bool stratify) {
  const int n = static_cast<int>(ds.graphs.size());
  if (num_folds < 2) throw std::invalid_argument("make_folds: need at least 2 folds");
  if (n < std::max(10, num_folds))
    throw std::invalid_argument("make_folds: dataset too small for cross validation");

  FoldPlan plan;
  plan.num_folds = num_folds;
  plan.seed = seed;
  plan.stratified = stratify;
  plan.test.resize(num_folds);
  plan.train.resize(num_folds);
  plan.val.resize(num_folds);

  Rng rng(mix_seed(seed, 0));
  if (stratify) {
    // Deal each class round-robin; the start fold rotates by each class's
    // remainder so the oversized folds spread out instead of piling up.
    int start = 0;
    for (auto& group : by_class(ds)) {
      rng.shuffle(group);
      for (std::size_t j = 0; j < group.size(); ++j)
        plan.test[(start + j) % num_folds].push_back(group[j]);
      start = static_cast<int>((start + group.size()) % num_folds);
    }
  } else {
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    rng.shuffle(all);
    for (int j = 0; j < n; ++j) plan.test[j % num_folds].push_back(all[j]);
  }
  for (auto& fold : plan.test) std::sort(fold.begin(), fold.end());

  // 9:1 train/validation split of each fold's remaining graphs.
  for (int f = 0; f < num_folds; ++f) {
    std::vector<char> in_test(n, 0);
    for (int i : plan.test[f]) in_test[i] = 1;
    std::vector<int> pool;
    for (int i = 0; i < n; ++i)
      if (!in_test[i]) pool.push_back(i);

    Rng inner(mix_seed(seed, 1000 + static_cast<std::uint64_t>(f)));
    std::vector<std::vector<int>> groups;
    if (stratify) {
      groups.assign(ds.num_classes, {});
      for (int i : pool) groups[ds.graphs[i].label].push_back(i);
    } else {
      groups.push_back(pool);
    }
    for (auto& group : groups) {
      inner.shuffle(group);
      const int count = static_cast<int>(group.size());
      const int n_val = count >= 2 ? std::max(1, count / 10) : 0;
      for (int j = 0; j < count; ++j)
        (j < n_val ? plan.val[f] : plan.train[f]).push_back(group[j]);
    }
    std::sort(plan.train[f].begin(), plan.train[f].end());
    std::sort(plan.val[f].begin(), plan.val[f].end());
  }
  return plan;
}

}  // namespace ssread
