#pragma once

#include <cstdint>
#include <vector>

#include "ssread/tu.hpp"

namespace ssread {

// Cross-validation plan: disjoint test folds covering the dataset, plus a
// 9:1 train/validation split of the remaining graphs for every fold.
struct FoldPlan {
  int num_folds = 0;
  std::uint64_t seed = 0;
  bool stratified = true;
  std::vector<std::vector<int>> test;
  std::vector<std::vector<int>> train;
  std::vector<std::vector<int>> val;
};

FoldPlan make_folds(const Dataset& ds, int num_folds, std::uint64_t seed, bool stratify = true);

}  // namespace ssread
