#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssread/folds.hpp"
#include "ssread/model.hpp"
#include "ssread/tu.hpp"

namespace ssread {

// Raised when a fold's loss goes non-finite.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EpochStats {
  double l_class = 0.0;  // mean per graph over the epoch
  double l_align = 0.0;
  double val_metric = 0.0;
};

struct FoldResult {
  int fold = 0;
  std::uint64_t seed = 0;
  double test_accuracy = 0.0;
  double best_val_metric = 0.0;
  int best_epoch = 0;
  int epochs_run = 0;
  std::vector<EpochStats> curve;
  ModelState model;
};

struct RunReport {
  ModelConfig config;
  std::string dataset;
  std::vector<FoldResult> folds;  // one entry per (seed, fold)
  std::vector<double> seed_means;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // over seed means when repeats > 1, else over folds
  double wall_seconds = 0.0;
};

struct EvalResult {
  double accuracy = 0.0;
  std::vector<int> predictions;
};

EvalResult evaluate(const ModelState& state, const Dataset& ds, const std::vector<int>& indices);

// One fold of the joint optimization: cross-entropy drives the encoder,
// classifier and attention gate; the alignment loss drives the prototypes.
FoldResult train_supervised_fold(const Dataset& ds, const FoldPlan& plan, const ModelConfig& cfg,
                                 int fold, std::uint64_t seed);

// Full cross-validation run (cfg.repeats seeds, cfg.jobs parallel folds).
RunReport train_supervised(const Dataset& ds, const FoldPlan& plan, const ModelConfig& cfg);

// Contrastive pretraining of the encoder followed by a per-fold linear probe
// on the frozen representations.
FoldResult train_contrastive_fold(const Dataset& ds, const FoldPlan& plan, const ModelConfig& cfg,
                                  int fold, std::uint64_t seed);
RunReport train_contrastive(const Dataset& ds, const FoldPlan& plan, const ModelConfig& cfg);

// Trains only a linear classifier on the frozen model's flattened summaries,
// for every fold of the plan. The encoder is never touched.
RunReport linear_probe(const ModelState& frozen, const Dataset& ds, const FoldPlan& plan,
                       const ModelConfig& cfg);

// Runs exactly `steps` optimizer updates on the given training indices.
// Diagnostic hook for observing update boundaries.
ModelState train_steps(const Dataset& ds, const std::vector<int>& train_idx,
                       const ModelConfig& cfg, int steps, std::uint64_t seed);

}  // namespace ssread
