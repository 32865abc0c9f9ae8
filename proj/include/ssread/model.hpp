#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssread/classifier.hpp"
#include "ssread/gcn.hpp"
#include "ssread/optimizer.hpp"
#include "ssread/readout.hpp"
#include "ssread/tu.hpp"

namespace ssread {

enum class ReadoutKind { GRead, SSRead };
enum class TrainMode { Supervised, Contrastive };

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelConfig {
  ReadoutKind readout = ReadoutKind::SSRead;
  AggregatorKind agg = AggregatorKind::Sum;
  int k = 0;  // structural positions; required for ssread, forced to 1 for gread
  double gamma = 0.01;
  double lr = 1e-3;
  int epochs_max = 500;
  int patience = 50;
  int batch_size = 32;
  std::uint64_t seed = 1;
  int folds = 10;
  TrainMode mode = TrainMode::Supervised;

  int hidden_dim = 64;
  int num_layers = 3;
  OptimizerKind optimizer = OptimizerKind::Adam;
  ClassifierKind classifier = ClassifierKind::Linear;
  int mlp_hidden = 0;
  bool stratify = true;
  FeaturePolicy feature_policy = FeaturePolicy::Auto;
  int degree_cap = 10;
  double temperature = 1.0;  // contrastive similarity scale; 1.0 = none
  double drop_ratio = 0.2;   // contrastive node-drop augmentation
  bool select_by_loss = false;  // early-stop metric: val loss instead of val accuracy

  // Lets the alignment loss also update the encoder (off: the alignment
  // gradient stops at the prototypes, matching the joint-update rule).
  bool align_into_encoder = false;

  // Diagnostics: zero out one loss to observe the other's update boundary.
  bool disable_align_loss = false;
  bool disable_class_loss = false;

  int jobs = 1;
  int repeats = 1;

  int positions() const { return readout == ReadoutKind::SSRead ? k : 1; }
};

void validate_config(const ModelConfig& cfg);

// Two-layer projection head g() for contrastive training: flatten(K*d) -> d.
struct ProjectionHead {
  Matrix w1, b1;  // (K*d) x d, 1 x d
  Matrix w2, b2;  // d x d, 1 x d
};

struct ModelState {
  GcnParams theta;
  std::optional<Prototypes> prototypes;  // absent for gread
  ClassifierParams clf;
  Aggregator agg;
  std::optional<ProjectionHead> projection;
};

ModelState init_model(const ModelConfig& cfg, int feature_dim, int num_classes,
                      std::uint64_t seed);

// Position-level (or global) summary of one graph under the model's readout.
Matrix model_summary(const ModelState& state, const Matrix& h, ReadoutCache* cache = nullptr,
                     Alignment* alignment_out = nullptr);

// Class activation map: per-node (d s_c / d h_n) . h_n.
struct CamReport {
  int target_class = 0;
  std::vector<double> cam;
};

CamReport cam(const Graph& g, const ModelState& state, int target_class);

}  // namespace ssread
