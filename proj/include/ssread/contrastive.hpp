#pragma once

#include <vector>

#include "ssread/model.hpp"
#include "ssread/rng.hpp"
#include "ssread/tu.hpp"

namespace ssread {

// Node-drop augmentation: each node is kept independently with probability
// 1 - ratio; draws leaving fewer than two nodes are re-drawn. Graphs with
// at most two nodes are returned unchanged.
Graph node_drop(const Graph& g, double ratio, Rng& rng);

// In-batch contrastive loss over (original, augmented) pairs: each original
// attracts its own augmentation and repels the other originals in the batch,
// with cosine similarity on the projected representations. Returns the mean
// per-anchor loss and its gradients for everything the loss reaches.
struct ContrastiveResult {
  double loss = 0.0;
  std::vector<Matrix> d_theta;
  Matrix d_gate;  // zero-size unless attention
  ProjectionHead d_projection;
};

ContrastiveResult contrastive_loss_and_grads(const std::vector<const Graph*>& originals,
                                             const std::vector<Graph>& augmented,
                                             const ModelState& state, double temperature);

}  // namespace ssread
