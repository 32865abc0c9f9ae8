#pragma once

#include <vector>

#include "ssread/matrix.hpp"
#include "ssread/rng.hpp"
#include "ssread/tu.hpp"

namespace ssread {

// Weights of the graph-convolution stack. Layer 1 maps feature_dim -> hidden,
// the rest hidden -> hidden; no bias terms.
struct GcnParams {
  std::vector<Matrix> weights;
  int layers() const { return static_cast<int>(weights.size()); }
};

GcnParams init_gcn(int in_dim, int hidden_dim, int num_layers, Rng& rng);

// Symmetrically normalized adjacency with self-loops, kept as a coefficient
// edge list: out[dst] += coeff * in[src] applies one propagation.
struct NormAdj {
  int num_nodes = 0;
  struct Entry {
    int dst, src;
    double coeff;
  };
  std::vector<Entry> entries;
};

NormAdj normalize_adjacency(const Graph& g);

// out = normalized-adjacency * in
Matrix propagate(const NormAdj& adj, const Matrix& in);

// Per-layer activations kept for the backward pass. Owns a copy of the
// adjacency so the cache stays valid independently of the caller's storage.
struct GcnCache {
  NormAdj adj;
  std::vector<Matrix> propagated;     // S_l = A_hat * H_{l-1}
  std::vector<Matrix> preactivation;  // Z_l = S_l * W_l
  bool valid() const { return !propagated.empty(); }
};

// H = ReLU(A_hat H W) stacked; returns H^(L). Pass a cache to enable backward.
Matrix gcn_forward(const NormAdj& adj, const Matrix& features, const GcnParams& params,
                   GcnCache* cache = nullptr);

struct GcnGrads {
  std::vector<Matrix> d_weights;
  Matrix d_input;  // filled only when requested
};

GcnGrads gcn_backward(const GcnCache& cache, const GcnParams& params, const Matrix& d_output,
                      bool want_input_grad = false);

}  // namespace ssread
