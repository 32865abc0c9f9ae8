#include "ssread/gcn.hpp"

#include <cmath>
#include <stdexcept>

namespace ssread {

GcnParams init_gcn(int in_dim, int hidden_dim, int num_layers, Rng& rng) {
  if (num_layers < 1) throw std::invalid_argument("init_gcn: need at least one layer");
  GcnParams p;
  p.weights.push_back(rng.glorot_matrix(in_dim, hidden_dim));
  for (int l = 1; l < num_layers; ++l) p.weights.push_back(rng.glorot_matrix(hidden_dim, hidden_dim));
  return p;
}

NormAdj normalize_adjacency(const Graph& g) {
  NormAdj adj;
  adj.num_nodes = g.num_nodes;
  std::vector<double> deg(g.num_nodes, 1.0);  // self-loop included
  for (const auto& [u, v] : g.edges) {
    deg[u] += 1.0;
    deg[v] += 1.0;
  }
  adj.entries.reserve(g.num_nodes + 2 * g.edges.size());
  for (int n = 0; n < g.num_nodes; ++n) adj.entries.push_back({n, n, 1.0 / deg[n]});
  for (const auto& [u, v] : g.edges) {
    const double c = 1.0 / std::sqrt(deg[u] * deg[v]);
    adj.entries.push_back({u, v, c});
    adj.entries.push_back({v, u, c});
  }
  return adj;
}

Matrix propagate(const NormAdj& adj, const Matrix& in) {
  if (in.rows() != adj.num_nodes) throw std::invalid_argument("propagate: node count mismatch");
  Matrix out(in.rows(), in.cols());
  const int d = in.cols();
  for (const auto& e : adj.entries) {
    const double* src = in.data() + static_cast<std::size_t>(e.src) * d;
    double* dst = out.data() + static_cast<std::size_t>(e.dst) * d;
    for (int j = 0; j < d; ++j) dst[j] += e.coeff * src[j];
  }
  return out;
}

Matrix gcn_forward(const NormAdj& adj, const Matrix& features, const GcnParams& params,
                   GcnCache* cache) {
  if (features.cols() != params.weights.front().rows())
    throw std::invalid_argument("gcn_forward: feature dim does not match first layer");
  if (cache) {
    cache->adj = adj;
    cache->propagated.clear();
    cache->preactivation.clear();
  }
  Matrix h = features;
  for (const Matrix& w : params.weights) {
    Matrix s = propagate(adj, h);
    Matrix z = matmul(s, w);
    if (cache) {
      cache->propagated.push_back(std::move(s));
      cache->preactivation.push_back(z);
    }
    for (std::size_t i = 0; i < z.size(); ++i)
      if (z.data()[i] < 0.0) z.data()[i] = 0.0;
    h = std::move(z);
  }
  return h;
}

GcnGrads gcn_backward(const GcnCache& cache, const GcnParams& params, const Matrix& d_output,
                      bool want_input_grad) {
  if (!cache.valid() || static_cast<int>(cache.propagated.size()) != params.layers())
    throw std::invalid_argument("gcn_backward: forward cache missing or stale");

  GcnGrads grads;
  grads.d_weights.resize(params.layers());
  Matrix g = d_output;
  for (int l = params.layers() - 1; l >= 0; --l) {
    const Matrix& z = cache.preactivation[l];
    if (!g.same_shape(z)) throw std::invalid_argument("gcn_backward: upstream shape mismatch");
    for (std::size_t i = 0; i < g.size(); ++i)
      if (z.data()[i] <= 0.0) g.data()[i] = 0.0;
    grads.d_weights[l] = matmul(transpose(cache.propagated[l]), g);
    if (l > 0 || want_input_grad)
      g = propagate(cache.adj, matmul(g, transpose(params.weights[l])));
  }
  if (want_input_grad) grads.d_input = std::move(g);
  return grads;
}

}  // namespace ssread
