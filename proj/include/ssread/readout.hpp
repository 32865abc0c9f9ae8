#pragma once

#include <span>
#include <vector>

#include "ssread/matrix.hpp"
#include "ssread/rng.hpp"

namespace ssread {

// Learnable structural prototypes, one d-vector per position.
struct Prototypes {
  Matrix p;  // K x d
  int k() const { return p.rows(); }
  int dim() const { return p.cols(); }
};

// Rows drawn from a unit normal and normalized to unit length.
Prototypes init_prototypes(int k, int dim, Rng& rng);

// Cosine distance 1 - h.p / (|h||p|), norms clamped at 1e-12; value in [0, 2].
double cosine_cost(std::span<const double> h, std::span<const double> p);

// Delta(H, P): all node-position costs, N x K.
Matrix cost_matrix(const Matrix& h, const Prototypes& protos);

// Hard node-position assignment: assign[n] = argmin_k cost, ties to the
// smallest index; cost is the summed per-node minimum.
struct Alignment {
  std::vector<int> assign;
  double cost = 0.0;
};

Alignment align(const Matrix& h, const Prototypes& protos);

enum class AggregatorKind { Sum, Max, Mean, Attention };

struct Aggregator {
  AggregatorKind kind = AggregatorKind::Sum;
  Matrix gate;  // d x 1, attention only (learnable)
};

Aggregator make_aggregator(AggregatorKind kind, int dim);

// State captured by the forward aggregation so gradients can be routed back
// to the contributing node vectors (and the attention gate).
struct ReadoutCache {
  AggregatorKind kind = AggregatorKind::Sum;
  Matrix h;
  Matrix gate;
  std::vector<std::vector<int>> groups;      // canonical member order per position
  std::vector<std::vector<double>> alpha;    // attention weights per position
  std::vector<std::vector<int>> argmax;      // max: winning node per (position, dim)
  bool valid() const { return !groups.empty(); }
};

// Position-level readout: row k aggregates the nodes aligned with position k;
// empty positions yield zero rows. Output is always K x d.
Matrix ssread(const Matrix& h, const Prototypes& protos, const Aggregator& phi,
              ReadoutCache* cache = nullptr, Alignment* alignment_out = nullptr);

// Global readout over all nodes (1 x d). Errors on an empty graph.
Matrix gread(const Matrix& h, const Aggregator& phi, ReadoutCache* cache = nullptr);

struct ReadoutGrads {
  Matrix d_h;
  Matrix d_gate;  // zero-size unless attention
};

ReadoutGrads readout_backward(const ReadoutCache& cache, const Matrix& d_summary);

// Soft minimum with smoothing gamma: exact min at gamma = 0, otherwise
// -gamma * log sum exp(-a_i / gamma), max-shifted for stability.
double soft_min(std::span<const double> values, double gamma);

// Soft structural semantic alignment cost, factored node-wise, with its
// gradients for both arguments. Per-node position weights are
// softmax(-cost / gamma); at gamma = 0 the weight collapses onto the argmin.
struct SoftSsaResult {
  double value = 0.0;
  Matrix d_prototypes;  // K x d
  Matrix d_h;           // N x d
};

SoftSsaResult soft_ssa(const Matrix& h, const Prototypes& protos, double gamma);

}  // namespace ssread
