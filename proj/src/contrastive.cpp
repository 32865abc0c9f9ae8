#include "ssread/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ssread {

namespace {

constexpr double kNormEps = 1e-12;

struct PassTrace {
  GcnCache gcn;
  ReadoutCache readout;
  const Graph* graph = nullptr;
  Matrix h;        // node representations
  Matrix summary;  // positions x d
  Matrix v;        // 1 x (positions*d)
  Matrix z1;       // projection pre-activation
  Matrix h1;       // projection hidden
  Matrix z;        // 1 x d projected representation
};

PassTrace forward_pass(const Graph& g, const ModelState& state) {
  const ProjectionHead& proj = *state.projection;
  PassTrace t;
  t.graph = &g;
  t.h = gcn_forward(normalize_adjacency(g), g.features, state.theta, &t.gcn);
  t.summary = model_summary(state, t.h, &t.readout);
  t.v = Matrix(1, static_cast<int>(t.summary.size()),
               std::vector<double>(t.summary.data(), t.summary.data() + t.summary.size()));
  t.z1 = matmul(t.v, proj.w1) + proj.b1;
  t.h1 = t.z1;
  for (std::size_t i = 0; i < t.h1.size(); ++i)
    if (t.h1.data()[i] < 0.0) t.h1.data()[i] = 0.0;
  t.z = matmul(t.h1, proj.w2) + proj.b2;
  return t;
}

// value = a.b / (|a||b| * tau); accumulates d(value)/da into da (scaled).
double cosine_sim(const Matrix& a, const Matrix& b, double tau) {
  const std::span<const double> ra(a.data(), a.size());
  const std::span<const double> rb(b.data(), b.size());
  const double na = std::max(norm2(ra), kNormEps);
  const double nb = std::max(norm2(rb), kNormEps);
  return dot(ra, rb) / (na * nb * tau);
}

void cosine_sim_grad(const Matrix& a, const Matrix& b, double tau, double upstream, Matrix& da) {
  const std::span<const double> ra(a.data(), a.size());
  const std::span<const double> rb(b.data(), b.size());
  const double na = std::max(norm2(ra), kNormEps);
  const double nb = std::max(norm2(rb), kNormEps);
  const double ab = dot(ra, rb);
  const double c1 = upstream / (na * nb * tau);
  const double c2 = upstream * ab / (na * na * na * nb * tau);
  for (std::size_t i = 0; i < a.size(); ++i) da.data()[i] += c1 * rb[i] - c2 * ra[i];
}

}  // namespace

Graph node_drop(const Graph& g, double ratio, Rng& rng) {
  if (g.num_nodes <= 2 || ratio <= 0.0) return g;
  std::vector<int> kept;
  do {
    kept.clear();
    for (int n = 0; n < g.num_nodes; ++n)
      if (rng.uniform() >= ratio) kept.push_back(n);
  } while (static_cast<int>(kept.size()) < 2);

  std::vector<int> local(g.num_nodes, -1);
  for (std::size_t i = 0; i < kept.size(); ++i) local[kept[i]] = static_cast<int>(i);

  Graph out;
  out.num_nodes = static_cast<int>(kept.size());
  out.label = g.label;
  for (const auto& [u, v] : g.edges)
    if (local[u] >= 0 && local[v] >= 0)
      out.edges.emplace_back(std::min(local[u], local[v]), std::max(local[u], local[v]));
  std::sort(out.edges.begin(), out.edges.end());
  out.features = Matrix(out.num_nodes, g.features.cols());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto src = g.features.row(kept[i]);
    std::copy(src.begin(), src.end(), out.features.row(static_cast<int>(i)).begin());
  }
  if (!g.node_labels.empty()) {
    out.node_labels.reserve(kept.size());
    for (int n : kept) out.node_labels.push_back(g.node_labels[n]);
  }
  return out;
}

ContrastiveResult contrastive_loss_and_grads(const std::vector<const Graph*>& originals,
                                             const std::vector<Graph>& augmented,
                                             const ModelState& state, double temperature) {
  const int batch = static_cast<int>(originals.size());
  if (batch < 2)
    throw std::invalid_argument("contrastive loss needs a batch of at least 2 (no negatives)");
  if (augmented.size() != originals.size())
    throw std::invalid_argument("contrastive loss: originals/augmented size mismatch");
  if (!state.projection) throw std::invalid_argument("contrastive loss: no projection head");

  std::vector<PassTrace> orig(batch), aug(batch);
  for (int i = 0; i < batch; ++i) {
    orig[i] = forward_pass(*originals[i], state);
    aug[i] = forward_pass(augmented[i], state);
  }

  const double inv_b = 1.0 / static_cast<double>(batch);
  std::vector<Matrix> dz_orig(batch), dz_aug(batch);
  for (int i = 0; i < batch; ++i) {
    dz_orig[i] = Matrix(1, orig[i].z.cols());
    dz_aug[i] = Matrix(1, aug[i].z.cols());
  }

  double loss = 0.0;
  std::vector<double> neg(batch);
  for (int i = 0; i < batch; ++i) {
    const double pos = cosine_sim(orig[i].z, aug[i].z, temperature);

    double max_neg = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < batch; ++j) {
      if (j == i) continue;
      neg[j] = cosine_sim(orig[i].z, orig[j].z, temperature);
      max_neg = std::max(max_neg, neg[j]);
    }
    double z = 0.0;
    for (int j = 0; j < batch; ++j)
      if (j != i) z += std::exp(neg[j] - max_neg);
    const double lse = max_neg + std::log(z);
    loss += (-pos + lse) * inv_b;

    // d(-pos)/d(z): both ends of the positive pair.
    cosine_sim_grad(orig[i].z, aug[i].z, temperature, -inv_b, dz_orig[i]);
    cosine_sim_grad(aug[i].z, orig[i].z, temperature, -inv_b, dz_aug[i]);
    // softmax weights over the negatives.
    for (int j = 0; j < batch; ++j) {
      if (j == i) continue;
      const double w = std::exp(neg[j] - lse) * inv_b;
      cosine_sim_grad(orig[i].z, orig[j].z, temperature, w, dz_orig[i]);
      cosine_sim_grad(orig[j].z, orig[i].z, temperature, w, dz_orig[j]);
    }
  }

  const ProjectionHead& proj = *state.projection;
  ContrastiveResult res;
  res.loss = loss;
  for (const Matrix& w : state.theta.weights) res.d_theta.emplace_back(w.rows(), w.cols());
  if (state.agg.kind == AggregatorKind::Attention) res.d_gate = Matrix(proj.b1.cols(), 1);
  res.d_projection.w1 = Matrix(proj.w1.rows(), proj.w1.cols());
  res.d_projection.b1 = Matrix(proj.b1.rows(), proj.b1.cols());
  res.d_projection.w2 = Matrix(proj.w2.rows(), proj.w2.cols());
  res.d_projection.b2 = Matrix(proj.b2.rows(), proj.b2.cols());

  auto backprop = [&](PassTrace& t, const Matrix& dz) {
    res.d_projection.b2 = res.d_projection.b2 + dz;
    axpy(1.0, matmul(transpose(t.h1), dz), res.d_projection.w2);
    Matrix dz1 = matmul(dz, transpose(proj.w2));
    for (std::size_t i = 0; i < dz1.size(); ++i)
      if (t.z1.data()[i] <= 0.0) dz1.data()[i] = 0.0;
    axpy(1.0, matmul(transpose(t.v), dz1), res.d_projection.w1);
    axpy(1.0, dz1, res.d_projection.b1);
    const Matrix dv = matmul(dz1, transpose(proj.w1));
    const Matrix d_summary(t.summary.rows(), t.summary.cols(),
                           std::vector<double>(dv.data(), dv.data() + dv.size()));
    const ReadoutGrads rg = readout_backward(t.readout, d_summary);
    if (res.d_gate.size() != 0) axpy(1.0, rg.d_gate, res.d_gate);
    const GcnGrads gg = gcn_backward(t.gcn, state.theta, rg.d_h);
    for (std::size_t l = 0; l < res.d_theta.size(); ++l)
      axpy(1.0, gg.d_weights[l], res.d_theta[l]);
  };
  for (int i = 0; i < batch; ++i) {
    backprop(orig[i], dz_orig[i]);
    backprop(aug[i], dz_aug[i]);
  }
  return res;
}

}  // namespace ssread
