#include "ssread/readout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ssread {

namespace {

constexpr double kNormEps = 1e-12;

// Canonical member order: lexicographic by node vector, so that group
// aggregation is bit-identical under any node permutation (equal rows
// contribute equal values, so their relative order is immaterial).
void canonicalize(std::vector<int>& group, const Matrix& h) {
  std::sort(group.begin(), group.end(), [&](int a, int b) {
    const auto ra = h.row(a), rb = h.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });
}

Matrix aggregate_groups(const Matrix& h, std::vector<std::vector<int>> groups,
                        const Aggregator& phi, ReadoutCache* cache) {
  const int d = h.cols();
  const int k = static_cast<int>(groups.size());
  if (phi.kind == AggregatorKind::Attention && phi.gate.rows() != d)
    throw std::invalid_argument("aggregate: attention gate dimension mismatch");

  for (auto& group : groups) canonicalize(group, h);

  Matrix out(k, d);
  std::vector<std::vector<double>> alpha;
  std::vector<std::vector<int>> argmax;
  if (phi.kind == AggregatorKind::Attention) alpha.resize(k);
  if (phi.kind == AggregatorKind::Max) argmax.assign(k, std::vector<int>(d, -1));

  for (int g = 0; g < k; ++g) {
    const auto& group = groups[g];
    if (group.empty()) continue;  // zero row
    auto out_row = out.row(g);
    switch (phi.kind) {
      case AggregatorKind::Sum:
      case AggregatorKind::Mean: {
        for (int n : group) {
          const auto hn = h.row(n);
          for (int j = 0; j < d; ++j) out_row[j] += hn[j];
        }
        if (phi.kind == AggregatorKind::Mean)
          for (int j = 0; j < d; ++j) out_row[j] /= static_cast<double>(group.size());
        break;
      }
      case AggregatorKind::Max: {
        for (int j = 0; j < d; ++j) out_row[j] = h(group[0], j);
        argmax[g].assign(d, group[0]);
        for (std::size_t i = 1; i < group.size(); ++i) {
          const int n = group[i];
          for (int j = 0; j < d; ++j) {
            if (h(n, j) > out_row[j]) {
              out_row[j] = h(n, j);
              argmax[g][j] = n;
            }
          }
        }
        break;
      }
      case AggregatorKind::Attention: {
        std::vector<double> score(group.size());
        double max_score = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < group.size(); ++i) {
          score[i] = dot(h.row(group[i]), std::span<const double>(phi.gate.data(), d));
          max_score = std::max(max_score, score[i]);
        }
        double z = 0.0;
        for (double& s : score) {
          s = std::exp(s - max_score);
          z += s;
        }
        std::vector<double>& a = alpha[g];
        a.resize(group.size());
        for (std::size_t i = 0; i < group.size(); ++i) {
          a[i] = score[i] / z;
          const auto hn = h.row(group[i]);
          for (int j = 0; j < d; ++j) out_row[j] += a[i] * hn[j];
        }
        break;
      }
    }
  }

  if (cache) {
    cache->kind = phi.kind;
    cache->h = h;
    cache->gate = phi.gate;
    cache->groups = std::move(groups);
    cache->alpha = std::move(alpha);
    cache->argmax = std::move(argmax);
  }
  return out;
}

}  // namespace

Prototypes init_prototypes(int k, int dim, Rng& rng) {
  if (k < 1) throw std::invalid_argument("init_prototypes: K must be >= 1");
  Prototypes protos{rng.normal_matrix(k, dim)};
  for (int i = 0; i < k; ++i) {
    auto row = protos.p.row(i);
    const double norm = std::max(norm2(row), kNormEps);
    for (double& v : row) v /= norm;
  }
  return protos;
}

double cosine_cost(std::span<const double> h, std::span<const double> p) {
  const double denom = std::max(norm2(h), kNormEps) * std::max(norm2(p), kNormEps);
  const double raw = 1.0 - dot(h, p) / denom;
  return std::clamp(raw, 0.0, 2.0);
}

Matrix cost_matrix(const Matrix& h, const Prototypes& protos) {
  if (h.cols() != protos.dim()) throw std::invalid_argument("cost_matrix: dimension mismatch");
  Matrix delta(h.rows(), protos.k());
  for (int n = 0; n < h.rows(); ++n)
    for (int k = 0; k < protos.k(); ++k) delta(n, k) = cosine_cost(h.row(n), protos.p.row(k));
  return delta;
}

Alignment align(const Matrix& h, const Prototypes& protos) {
  if (h.cols() != protos.dim()) throw std::invalid_argument("align: dimension mismatch");
  Alignment out;
  out.assign.resize(h.rows());
  for (int n = 0; n < h.rows(); ++n) {
    int best = 0;
    double best_cost = cosine_cost(h.row(n), protos.p.row(0));
    for (int k = 1; k < protos.k(); ++k) {
      const double c = cosine_cost(h.row(n), protos.p.row(k));
      if (c < best_cost) {
        best_cost = c;
        best = k;
      }
    }
    out.assign[n] = best;
    out.cost += best_cost;
  }
  return out;
}

Aggregator make_aggregator(AggregatorKind kind, int dim) {
  Aggregator phi{kind, {}};
  if (kind == AggregatorKind::Attention) phi.gate = Matrix(dim, 1);  // zero gate: uniform weights
  return phi;
}

Matrix ssread(const Matrix& h, const Prototypes& protos, const Aggregator& phi,
              ReadoutCache* cache, Alignment* alignment_out) {
  const Alignment alignment = align(h, protos);
  std::vector<std::vector<int>> groups(protos.k());
  for (int n = 0; n < h.rows(); ++n) groups[alignment.assign[n]].push_back(n);
  if (alignment_out) *alignment_out = alignment;
  return aggregate_groups(h, std::move(groups), phi, cache);
}

Matrix gread(const Matrix& h, const Aggregator& phi, ReadoutCache* cache) {
  if (h.rows() == 0) throw std::invalid_argument("gread: empty graph");
  std::vector<std::vector<int>> groups(1);
  groups[0].resize(h.rows());
  for (int n = 0; n < h.rows(); ++n) groups[0][n] = n;
  return aggregate_groups(h, std::move(groups), phi, cache);
}

ReadoutGrads readout_backward(const ReadoutCache& cache, const Matrix& d_summary) {
  if (!cache.valid()) throw std::invalid_argument("readout_backward: cache missing");
  const int d = cache.h.cols();
  if (d_summary.rows() != static_cast<int>(cache.groups.size()) || d_summary.cols() != d)
    throw std::invalid_argument("readout_backward: upstream shape mismatch");

  ReadoutGrads grads;
  grads.d_h = Matrix(cache.h.rows(), d);
  if (cache.kind == AggregatorKind::Attention) grads.d_gate = Matrix(d, 1);

  for (std::size_t g = 0; g < cache.groups.size(); ++g) {
    const auto& group = cache.groups[g];
    if (group.empty()) continue;
    const auto up = d_summary.row(static_cast<int>(g));
    switch (cache.kind) {
      case AggregatorKind::Sum:
        for (int n : group) {
          auto dh = grads.d_h.row(n);
          for (int j = 0; j < d; ++j) dh[j] += up[j];
        }
        break;
      case AggregatorKind::Mean: {
        const double inv = 1.0 / static_cast<double>(group.size());
        for (int n : group) {
          auto dh = grads.d_h.row(n);
          for (int j = 0; j < d; ++j) dh[j] += up[j] * inv;
        }
        break;
      }
      case AggregatorKind::Max:
        for (int j = 0; j < d; ++j) grads.d_h(cache.argmax[g][j], j) += up[j];
        break;
      case AggregatorKind::Attention: {
        const auto& a = cache.alpha[g];
        std::vector<double> u(group.size());
        double u_bar = 0.0;
        for (std::size_t i = 0; i < group.size(); ++i) {
          u[i] = dot(cache.h.row(group[i]), up);
          u_bar += a[i] * u[i];
        }
        for (std::size_t i = 0; i < group.size(); ++i) {
          const int n = group[i];
          const double shift = a[i] * (u[i] - u_bar);
          auto dh = grads.d_h.row(n);
          const auto hn = cache.h.row(n);
          for (int j = 0; j < d; ++j) {
            dh[j] += a[i] * up[j] + shift * cache.gate(j, 0);
            grads.d_gate(j, 0) += shift * hn[j];
          }
        }
        break;
      }
    }
  }
  return grads;
}

double soft_min(std::span<const double> values, double gamma) {
  if (values.empty()) throw std::invalid_argument("soft_min: empty list");
  const double m = *std::min_element(values.begin(), values.end());
  if (gamma == 0.0) return m;
  double z = 0.0;
  for (double v : values) z += std::exp(-(v - m) / gamma);
  return m - gamma * std::log(z);
}

SoftSsaResult soft_ssa(const Matrix& h, const Prototypes& protos, double gamma) {
  if (gamma < 0.0) throw std::invalid_argument("soft_ssa: gamma must be >= 0");
  const int n_nodes = h.rows(), k = protos.k(), d = protos.dim();
  const Matrix delta = cost_matrix(h, protos);

  SoftSsaResult res;
  res.d_prototypes = Matrix(k, d);
  res.d_h = Matrix(n_nodes, d);

  std::vector<double> weight(k);
  for (int n = 0; n < n_nodes; ++n) {
    const auto costs = delta.row(n);
    int arg_min = 0;
    for (int j = 1; j < k; ++j)
      if (costs[j] < costs[arg_min]) arg_min = j;
    const double min_cost = costs[arg_min];

    if (gamma == 0.0) {
      res.value += min_cost;
      std::fill(weight.begin(), weight.end(), 0.0);
      weight[arg_min] = 1.0;
    } else {
      double z = 0.0;
      for (int j = 0; j < k; ++j) {
        weight[j] = std::exp(-(costs[j] - min_cost) / gamma);
        z += weight[j];
      }
      res.value += min_cost - gamma * std::log(z);
      for (int j = 0; j < k; ++j) weight[j] /= z;
    }

    const auto hn = h.row(n);
    const double nh = std::max(norm2(hn), kNormEps);
    auto dh = res.d_h.row(n);
    for (int j = 0; j < k; ++j) {
      if (weight[j] == 0.0) continue;
      const auto pj = protos.p.row(j);
      const double np = std::max(norm2(pj), kNormEps);
      const double hp = dot(hn, pj);
      auto dp = res.d_prototypes.row(j);
      const double w = weight[j];
      for (int t = 0; t < d; ++t) {
        dp[t] += w * (-hn[t] / (nh * np) + hp * pj[t] / (nh * np * np * np));
        dh[t] += w * (-pj[t] / (nh * np) + hp * hn[t] / (nh * nh * nh * np));
      }
    }
  }
  return res;
}

}  // namespace ssread
