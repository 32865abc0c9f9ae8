#pragma once

// Independent reference implementations used only by tests. These stay
// brute-force / textbook on purpose; they must not share code with the
// library paths they check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "ssread/matrix.hpp"
#include "ssread/readout.hpp"
#include "ssread/tu.hpp"

namespace oracle {

// Plain scalar triple loop.
inline ssread::Matrix matmul(const ssread::Matrix& a, const ssread::Matrix& b) {
  ssread::Matrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (int k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

inline double cosine_cost(std::span<const double> h, std::span<const double> p) {
  double hp = 0.0, hh = 0.0, pp = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    hp += h[i] * p[i];
    hh += h[i] * h[i];
    pp += p[i] * p[i];
  }
  return 1.0 - hp / (std::max(std::sqrt(hh), 1e-12) * std::max(std::sqrt(pp), 1e-12));
}

// Total cost <M, Delta> of one alignment, with M given as per-node positions.
inline double alignment_cost(const ssread::Matrix& delta, const std::vector<int>& assign) {
  double s = 0.0;
  for (int n = 0; n < delta.rows(); ++n) s += delta(n, assign[n]);
  return s;
}

// Exhaustive minimum over all K^N one-hot alignment matrices.
inline double exhaustive_min_cost(const ssread::Matrix& delta) {
  const int n = delta.rows(), k = delta.cols();
  std::vector<int> assign(n, 0);
  double best = std::numeric_limits<double>::infinity();
  for (;;) {
    best = std::min(best, alignment_cost(delta, assign));
    int pos = 0;
    while (pos < n && ++assign[pos] == k) assign[pos++] = 0;
    if (pos == n) break;
  }
  return best;
}

// Brute-force soft minimum over all K^N alignments:
//   -gamma * log sum_M exp(-<M, Delta>/gamma), max-shifted for stability.
inline double exhaustive_soft_cost(const ssread::Matrix& delta, double gamma) {
  const int n = delta.rows(), k = delta.cols();
  std::vector<int> assign(n, 0);
  std::vector<double> costs;
  for (;;) {
    costs.push_back(alignment_cost(delta, assign));
    int pos = 0;
    while (pos < n && ++assign[pos] == k) assign[pos++] = 0;
    if (pos == n) break;
  }
  const double m = *std::min_element(costs.begin(), costs.end());
  if (gamma == 0.0) return m;
  double z = 0.0;
  for (double c : costs) z += std::exp(-(c - m) / gamma);
  return m - gamma * std::log(z);
}

// Textbook aggregation over explicit groups (no canonical reordering),
// independent of the library's readout path.
inline ssread::Matrix aggregate(const ssread::Matrix& h,
                                const std::vector<std::vector<int>>& groups,
                                const ssread::Aggregator& phi) {
  const int d = h.cols();
  ssread::Matrix out(static_cast<int>(groups.size()), d);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& group = groups[g];
    if (group.empty()) continue;
    switch (phi.kind) {
      case ssread::AggregatorKind::Sum:
      case ssread::AggregatorKind::Mean:
        for (int n : group)
          for (int j = 0; j < d; ++j) out(static_cast<int>(g), j) += h(n, j);
        if (phi.kind == ssread::AggregatorKind::Mean)
          for (int j = 0; j < d; ++j) out(static_cast<int>(g), j) /= static_cast<double>(group.size());
        break;
      case ssread::AggregatorKind::Max:
        for (int j = 0; j < d; ++j) {
          double best = h(group[0], j);
          for (int n : group) best = std::max(best, h(n, j));
          out(static_cast<int>(g), j) = best;
        }
        break;
      case ssread::AggregatorKind::Attention: {
        std::vector<double> w(group.size());
        double max_s = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < group.size(); ++i) {
          double s = 0.0;
          for (int j = 0; j < d; ++j) s += h(group[i], j) * phi.gate(j, 0);
          w[i] = s;
          max_s = std::max(max_s, s);
        }
        double z = 0.0;
        for (double& s : w) {
          s = std::exp(s - max_s);
          z += s;
        }
        for (std::size_t i = 0; i < group.size(); ++i)
          for (int j = 0; j < d; ++j) out(static_cast<int>(g), j) += (w[i] / z) * h(group[i], j);
        break;
      }
    }
  }
  return out;
}

// Dense reference for one graph convolution stack: builds the full
// D^-1/2 (A+I) D^-1/2 matrix and uses the scalar matmul above.
inline ssread::Matrix dense_gcn_forward(const ssread::Graph& g,
                                        const std::vector<ssread::Matrix>& weights) {
  const int n = g.num_nodes;
  ssread::Matrix a(n, n);
  for (int i = 0; i < n; ++i) a(i, i) = 1.0;
  for (const auto& [u, v] : g.edges) a(u, v) = a(v, u) = 1.0;
  std::vector<double> dinv(n);
  for (int i = 0; i < n; ++i) {
    double deg = 0.0;
    for (int j = 0; j < n; ++j) deg += a(i, j);
    dinv[i] = 1.0 / std::sqrt(deg);
  }
  ssread::Matrix norm(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) norm(i, j) = dinv[i] * a(i, j) * dinv[j];

  ssread::Matrix h = g.features;
  for (const ssread::Matrix& w : weights) {
    h = oracle::matmul(oracle::matmul(norm, h), w);
    for (std::size_t i = 0; i < h.size(); ++i) h.data()[i] = std::max(0.0, h.data()[i]);
  }
  return h;
}

}  // namespace oracle
