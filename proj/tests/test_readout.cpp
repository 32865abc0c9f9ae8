#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "ssread/grad_check.hpp"
#include "ssread/readout.hpp"
#include "testutil.hpp"

using namespace ssread;

namespace {

Matrix permute_rows(const Matrix& h, const std::vector<int>& perm) {
  Matrix out(h.rows(), h.cols());
  for (int n = 0; n < h.rows(); ++n) {
    const auto src = h.row(n);
    std::copy(src.begin(), src.end(), out.row(perm[n]).begin());
  }
  return out;
}

const std::vector<AggregatorKind> kAllKinds = {AggregatorKind::Sum, AggregatorKind::Max,
                                               AggregatorKind::Mean, AggregatorKind::Attention};

Aggregator random_aggregator(AggregatorKind kind, int dim, Rng& rng) {
  Aggregator phi = make_aggregator(kind, dim);
  if (kind == AggregatorKind::Attention) phi.gate = rng.normal_matrix(dim, 1);
  return phi;
}

}  // namespace

TEST_CASE("cosine cost on aligned, antipodal and orthogonal vectors") {
  const std::vector<double> h = {0.3, -1.2, 0.5};
  std::vector<double> neg = h;
  for (double& v : neg) v = -v;
  CHECK(cosine_cost(h, h) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cosine_cost(h, neg) == doctest::Approx(2.0).epsilon(1e-12));
  const std::vector<double> e1 = {1.0, 0.0}, e2 = {0.0, 1.0};
  CHECK(cosine_cost(e1, e2) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("cost matrix entries stay in [0, 2], including dead-ReLU rows") {
  Rng rng(3);
  Matrix h = rng.normal_matrix(6, 4);
  for (int j = 0; j < 4; ++j) h(2, j) = 0.0;  // all-zero node row
  const Prototypes protos = init_prototypes(3, 4, rng);
  const Matrix delta = cost_matrix(h, protos);
  for (std::size_t i = 0; i < delta.size(); ++i) {
    CHECK(delta.data()[i] >= 0.0);
    CHECK(delta.data()[i] <= 2.0);
  }
}

TEST_CASE("alignment of prototype rows themselves has zero cost") {
  Rng rng(7);
  const Prototypes protos = init_prototypes(3, 5, rng);
  Matrix h(4, 5);
  const std::vector<int> expect = {2, 0, 1, 2};
  for (int n = 0; n < 4; ++n) {
    const auto src = protos.p.row(expect[n]);
    std::copy(src.begin(), src.end(), h.row(n).begin());
  }
  const Alignment a = align(h, protos);
  CHECK(a.assign == expect);
  CHECK(a.cost == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("alignment equals the exhaustive minimum over all matrices") {
  Rng rng(11);
  for (int rep = 0; rep < 30; ++rep) {
    const int n = 1 + rng.uniform_index(5), k = 1 + rng.uniform_index(3), d = 2 + rng.uniform_index(3);
    const Matrix h = rng.normal_matrix(n, d);
    const Prototypes protos = init_prototypes(k, d, rng);
    const Alignment a = align(h, protos);
    const double brute = oracle::exhaustive_min_cost(cost_matrix(h, protos));
    CHECK(std::fabs(a.cost - brute) <= 1e-9);
    // invariant: cost == sum of assigned entries
    CHECK(std::fabs(a.cost - oracle::alignment_cost(cost_matrix(h, protos), a.assign)) <= 1e-9);
  }
}

TEST_CASE("alignment is equivariant under node permutations") {
  Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 2 + rng.uniform_index(6);
    const Matrix h = rng.normal_matrix(n, 4);
    const Prototypes protos = init_prototypes(3, 4, rng);
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    const Alignment base = align(h, protos);
    const Alignment shuffled = align(permute_rows(h, perm), protos);
    for (int i = 0; i < n; ++i) CHECK(shuffled.assign[perm[i]] == base.assign[i]);
  }
}

TEST_CASE("single-position readout degenerates to the global readout") {
  Rng rng(17);
  const Matrix h = rng.normal_matrix(5, 4);
  for (AggregatorKind kind : kAllKinds) {
    const Aggregator phi = random_aggregator(kind, 4, rng);
    const Prototypes one = init_prototypes(1, 4, rng);
    const Matrix via_ssread = ssread::ssread(h, one, phi);
    const Matrix via_gread = gread(h, phi);
    CHECK(via_ssread == via_gread);
  }
}

TEST_CASE("two nodes on distinct positions come back as their own rows") {
  Prototypes protos{Matrix(2, 2, {1.0, 0.0, 0.0, 1.0})};
  const Matrix h(2, 2, {0.9, 0.1, 0.2, 0.8});  // node 0 -> position 0, node 1 -> position 1
  Alignment alignment;
  const Matrix summary = ssread::ssread(h, protos, make_aggregator(AggregatorKind::Sum, 2), nullptr,
                                &alignment);
  CHECK(alignment.assign == std::vector<int>{0, 1});
  CHECK(summary == h);
}

TEST_CASE("empty positions aggregate to zero rows for every kind") {
  Rng rng(19);
  Matrix h(3, 4);
  for (int n = 0; n < 3; ++n) h(n, 0) = 1.0;  // everything aligns to the e1-like prototype
  Prototypes protos{Matrix(2, 4)};
  protos.p(0, 0) = 1.0;
  protos.p(1, 1) = 1.0;
  for (AggregatorKind kind : kAllKinds) {
    const Aggregator phi = random_aggregator(kind, 4, rng);
    Alignment alignment;
    const Matrix summary = ssread::ssread(h, protos, phi, nullptr, &alignment);
    REQUIRE(summary.rows() == 2);
    for (int n = 0; n < 3; ++n) CHECK(alignment.assign[n] == 0);
    for (int j = 0; j < 4; ++j) CHECK(summary(1, j) == 0.0);
  }
}

TEST_CASE("position-level readout is invariant under node permutations") {
  Rng rng(23);
  int checked = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + rng.uniform_index(10), d = 3 + rng.uniform_index(4);
    const Matrix h = rng.normal_matrix(n, d);
    const Prototypes protos = init_prototypes(1 + rng.uniform_index(4), d, rng);
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    const Matrix ph = permute_rows(h, perm);
    for (AggregatorKind kind : kAllKinds) {
      const Aggregator phi = random_aggregator(kind, d, rng);
      const Matrix base = ssread::ssread(h, protos, phi);
      const Matrix shuffled = ssread::ssread(ph, protos, phi);
      if (kind == AggregatorKind::Sum || kind == AggregatorKind::Max) {
        CHECK(base == shuffled);  // bitwise
      } else {
        CHECK(max_abs_diff(base, shuffled) <= 1e-12);
      }
      ++checked;
    }
  }
  CHECK(checked == 400);
}

TEST_CASE("global readout basics") {
  SUBCASE("single row passes through for every kind") {
    Rng rng(29);
    const Matrix h = rng.normal_matrix(1, 5);
    for (AggregatorKind kind : kAllKinds) {
      const Aggregator phi = random_aggregator(kind, 5, rng);
      const Matrix out = gread(h, phi);
      REQUIRE(out.rows() == 1);
      CHECK(max_abs_diff(out, h) <= 1e-15);
    }
  }
  SUBCASE("sum of unit vectors adds them up") {
    const Matrix h(2, 3, {1.0, 0.0, 0.0, 0.0, 1.0, 0.0});
    const Matrix out = gread(h, make_aggregator(AggregatorKind::Sum, 3));
    CHECK(out == Matrix(1, 3, {1.0, 1.0, 0.0}));
  }
  SUBCASE("attention with a zero gate equals the mean") {
    Rng rng(31);
    const Matrix h = rng.normal_matrix(6, 4);
    const Matrix attention = gread(h, make_aggregator(AggregatorKind::Attention, 4));
    const Matrix mean = gread(h, make_aggregator(AggregatorKind::Mean, 4));
    CHECK(max_abs_diff(attention, mean) <= 1e-12);
  }
  SUBCASE("empty graph is rejected") {
    CHECK_THROWS_AS(gread(Matrix(0, 3), make_aggregator(AggregatorKind::Sum, 3)),
                    std::invalid_argument);
  }
}

TEST_CASE("soft minimum") {
  SUBCASE("single element is returned for every gamma") {
    for (double gamma : {0.0, 0.01, 0.5, 2.0}) {
      const std::vector<double> one = {0.37};
      CHECK(soft_min(one, gamma) == doctest::Approx(0.37).epsilon(1e-15));
    }
  }
  SUBCASE("two zeros at gamma 1 give -ln 2") {
    const std::vector<double> v = {0.0, 0.0};
    CHECK(soft_min(v, 1.0) == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("well-separated values at small gamma return the minimum") {
    const std::vector<double> v = {0.2, 0.5};
    CHECK(std::fabs(soft_min(v, 0.01) - 0.2) <= 1e-12);
  }
  SUBCASE("gamma zero is the exact minimum") {
    const std::vector<double> v = {3.0, -1.5, 2.0};
    CHECK(soft_min(v, 0.0) == -1.5);
  }
}

TEST_CASE("factored soft alignment equals the exhaustive relaxation") {
  Rng rng(37);
  for (int rep = 0; rep < 40; ++rep) {
    const int n = 1 + rng.uniform_index(5), k = 1 + rng.uniform_index(3), d = 2 + rng.uniform_index(3);
    const Matrix h = rng.normal_matrix(n, d);
    const Prototypes protos = init_prototypes(k, d, rng);
    const Matrix delta = cost_matrix(h, protos);
    for (double gamma : {0.01, 0.1, 1.0}) {
      const double factored = soft_ssa(h, protos, gamma).value;
      const double brute = oracle::exhaustive_soft_cost(delta, gamma);
      CHECK(std::fabs(factored - brute) <= 1e-9);
    }
  }
}

TEST_CASE("soft alignment at gamma zero is exactly the hard alignment cost") {
  Rng rng(41);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix h = rng.normal_matrix(2 + rng.uniform_index(6), 4);
    const Prototypes protos = init_prototypes(1 + rng.uniform_index(4), 4, rng);
    CHECK(soft_ssa(h, protos, 0.0).value == align(h, protos).cost);
  }
}

TEST_CASE("relaxation gap obeys the log-sum-exp bound") {
  Rng rng(43);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 1 + rng.uniform_index(8), k = 1 + rng.uniform_index(5);
    const Matrix h = rng.normal_matrix(n, 4);
    const Prototypes protos = init_prototypes(k, 4, rng);
    const double hard = align(h, protos).cost;
    const double gamma = 0.01 + rng.uniform();
    const double soft = soft_ssa(h, protos, gamma).value;
    CHECK(hard - soft >= -1e-12);
    CHECK(hard - soft <= gamma * n * std::log(static_cast<double>(k)) + 1e-9);
  }
}

TEST_CASE("soft alignment gradients pass grad_check") {
  Rng rng(47);
  const int k = 3, n = 5, d = 4;
  const Matrix h = rng.normal_matrix(n, d);
  const Prototypes protos = init_prototypes(k, d, rng);
  const double gamma = 0.01;
  const SoftSsaResult res = soft_ssa(h, protos, gamma);

  const auto f_p = [&](const Matrix& probe) { return soft_ssa(h, Prototypes{probe}, gamma).value; };
  CHECK(grad_check(f_p, protos.p, res.d_prototypes, 1e-6) <= 1e-4);

  const auto f_h = [&](const Matrix& probe) { return soft_ssa(probe, protos, gamma).value; };
  CHECK(grad_check(f_h, h, res.d_h, 1e-6) <= 1e-4);
}

TEST_CASE("readout backward matches finite differences with frozen groups") {
  Rng rng(53);
  const int n = 7, d = 5, k = 3;
  const Matrix h = rng.normal_matrix(n, d);
  const Prototypes protos = init_prototypes(k, d, rng);
  const Matrix upstream = rng.normal_matrix(k, d);

  for (AggregatorKind kind : kAllKinds) {
    CAPTURE(static_cast<int>(kind));
    const Aggregator phi = random_aggregator(kind, d, rng);
    ReadoutCache cache;
    const Matrix summary = ssread::ssread(h, protos, phi, &cache);
    CHECK(max_abs_diff(summary, oracle::aggregate(h, cache.groups, phi)) <= 1e-12);
    const ReadoutGrads grads = readout_backward(cache, upstream);

    // loss = <upstream, phi(H)> with the node-position groups held fixed,
    // like the training path treats the hard alignment.
    const auto loss_of = [&](const Matrix& probed_h, const Aggregator& probed_phi) {
      const Matrix s = oracle::aggregate(probed_h, cache.groups, probed_phi);
      double acc = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i) acc += s.data()[i] * upstream.data()[i];
      return acc;
    };
    const auto f_h = [&](const Matrix& probe) { return loss_of(probe, phi); };
    CHECK(grad_check(f_h, h, grads.d_h, 1e-6) <= 1e-4);

    if (kind == AggregatorKind::Attention) {
      const auto f_gate = [&](const Matrix& probe) {
        Aggregator probed = phi;
        probed.gate = probe;
        return loss_of(h, probed);
      };
      CHECK(grad_check(f_gate, phi.gate, grads.d_gate, 1e-6) <= 1e-4);
    }
  }
}
