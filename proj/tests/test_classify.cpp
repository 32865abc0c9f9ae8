#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "ssread/classifier.hpp"
#include "ssread/grad_check.hpp"
#include "ssread/model.hpp"
#include "testutil.hpp"

using namespace ssread;

TEST_CASE("zero weights give zero scores and a uniform softmax") {
  Rng rng(3);
  const Matrix h_bar = rng.normal_matrix(4, 6);
  ClassifierParams params;
  for (int c = 0; c < 3; ++c) params.w.push_back(Matrix(4, 6));
  params.b = Matrix(1, 3);
  const auto s = scores(h_bar, params);
  for (double v : s) CHECK(v == 0.0);
  const auto p = softmax(s);
  for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("single-position classifier is an ordinary linear map") {
  Rng rng(5);
  const Matrix g_vec = rng.normal_matrix(1, 8);
  ClassifierParams params = init_classifier(2, 1, 8, rng);
  params.b(0, 0) = 0.25;
  params.b(0, 1) = -0.5;
  const auto s = scores(g_vec, params);
  for (int c = 0; c < 2; ++c) {
    CHECK(s[c] ==
          doctest::Approx(dot(g_vec.row(0), params.w[c].row(0)) + params.b(0, c)).epsilon(1e-12));
  }
}

TEST_CASE("scores match an explicit double-sum oracle") {
  Rng rng(7);
  const Matrix h_bar = rng.normal_matrix(2, 3);
  ClassifierParams params = init_classifier(2, 2, 3, rng);
  params.b(0, 0) = 0.1;
  params.b(0, 1) = -0.2;
  const auto s = scores(h_bar, params);
  for (int c = 0; c < 2; ++c) {
    double expect = params.b(0, c);
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < 3; ++j) expect += h_bar(k, j) * params.w[c](k, j);
    CHECK(std::fabs(s[c] - expect) <= 1e-12);
  }
}

TEST_CASE("scores reject mismatched shapes") {
  Rng rng(9);
  ClassifierParams params = init_classifier(2, 3, 4, rng);
  CHECK_THROWS_AS(scores(Matrix(2, 4), params), std::invalid_argument);
}

TEST_CASE("cross entropy") {
  SUBCASE("uniform two-class scores cost ln 2") {
    const CrossEntropy ce = cross_entropy({0.0, 0.0}, 0);
    CHECK(ce.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("larger margin on the true class lowers the loss") {
    CHECK(cross_entropy({10.0, 0.0}, 0).loss < cross_entropy({1.0, 0.0}, 0).loss);
  }
  SUBCASE("gradient sums to zero over classes") {
    const CrossEntropy ce = cross_entropy({0.3, -1.2, 2.0}, 2);
    double s = 0.0;
    for (double g : ce.d_scores) s += g;
    CHECK(std::fabs(s) <= 1e-12);
  }
  SUBCASE("probabilities sum to one") {
    const auto p = softmax({3.0, -2.0, 0.5, 11.0});
    double s = 0.0;
    for (double v : p) s += v;
    CHECK(std::fabs(s - 1.0) <= 1e-12);
  }
  SUBCASE("label out of range is rejected") {
    CHECK_THROWS_AS(cross_entropy({0.0, 0.0}, 2), std::invalid_argument);
  }
}

TEST_CASE("cross-entropy gradient w.r.t. class weights passes grad_check") {
  Rng rng(11);
  const Matrix h_bar = rng.normal_matrix(3, 4);
  ClassifierParams params = init_classifier(3, 3, 4, rng);
  const int label = 1;

  const CrossEntropy ce = cross_entropy(scores(h_bar, params), label);
  const ClassifierGrads grads = classifier_backward(h_bar, params, ce.d_scores, nullptr);

  for (int c = 0; c < 3; ++c) {
    const auto f = [&](const Matrix& probe) {
      ClassifierParams p = params;
      p.w[c] = probe;
      return cross_entropy(scores(h_bar, p), label).loss;
    };
    CHECK(grad_check(f, params.w[c], grads.d_w[c], 1e-6) <= 1e-5);
  }
  const auto f_b = [&](const Matrix& probe) {
    ClassifierParams p = params;
    p.b = probe;
    return cross_entropy(scores(h_bar, p), label).loss;
  };
  CHECK(grad_check(f_b, params.b, grads.d_b, 1e-6) <= 1e-5);
}

TEST_CASE("position specificity: a zeroed summary row hides its weights") {
  Rng rng(13);
  Matrix h_bar = rng.normal_matrix(3, 4);
  for (int j = 0; j < 4; ++j) h_bar(1, j) = 0.0;
  ClassifierParams params = init_classifier(2, 3, 4, rng);
  const auto before = scores(h_bar, params);
  for (int j = 0; j < 4; ++j) params.w[0](1, j) = 123.0 + j;  // only touches row 1
  const auto after = scores(h_bar, params);
  CHECK(before[0] == after[0]);
  CHECK(before[1] == after[1]);
}

TEST_CASE("the two-layer classifier variant trains the same contracts") {
  Rng rng(15);
  const Matrix h_bar = rng.normal_matrix(3, 4);
  ClassifierParams params = init_classifier(2, 3, 4, rng, ClassifierKind::Mlp, 5);
  const auto s = scores(h_bar, params);
  CHECK(s.size() == 2);

  const CrossEntropy ce = cross_entropy(s, 0);
  Matrix d_h_bar;
  const ClassifierGrads grads = classifier_backward(h_bar, params, ce.d_scores, &d_h_bar);

  const auto f_w1 = [&](const Matrix& probe) {
    ClassifierParams p = params;
    p.w1 = probe;
    return cross_entropy(scores(h_bar, p), 0).loss;
  };
  CHECK(grad_check(f_w1, params.w1, grads.d_w1, 1e-6) <= 1e-4);
  const auto f_w2 = [&](const Matrix& probe) {
    ClassifierParams p = params;
    p.w2 = probe;
    return cross_entropy(scores(h_bar, p), 0).loss;
  };
  CHECK(grad_check(f_w2, params.w2, grads.d_w2, 1e-6) <= 1e-4);
  const auto f_h = [&](const Matrix& probe) {
    return cross_entropy(scores(probe, params), 0).loss;
  };
  CHECK(grad_check(f_h, h_bar, d_h_bar, 1e-6) <= 1e-4);
}

namespace {

// Minimal trained-ish model over a fixed graph for CAM checks.
ModelState tiny_model(const ModelConfig& cfg, int feature_dim, int classes, std::uint64_t seed) {
  return init_model(cfg, feature_dim, classes, seed);
}

ModelConfig tiny_config(AggregatorKind agg, ReadoutKind readout) {
  ModelConfig cfg;
  cfg.readout = readout;
  cfg.agg = agg;
  cfg.k = readout == ReadoutKind::SSRead ? 3 : 0;
  cfg.hidden_dim = 6;
  cfg.num_layers = 2;
  return cfg;
}

}  // namespace

TEST_CASE("CAM with the sum aggregator satisfies the score identity") {
  Rng rng(17);
  for (ReadoutKind readout : {ReadoutKind::SSRead, ReadoutKind::GRead}) {
    const ModelConfig cfg = tiny_config(AggregatorKind::Sum, readout);
    const ModelState model = tiny_model(cfg, 5, 2, 99);
    for (int rep = 0; rep < 5; ++rep) {
      const Graph g = testutil::random_graph(rng, 4 + rng.uniform_index(6), 5);
      const Matrix h = gcn_forward(normalize_adjacency(g), g.features, model.theta);
      const Matrix summary = model_summary(model, h);
      const auto s = scores(summary, model.clf);
      for (int c = 0; c < 2; ++c) {
        const CamReport report = cam(g, model, c);
        double total = 0.0;
        for (double v : report.cam) total += v;
        CHECK(std::fabs(total - (s[c] - model.clf.b(0, c))) <= 1e-9);
      }
    }
  }
}

TEST_CASE("dead encoder output gives all-zero CAM scores") {
  ModelConfig cfg = tiny_config(AggregatorKind::Sum, ReadoutKind::SSRead);
  ModelState model = tiny_model(cfg, 4, 2, 3);
  for (Matrix& w : model.theta.weights) w.fill(0.0);  // forces H = 0
  Rng rng(19);
  const Graph g = testutil::random_graph(rng, 6, 4);
  const CamReport report = cam(g, model, 1);
  for (double v : report.cam) CHECK(v == 0.0);
}

TEST_CASE("global-readout CAM applies one weight vector to every node") {
  ModelConfig cfg = tiny_config(AggregatorKind::Sum, ReadoutKind::GRead);
  const ModelState model = tiny_model(cfg, 4, 2, 7);
  Rng rng(23);
  const Graph g = testutil::random_graph(rng, 5, 4);
  const Matrix h = gcn_forward(normalize_adjacency(g), g.features, model.theta);
  const CamReport report = cam(g, model, 0);
  for (int n = 0; n < g.num_nodes; ++n)
    CHECK(std::fabs(report.cam[n] - dot(model.clf.w[0].row(0), h.row(n))) <= 1e-12);
}

TEST_CASE("CAM routing follows the aggregator for mean and max") {
  Rng rng(29);
  const Graph g = testutil::random_graph(rng, 7, 5);
  for (AggregatorKind kind :
       {AggregatorKind::Mean, AggregatorKind::Max, AggregatorKind::Attention}) {
    ModelConfig cfg = tiny_config(kind, ReadoutKind::SSRead);
    ModelState model = tiny_model(cfg, 5, 2, 31);
    if (kind == AggregatorKind::Attention) model.agg.gate = rng.normal_matrix(6, 1);
    const Matrix h = gcn_forward(normalize_adjacency(g), g.features, model.theta);
    ReadoutCache cache;
    model_summary(model, h, &cache);
    const ReadoutGrads grads = readout_backward(cache, model.clf.w[1]);
    const CamReport report = cam(g, model, 1);
    for (int n = 0; n < g.num_nodes; ++n)
      CHECK(std::fabs(report.cam[n] - dot(grads.d_h.row(n), h.row(n))) <= 1e-12);
  }
}

TEST_CASE("CAM rejects an out-of-range class") {
  const ModelConfig cfg = tiny_config(AggregatorKind::Sum, ReadoutKind::SSRead);
  const ModelState model = tiny_model(cfg, 4, 2, 5);
  Rng rng(37);
  const Graph g = testutil::random_graph(rng, 4, 4);
  CHECK_THROWS_AS(cam(g, model, 2), std::invalid_argument);
  CHECK_THROWS_AS(cam(g, model, -1), std::invalid_argument);
}
