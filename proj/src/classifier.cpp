#include "ssread/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ssread {

namespace {

Matrix flatten_row(const Matrix& m) {
  Matrix v(1, static_cast<int>(m.size()));
  std::copy(m.data(), m.data() + m.size(), v.data());
  return v;
}

struct MlpTrace {
  Matrix v, z1, h1;
};

MlpTrace mlp_forward(const Matrix& h_bar, const ClassifierParams& p) {
  MlpTrace t;
  t.v = flatten_row(h_bar);
  if (t.v.cols() != p.w1.rows())
    throw std::invalid_argument("scores: flattened input does not match classifier");
  t.z1 = matmul(t.v, p.w1) + p.b1;
  t.h1 = t.z1;
  for (std::size_t i = 0; i < t.h1.size(); ++i)
    if (t.h1.data()[i] < 0.0) t.h1.data()[i] = 0.0;
  return t;
}

}  // namespace

int ClassifierParams::num_classes() const {
  return kind == ClassifierKind::Linear ? static_cast<int>(w.size()) : w2.cols();
}

ClassifierParams init_classifier(int num_classes, int k, int dim, Rng& rng, ClassifierKind kind,
                                 int hidden) {
  if (num_classes < 2) throw std::invalid_argument("init_classifier: need at least 2 classes");
  ClassifierParams p;
  p.kind = kind;
  if (kind == ClassifierKind::Linear) {
    for (int c = 0; c < num_classes; ++c) p.w.push_back(rng.glorot_matrix(k, dim));
    p.b = Matrix(1, num_classes);
  } else {
    if (hidden < 1) hidden = dim;
    p.w1 = rng.glorot_matrix(k * dim, hidden);
    p.b1 = Matrix(1, hidden);
    p.w2 = rng.glorot_matrix(hidden, num_classes);
    p.b2 = Matrix(1, num_classes);
  }
  return p;
}

std::vector<double> scores(const Matrix& h_bar, const ClassifierParams& params) {
  if (params.kind == ClassifierKind::Linear) {
    std::vector<double> s(params.w.size());
    for (std::size_t c = 0; c < params.w.size(); ++c) {
      if (!params.w[c].same_shape(h_bar))
        throw std::invalid_argument("scores: summary shape does not match classifier");
      double acc = 0.0;
      for (std::size_t i = 0; i < h_bar.size(); ++i)
        acc += h_bar.data()[i] * params.w[c].data()[i];
      s[c] = acc + params.b(0, static_cast<int>(c));
    }
    return s;
  }
  const MlpTrace t = mlp_forward(h_bar, params);
  const Matrix out = matmul(t.h1, params.w2) + params.b2;
  return {out.data(), out.data() + out.size()};
}

std::vector<double> softmax(const std::vector<double>& scores) {
  const double m = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(scores.size());
  double z = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    p[i] = std::exp(scores[i] - m);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

CrossEntropy cross_entropy(const std::vector<double>& scores, int label) {
  if (label < 0 || label >= static_cast<int>(scores.size()))
    throw std::invalid_argument("cross_entropy: label out of range");
  CrossEntropy ce;
  ce.d_scores = softmax(scores);
  // -log softmax[label], computed from the stable probabilities
  ce.loss = -std::log(std::max(ce.d_scores[label], 1e-300));
  ce.d_scores[label] -= 1.0;
  return ce;
}

ClassifierGrads classifier_backward(const Matrix& h_bar, const ClassifierParams& params,
                                    const std::vector<double>& d_scores, Matrix* d_h_bar) {
  if (static_cast<int>(d_scores.size()) != params.num_classes())
    throw std::invalid_argument("classifier_backward: score gradient length mismatch");
  ClassifierGrads g;
  if (params.kind == ClassifierKind::Linear) {
    if (d_h_bar) *d_h_bar = Matrix(h_bar.rows(), h_bar.cols());
    g.d_b = Matrix(1, static_cast<int>(params.w.size()));
    for (std::size_t c = 0; c < params.w.size(); ++c) {
      g.d_w.push_back(d_scores[c] * h_bar);
      g.d_b(0, static_cast<int>(c)) = d_scores[c];
      if (d_h_bar) axpy(d_scores[c], params.w[c], *d_h_bar);
    }
    return g;
  }

  const MlpTrace t = mlp_forward(h_bar, params);
  Matrix ds(1, static_cast<int>(d_scores.size()),
            std::vector<double>(d_scores.begin(), d_scores.end()));
  g.d_w2 = matmul(transpose(t.h1), ds);
  g.d_b2 = ds;
  Matrix dz1 = matmul(ds, transpose(params.w2));
  for (std::size_t i = 0; i < dz1.size(); ++i)
    if (t.z1.data()[i] <= 0.0) dz1.data()[i] = 0.0;
  g.d_w1 = matmul(transpose(t.v), dz1);
  g.d_b1 = dz1;
  if (d_h_bar) {
    const Matrix dv = matmul(dz1, transpose(params.w1));
    *d_h_bar = Matrix(h_bar.rows(), h_bar.cols(),
                      std::vector<double>(dv.data(), dv.data() + dv.size()));
  }
  return g;
}

Matrix score_grad_h_bar(const Matrix& h_bar, const ClassifierParams& params, int target_class) {
  if (target_class < 0 || target_class >= params.num_classes())
    throw std::invalid_argument("score_grad_h_bar: class index out of range");
  if (params.kind == ClassifierKind::Linear) return params.w[target_class];
  std::vector<double> one_hot(params.num_classes(), 0.0);
  one_hot[target_class] = 1.0;
  Matrix d_h_bar;
  classifier_backward(h_bar, params, one_hot, &d_h_bar);
  return d_h_bar;
}

}  // namespace ssread
