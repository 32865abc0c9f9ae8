#pragma once

#include <vector>

#include "ssread/matrix.hpp"
#include "ssread/readout.hpp"
#include "ssread/rng.hpp"

namespace ssread {

enum class ClassifierKind { Linear, Mlp };

// Position-specific linear classifier: s_c = <Hbar, W_c> + b_c, one K x d
// weight matrix per class. The optional two-layer variant flattens Hbar,
// applies hidden ReLU units, then a linear map to class scores.
struct ClassifierParams {
  ClassifierKind kind = ClassifierKind::Linear;
  std::vector<Matrix> w;  // C matrices, K x d (linear kind)
  Matrix b;               // 1 x C biases (linear kind)
  Matrix w1, b1;          // (K*d) x m and 1 x m (mlp kind)
  Matrix w2, b2;          // m x C and 1 x C (mlp kind)
  int num_classes() const;
};

ClassifierParams init_classifier(int num_classes, int k, int dim, Rng& rng,
                                 ClassifierKind kind = ClassifierKind::Linear, int hidden = 0);

std::vector<double> scores(const Matrix& h_bar, const ClassifierParams& params);

std::vector<double> softmax(const std::vector<double>& scores);

// Stable -log softmax(scores)[label]; gradient is softmax - one_hot(label).
struct CrossEntropy {
  double loss = 0.0;
  std::vector<double> d_scores;
};

CrossEntropy cross_entropy(const std::vector<double>& scores, int label);

// Parameter gradients given d(loss)/d(scores); optionally also fills
// d(loss)/d(Hbar) for backprop into the readout.
struct ClassifierGrads {
  std::vector<Matrix> d_w;
  Matrix d_b;
  Matrix d_w1, d_b1, d_w2, d_b2;
};

ClassifierGrads classifier_backward(const Matrix& h_bar, const ClassifierParams& params,
                                    const std::vector<double>& d_scores, Matrix* d_h_bar);

// d(s_c)/d(Hbar) for a single class (the CAM direction). For the linear kind
// this is W_c itself.
Matrix score_grad_h_bar(const Matrix& h_bar, const ClassifierParams& params, int target_class);

}  // namespace ssread
