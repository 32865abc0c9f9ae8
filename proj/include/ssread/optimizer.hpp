#pragma once

#include <cstdint>
#include <vector>

#include "ssread/matrix.hpp"

namespace ssread {

enum class OptimizerKind { GradientDescent, Adam };

// First-order optimizer with per-tensor state. Each learnable tensor is
// registered once as a slot; step() applies one update to it.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate)
      : Optimizer(kind, learning_rate, 0.9, 0.999, 1e-8) {}
  Optimizer(OptimizerKind kind, double learning_rate, double beta1, double beta2, double epsilon);

  int add_slot(int rows, int cols);
  void step(int slot, Matrix& param, const Matrix& grad);

  OptimizerKind kind() const { return kind_; }
  double learning_rate() const { return lr_; }

 private:
  struct Slot {
    Matrix m, v;
    std::int64_t t = 0;
  };
  OptimizerKind kind_;
  double lr_, beta1_, beta2_, eps_;
  std::vector<Slot> slots_;
};

}  // namespace ssread
