#include "ssread/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace ssread {

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, double beta1, double beta2,
                     double epsilon)
    : kind_(kind), lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {
  if (lr_ <= 0.0) throw std::invalid_argument("Optimizer: learning rate must be positive");
}

int Optimizer::add_slot(int rows, int cols) {
  slots_.push_back({Matrix(rows, cols), Matrix(rows, cols), 0});
  return static_cast<int>(slots_.size()) - 1;
}

void Optimizer::step(int slot, Matrix& param, const Matrix& grad) {
  if (slot < 0 || slot >= static_cast<int>(slots_.size()))
    throw std::invalid_argument("Optimizer::step: unknown slot");
  if (!param.same_shape(grad)) throw std::invalid_argument("Optimizer::step: shape mismatch");

  if (kind_ == OptimizerKind::GradientDescent) {
    axpy(-lr_, grad, param);
    return;
  }

  Slot& s = slots_[slot];
  if (!param.same_shape(s.m)) throw std::invalid_argument("Optimizer::step: slot shape mismatch");
  s.t += 1;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(s.t));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(s.t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad.data()[i];
    double& m = s.m.data()[i];
    double& v = s.v.data()[i];
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g * g;
    const double mhat = m / bc1;
    const double vhat = v / bc2;
    param.data()[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
  }
}

}  // namespace ssread
