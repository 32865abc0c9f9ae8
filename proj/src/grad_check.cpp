#include "ssread/grad_check.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ssread {

double grad_check(const std::function<double(const Matrix&)>& f, const Matrix& x,
                  const Matrix& analytic_grad, double step) {
  if (!x.same_shape(analytic_grad))
    throw std::invalid_argument("grad_check: gradient shape mismatch");
  if (step < 1e-7 || step > 1e-4)
    throw std::invalid_argument("grad_check: step must be in [1e-7, 1e-4]");

  Matrix probe = x;
  double max_err = 0.0;
  for (int r = 0; r < x.rows(); ++r) {
    for (int c = 0; c < x.cols(); ++c) {
      const double saved = probe(r, c);
      probe(r, c) = saved + step;
      const double f_plus = f(probe);
      probe(r, c) = saved - step;
      const double f_minus = f(probe);
      probe(r, c) = saved;
      if (!std::isfinite(f_plus) || !std::isfinite(f_minus))
        throw std::runtime_error("grad_check: non-finite function value at entry (" +
                                 std::to_string(r) + "," + std::to_string(c) + ")");
      const double central = (f_plus - f_minus) / (2.0 * step);
      const double err = std::fabs(analytic_grad(r, c) - central) / std::max(1.0, std::fabs(central));
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

}  // namespace ssread
