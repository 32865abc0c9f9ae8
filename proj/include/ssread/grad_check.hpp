#pragma once

#include <functional>

#include "ssread/matrix.hpp"

namespace ssread {

// Compares an analytic gradient of a scalar function against central
// differences. Returns the max over entries of
// |analytic - central| / max(1, |central|).
// Throws if the function evaluates to a non-finite value at any probe.
double grad_check(const std::function<double(const Matrix&)>& f, const Matrix& x,
                  const Matrix& analytic_grad, double step);

}  // namespace ssread
