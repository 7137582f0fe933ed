#pragma once

#include <sstream>
#include <string>

namespace dqm::detail {

/// Step length for a damped Newton iteration. The full step is taken when it
/// passes the Armijo test on `merit` or, once merit differences are lost to
/// rounding, when it still shrinks the gradient residual. Otherwise halves
/// until Armijo holds; returns 0 when the search stalls.
template <class Merit, class Residual>
double line_search(Merit merit, double m0, double slope, Residual full_step_residual,
                   double residual) {
  constexpr double kArmijo = 1e-4;
  if (merit(1.0) <= m0 + kArmijo * slope) return 1.0;
  if (full_step_residual() < residual) return 1.0;
  for (double t = 0.5; t > 1e-10; t *= 0.5)
    if (merit(t) <= m0 + kArmijo * t * slope) return t;
  return 0.0;
}

inline std::string sci(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

}  // namespace dqm::detail
