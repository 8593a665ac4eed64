// Test-only integration oracle: composite 16-point Gauss-Legendre on a
// geometric-then-doubling mesh, independent of the library's quadrature.
#ifndef JFM_TESTS_QUAD_ORACLE_HPP_
#define JFM_TESTS_QUAD_ORACLE_HPP_

#include <algorithm>
#include <cmath>

namespace jfm_tests {

template <typename F>
double composite_gl16(F&& f, double lo_start, double hi) {
  static const double x[8] = {0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
                              0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
                              0.9445750230732326, 0.9894009349916499};
  static const double w[8] = {0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
                              0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
                              0.0622535239386479, 0.0271524594117541};
  double integral = 0.0;
  double lo = lo_start;
  while (lo < hi) {
    const double up = std::min(lo * 2.0, hi);
    const double c = 0.5 * (lo + up), half = 0.5 * (up - lo);
    for (int i = 0; i < 8; ++i)
      integral += half * w[i] * (f(c - half * x[i]) + f(c + half * x[i]));
    lo = up;
  }
  return integral;
}

}  // namespace jfm_tests

#endif  // JFM_TESTS_QUAD_ORACLE_HPP_
