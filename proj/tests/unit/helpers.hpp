#pragma once

#include "fmrg/types.hpp"

#include <initializer_list>

namespace fmrg::test {

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline Vector scalar(double x) { return Vector::Constant(1, x); }

inline Matrix mat(int rows, int cols, std::initializer_list<double> xs) {
  Matrix m(rows, cols);
  auto it = xs.begin();
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = *it++;
  return m;
}

// Independent Gaussian oracles, written out from the conditioning formulas
// rather than through the library.
inline double gauss_C(double s1, double t) { return (1 - t) * (1 - t) + t * t * s1 * s1; }

}  // namespace fmrg::test
