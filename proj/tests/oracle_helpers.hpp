#pragma once

// Test-side oracles, independent of the library's computation paths.

#include <functional>

#include "hnnmc/common.hpp"

namespace hnnmc::testing {

inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.size());
  Vec xp = x;
  for (int i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    double f1 = f(xp);
    xp[i] = x[i] - h;
    double f2 = f(xp);
    xp[i] = x[i];
    g[i] = (f1 - f2) / (2.0 * h);
  }
  return g;
}

inline double max_rel_err(const Vec& got, const Vec& want) {
  double m = 0.0;
  for (int i = 0; i < got.size(); ++i)
    m = std::max(m, std::abs(got[i] - want[i]) / (1.0 + std::abs(want[i])));
  return m;
}

}  // namespace hnnmc::testing
