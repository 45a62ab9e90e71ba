#pragma once

#include <vector>

namespace fibergrid {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> points;
  std::vector<double> weights;
  int size() const { return static_cast<int>(points.size()); }
};

/// Returns the n-point rule, computed once per n and cached. Thread safe.
const GaussRule& gauss_legendre(int n);

}  // namespace fibergrid
