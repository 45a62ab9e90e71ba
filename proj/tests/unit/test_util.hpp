#pragma once

#include "fibergrid/model.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace fibergrid::testing {

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(20240611);
  return gen;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }

template <typename V>
V random_vector(double scale) {
  V v;
  for (int i = 0; i < v.size(); ++i) v[i] = uniform(-scale, scale);
  return v;
}

inline Eigen::VectorXd random_vector(int n, double scale) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = uniform(-scale, scale);
  return v;
}

inline Mat3 rotation(const Vec3& axis, double angle) { return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix(); }

inline std::array<Vec3, 8> unit_cube() {
  std::array<Vec3, 8> x;
  const SolidMesh m = build_solid_grid(1, 1, 1, Vec3::Ones());
  for (int a = 0; a < 8; ++a) x[a] = m.nodes[m.elements[0][a]];
  return x;
}

/// Taylor remainder slope: |f(x+h v) - f(x) - h g.v| ~ h^2. Returns the
/// log-log slope between consecutive h and the smallest remainder.
inline double taylor_slope(const std::function<double(double)>& remainder, double h0 = 1e-2) {
  std::vector<double> hs{h0, h0 / 2, h0 / 4, h0 / 8};
  std::vector<double> rs;
  for (double h : hs) rs.push_back(remainder(h));
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const double x = std::log(hs[i]), y = std::log(rs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(hs.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Central-difference Jacobian of a vector function.
inline Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd j(f0.size(), x.size());
  for (int i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    j.col(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return j;
}

/// Max entry deviation relative to the largest entry of the reference.
inline double relative_deviation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& ref) {
  return (a - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff();
}

/// One hex8 unit cube with a single straight fiber, mortar-linear, penalty 1e4.
inline std::string small_deck(const std::string& extra_solid = "", const std::string& coupling = "\"mortar-linear\"",
                              double penalty = 1e4) {
  return R"({
  "solid": {
    "grid": {"n": [1, 1, 1], "dims": [1, 1, 1], "origin": [0, 0, 0]},
    "material": {"model": "svk", "E": 10, "nu": 0.3},
    "node_sets": {"bottom": {"box": [[0, 0, 0], [1, 1, 0]]}},
    "dirichlet": [{"set": "bottom", "dofs": [true, true, true], "values": [0, 0, 0]}])" +
         extra_solid + R"(
  },
  "beams": [{
    "curve": {"type": "line", "start": [0.2, 0.3, 0.4], "end": [0.8, 0.6, 0.7]},
    "n_elements": 1, "E": 100, "radius": 0.05
  }],
  "coupling": {"scheme": )" +
         coupling + R"(, "integration": {"type": "segment", "gauss_points": 6}, "penalty": )" +
         std::to_string(penalty) + R"(}
})";
}

}  // namespace fibergrid::testing
