#include "fibergrid/solid.hpp"

#include "fibergrid/quadrature.hpp"

#include <cmath>

namespace fibergrid {

namespace {

constexpr int kCornerSigns[8][3] = {{-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
                                    {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},  {-1, 1, 1}};

constexpr int kVoigt[6][2] = {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {1, 2}, {0, 2}};

template <class Fourth>
Voigt6 to_voigt(Fourth&& c) {
  Voigt6 d;
  for (int p = 0; p < 6; ++p) {
    for (int q = 0; q < 6; ++q) d(p, q) = c(kVoigt[p][0], kVoigt[p][1], kVoigt[q][0], kVoigt[q][1]);
  }
  return d;
}

Eigen::Matrix<double, 6, 1> voigt_stress(const Mat3& s) {
  Eigen::Matrix<double, 6, 1> v;
  v << s(0, 0), s(1, 1), s(2, 2), s(0, 1), s(1, 2), s(0, 2);
  return v;
}

/// Material gradients dN/dX and det(J) at one point.
struct PointKinematics {
  Eigen::Matrix<double, 8, 3> grad;
  double det_j;
};

PointKinematics point_kinematics(const ElementCoords& x, const Vec3& xi) {
  const Hex8Shape s = hex8_shape(xi);
  const Mat3 jac = hex8_jacobian(x, s);
  const double det = jac.determinant();
  if (!(det > 0.0)) throw InadmissibleState("hex8: singular reference Jacobian");
  return {s.dN * jac.inverse(), det};
}

Mat3 deformation_gradient(const Eigen::Matrix<double, 8, 3>& grad, const ElementVector& u) {
  Mat3 f = Mat3::Identity();
  for (int a = 0; a < 8; ++a) f += u.segment<3>(3 * a) * grad.row(a);
  return f;
}

template <class Fn>
void for_each_gauss_point(int n, Fn&& fn) {
  const GaussRule& g = gauss_legendre(n);
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        fn(Vec3(g.points[i], g.points[j], g.points[k]), g.weights[i] * g.weights[j] * g.weights[k]);
      }
    }
  }
}

}  // namespace

void SolidMaterial::validate() const {
  if (!(youngs_modulus > 0.0)) throw InputError("solid.material.E", "Young's modulus must be positive");
  if (!(poisson_ratio > -1.0 && poisson_ratio < 0.5)) {
    throw InputError("solid.material.nu", "Poisson ratio must lie in (-1, 0.5)");
  }
}

Vec3 hex8_corner(int a) { return Vec3(kCornerSigns[a][0], kCornerSigns[a][1], kCornerSigns[a][2]); }

Hex8Shape hex8_shape(const Vec3& xi) {
  Hex8Shape s;
  for (int a = 0; a < 8; ++a) {
    const double fx = 1.0 + kCornerSigns[a][0] * xi.x();
    const double fy = 1.0 + kCornerSigns[a][1] * xi.y();
    const double fz = 1.0 + kCornerSigns[a][2] * xi.z();
    s.N[a] = 0.125 * fx * fy * fz;
    s.dN(a, 0) = 0.125 * kCornerSigns[a][0] * fy * fz;
    s.dN(a, 1) = 0.125 * kCornerSigns[a][1] * fx * fz;
    s.dN(a, 2) = 0.125 * kCornerSigns[a][2] * fx * fy;
  }
  return s;
}

Mat3 hex8_jacobian(const ElementCoords& x, const Hex8Shape& shape) {
  Mat3 jac = Mat3::Zero();
  for (int a = 0; a < 8; ++a) jac += x[a] * shape.dN.row(a);
  return jac;
}

Vec3 hex8_map(const ElementCoords& x, const Vec3& xi) {
  const Hex8Shape s = hex8_shape(xi);
  Vec3 p = Vec3::Zero();
  for (int a = 0; a < 8; ++a) p += s.N[a] * x[a];
  return p;
}

Mat3 pk2_stress(const SolidMaterial& mat, const Mat3& F) {
  const double lam = mat.lame_lambda();
  const double mu = mat.lame_mu();
  const double det = F.determinant();
  if (!(det > 0.0)) throw InadmissibleState("solid: det(F) <= 0");
  if (mat.model == SolidModel::SaintVenantKirchhoff) {
    const Mat3 e = 0.5 * (F.transpose() * F - Mat3::Identity());
    return lam * e.trace() * Mat3::Identity() + 2.0 * mu * e;
  }
  const Mat3 c_inv = (F.transpose() * F).inverse();
  return mu * (Mat3::Identity() - c_inv) + lam * std::log(det) * c_inv;
}

Voigt6 material_tangent(const SolidMaterial& mat, const Mat3& F) {
  const double lam = mat.lame_lambda();
  const double mu = mat.lame_mu();
  if (mat.model == SolidModel::SaintVenantKirchhoff) {
    return to_voigt([&](int i, int j, int k, int l) {
      return lam * (i == j) * (k == l) + mu * ((i == k) * (j == l) + (i == l) * (j == k));
    });
  }
  const double det = F.determinant();
  if (!(det > 0.0)) throw InadmissibleState("solid: det(F) <= 0");
  const Mat3 ci = (F.transpose() * F).inverse();
  const double coef = mu - lam * std::log(det);
  return to_voigt([&](int i, int j, int k, int l) {
    return lam * ci(i, j) * ci(k, l) + coef * (ci(i, k) * ci(j, l) + ci(i, l) * ci(j, k));
  });
}

double strain_energy_density(const SolidMaterial& mat, const Mat3& F) {
  const double lam = mat.lame_lambda();
  const double mu = mat.lame_mu();
  const double det = F.determinant();
  if (!(det > 0.0)) throw InadmissibleState("solid: det(F) <= 0");
  const Mat3 c = F.transpose() * F;
  if (mat.model == SolidModel::SaintVenantKirchhoff) {
    const Mat3 e = 0.5 * (c - Mat3::Identity());
    const double tr = e.trace();
    return 0.5 * lam * tr * tr + mu * (e.array() * e.array()).sum();
  }
  const double ln_j = std::log(det);
  return 0.5 * mu * (c.trace() - 3.0) - mu * ln_j + 0.5 * lam * ln_j * ln_j;
}

StrainState deformation_state(const ElementCoords& x, const ElementVector& u, const Vec3& xi,
                              const SolidMaterial& mat) {
  const PointKinematics pk = point_kinematics(x, xi);
  StrainState st;
  st.F = deformation_gradient(pk.grad, u);
  st.det_f = st.F.determinant();
  st.green_lagrange = 0.5 * (st.F.transpose() * st.F - Mat3::Identity());
  st.pk2 = pk2_stress(mat, st.F);
  return st;
}

SolidElementResult solid_element_force_stiffness(const ElementCoords& x, const ElementVector& u,
                                                 const SolidMaterial& mat, int n_gauss) {
  SolidElementResult out;
  Eigen::Matrix<double, 6, 24> b;
  for_each_gauss_point(n_gauss, [&](const Vec3& xi, double w) {
    const PointKinematics pk = point_kinematics(x, xi);
    const Mat3 f = deformation_gradient(pk.grad, u);
    const Mat3 s = pk2_stress(mat, f);
    const Voigt6 d = material_tangent(mat, f);
    for (int a = 0; a < 8; ++a) {
      const auto g = pk.grad.row(a);
      for (int i = 0; i < 3; ++i) {
        b(0, 3 * a + i) = f(i, 0) * g(0);
        b(1, 3 * a + i) = f(i, 1) * g(1);
        b(2, 3 * a + i) = f(i, 2) * g(2);
        b(3, 3 * a + i) = f(i, 0) * g(1) + f(i, 1) * g(0);
        b(4, 3 * a + i) = f(i, 1) * g(2) + f(i, 2) * g(1);
        b(5, 3 * a + i) = f(i, 0) * g(2) + f(i, 2) * g(0);
      }
    }
    const double dv = w * pk.det_j;
    out.force.noalias() += dv * b.transpose() * voigt_stress(s);
    out.stiffness.noalias() += dv * b.transpose() * d * b;
    const Eigen::Matrix<double, 8, 8> geo = pk.grad * s * pk.grad.transpose();
    for (int a = 0; a < 8; ++a) {
      for (int c = 0; c < 8; ++c) out.stiffness.block<3, 3>(3 * a, 3 * c).diagonal().array() += dv * geo(a, c);
    }
  });
  return out;
}

ElementVector solid_element_force(const ElementCoords& x, const ElementVector& u, const SolidMaterial& mat,
                                  int n_gauss) {
  ElementVector force = ElementVector::Zero();
  for_each_gauss_point(n_gauss, [&](const Vec3& xi, double w) {
    const PointKinematics pk = point_kinematics(x, xi);
    const Mat3 f = deformation_gradient(pk.grad, u);
    const Mat3 p = f * pk2_stress(mat, f);  // first Piola-Kirchhoff
    for (int a = 0; a < 8; ++a) force.segment<3>(3 * a) += w * pk.det_j * p * pk.grad.row(a).transpose();
  });
  return force;
}

double solid_element_energy(const ElementCoords& x, const ElementVector& u, const SolidMaterial& mat,
                            int n_gauss) {
  double energy = 0.0;
  for_each_gauss_point(n_gauss, [&](const Vec3& xi, double w) {
    const PointKinematics pk = point_kinematics(x, xi);
    energy += w * pk.det_j * strain_energy_density(mat, deformation_gradient(pk.grad, u));
  });
  return energy;
}

Mat3 solid_element_average_stress(const ElementCoords& x, const ElementVector& u, const SolidMaterial& mat) {
  Mat3 acc = Mat3::Zero();
  double vol = 0.0;
  for_each_gauss_point(2, [&](const Vec3& xi, double w) {
    const PointKinematics pk = point_kinematics(x, xi);
    acc += w * pk.det_j * pk2_stress(mat, deformation_gradient(pk.grad, u));
    vol += w * pk.det_j;
  });
  return acc / vol;
}

double solid_element_volume(const ElementCoords& x) {
  double vol = 0.0;
  for_each_gauss_point(2, [&](const Vec3& xi, double w) { vol += w * point_kinematics(x, xi).det_j; });
  return vol;
}

ElementVector solid_face_load(const ElementCoords& x, int face, const Vec3& traction) {
  const int fixed_dir = face / 2;
  const double fixed_val = (face % 2 == 0) ? -1.0 : 1.0;
  const int d1 = (fixed_dir + 1) % 3;
  const int d2 = (fixed_dir + 2) % 3;
  const GaussRule& g = gauss_legendre(2);
  ElementVector f = ElementVector::Zero();
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      Vec3 xi;
      xi[fixed_dir] = fixed_val;
      xi[d1] = g.points[i];
      xi[d2] = g.points[j];
      const Hex8Shape s = hex8_shape(xi);
      const Mat3 jac = hex8_jacobian(x, s);
      const double da = jac.col(d1).cross(jac.col(d2)).norm() * g.weights[i] * g.weights[j];
      for (int a = 0; a < 8; ++a) f.segment<3>(3 * a) += s.N[a] * da * traction;
    }
  }
  return f;
}

}  // namespace fibergrid
