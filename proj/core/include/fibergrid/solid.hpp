#pragma once

// Hex8 total-Lagrangian solid kernels.

#include "fibergrid/types.hpp"

#include <array>

namespace fibergrid {

enum class SolidModel { SaintVenantKirchhoff, NeoHooke };

struct SolidMaterial {
  SolidModel model = SolidModel::SaintVenantKirchhoff;
  double youngs_modulus = 1.0;
  double poisson_ratio = 0.0;

  double lame_lambda() const {
    const double e = youngs_modulus, nu = poisson_ratio;
    return e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  }
  double lame_mu() const { return youngs_modulus / (2.0 * (1.0 + poisson_ratio)); }
  void validate() const;
};

struct StrainState {
  Mat3 F = Mat3::Identity();
  Mat3 green_lagrange = Mat3::Zero();
  Mat3 pk2 = Mat3::Zero();
  double det_f = 1.0;
};

using Voigt6 = Eigen::Matrix<double, 6, 6>;
using ElementCoords = std::array<Vec3, 8>;
using ElementVector = Eigen::Matrix<double, 24, 1>;
using ElementMatrix = Eigen::Matrix<double, 24, 24>;

struct Hex8Shape {
  std::array<double, 8> N{};
  Eigen::Matrix<double, 8, 3> dN;  // dN_a / dxi_j
};

/// Parametric coordinates of corner node a (values in {-1, +1}).
Vec3 hex8_corner(int a);
Hex8Shape hex8_shape(const Vec3& xi);
/// J_ij = dX_i / dxi_j.
Mat3 hex8_jacobian(const ElementCoords& x, const Hex8Shape& shape);
Vec3 hex8_map(const ElementCoords& x, const Vec3& xi);

/// S = dPsi/dE for the given deformation gradient. Throws InadmissibleState
/// if det F <= 0.
Mat3 pk2_stress(const SolidMaterial& mat, const Mat3& F);
/// dS/dE in Voigt notation (11, 22, 33, 12, 23, 13; engineering shears).
Voigt6 material_tangent(const SolidMaterial& mat, const Mat3& F);
double strain_energy_density(const SolidMaterial& mat, const Mat3& F);

StrainState deformation_state(const ElementCoords& x, const ElementVector& u, const Vec3& xi,
                              const SolidMaterial& mat);

struct SolidElementResult {
  ElementVector force = ElementVector::Zero();
  ElementMatrix stiffness = ElementMatrix::Zero();
};

/// Internal force and consistent tangent with an n^3 Gauss rule.
SolidElementResult solid_element_force_stiffness(const ElementCoords& x, const ElementVector& u,
                                                 const SolidMaterial& mat, int n_gauss = 2);
ElementVector solid_element_force(const ElementCoords& x, const ElementVector& u, const SolidMaterial& mat,
                                  int n_gauss = 2);
double solid_element_energy(const ElementCoords& x, const ElementVector& u, const SolidMaterial& mat,
                            int n_gauss = 2);
/// Volume average of S over the element (used for output only).
Mat3 solid_element_average_stress(const ElementCoords& x, const ElementVector& u, const SolidMaterial& mat);
double solid_element_volume(const ElementCoords& x);

/// Consistent nodal forces of a constant reference traction on one face.
ElementVector solid_face_load(const ElementCoords& x, int face, const Vec3& traction);

}  // namespace fibergrid
