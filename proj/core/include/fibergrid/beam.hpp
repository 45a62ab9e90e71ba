#pragma once

// C1 Hermite centerline kinematics and the torsion-free beam element.
//
// Element DOF layout (12): [r_1, t_1, r_2, t_2], where r is the centerline
// position and t the tangent dr/ds at the node. The tangent shape functions
// carry the element length, so nodal tangents are dimensionless.

#include "fibergrid/mesh.hpp"
#include "fibergrid/types.hpp"

#include <array>

namespace fibergrid {

using BeamVector = Eigen::Matrix<double, 12, 1>;
using BeamMatrix = Eigen::Matrix<double, 12, 12>;

struct BeamSection {
  double axial_stiffness = 0.0;    // EA
  double bending_stiffness = 0.0;  // EI

  static BeamSection of(const BeamMesh& mesh) {
    return {mesh.youngs_modulus * mesh.section.area, mesh.youngs_modulus * mesh.section.inertia};
  }
};

/// Hermite basis in the order (H^r_1, H^t_1, H^r_2, H^t_2) with first and
/// second derivatives with respect to arc length s (ds = L/2 dxi).
struct HermiteShape {
  std::array<double, 4> value{};
  std::array<double, 4> ds{};
  std::array<double, 4> ds2{};
};

HermiteShape hermite_shape(double xi, double length);

struct CenterlinePoint {
  Vec3 r = Vec3::Zero();
  Vec3 dr = Vec3::Zero();   // r'
  Vec3 ddr = Vec3::Zero();  // r''
};

/// Interpolates r, r', r'' from a 12-vector of nodal values.
CenterlinePoint centerline_eval(const BeamVector& q, double length, double xi);

/// Reference nodal vector [X_1, T_1, X_2, T_2] of element e.
BeamVector beam_reference_dofs(const BeamMesh& mesh, int e);

/// Frenet-Serret curvature vector r' x r'' / |r'|^2.
Vec3 curvature_vector(const CenterlinePoint& p);

struct BeamElementResult {
  BeamVector force = BeamVector::Zero();
  BeamMatrix stiffness = BeamMatrix::Zero();
  double energy = 0.0;
};

/// Torsion-free element: energy 1/2 int EA eps^2 + EI |kappa - kappa_0|^2 ds
/// with eps = |r'|/|r_0'| - 1, measured against the discretized reference
/// geometry. Returns the exact gradient and Hessian w.r.t. the displacements.
BeamElementResult tf_element_force_stiffness(const BeamVector& q_ref, const BeamVector& disp, double length,
                                             const BeamSection& section, int n_gauss = 4);
double tf_element_energy(const BeamVector& q_ref, const BeamVector& disp, double length,
                         const BeamSection& section, int n_gauss = 4);

struct NodalMomentLoad {
  Vec3 force = Vec3::Zero();     // generalized force on the tangent DOFs
  Mat3 stiffness = Mat3::Zero();  // d force / d t
};

/// Work-conjugate load of a nodal moment m on tangent t:
/// f_t = (m x t)/|t|^2. Throws InadmissibleState for a zero tangent.
NodalMomentLoad apply_nodal_moment(const Vec3& tangent, const Vec3& moment);

}  // namespace fibergrid
