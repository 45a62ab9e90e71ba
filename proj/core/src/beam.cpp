#include "fibergrid/beam.hpp"

#include "fibergrid/quadrature.hpp"

#include <cmath>

namespace fibergrid {

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Energy density and its first/second derivatives w.r.t. (r', r'').
struct PointEnergy {
  double psi = 0.0;
  Vec6 grad = Vec6::Zero();
  Mat6 hess = Mat6::Zero();
};

PointEnergy point_energy(const Vec3& a, const Vec3& b, const Vec3& a0, const Vec3& b0, const BeamSection& sec,
                         bool want_hessian) {
  PointEnergy out;
  const double na = a.norm();
  if (!(na > 0.0)) throw InadmissibleState("beam: degenerate centerline tangent");
  const double n0 = a0.norm();

  // Axial part: 1/2 EA (|a|/n0 - 1)^2.
  const double ea = sec.axial_stiffness;
  const double eps = na / n0 - 1.0;
  const Vec3 ahat = a / na;
  out.psi += 0.5 * ea * eps * eps;
  out.grad.head<3>() += ea * eps / n0 * ahat;
  if (want_hessian) {
    out.hess.topLeftCorner<3, 3>() +=
        ea * (ahat * ahat.transpose() / (n0 * n0) + eps / (n0 * na) * (Mat3::Identity() - ahat * ahat.transpose()));
  }

  // Bending part: 1/2 EI |kappa - kappa_0|^2 with kappa = (a x b)/m, m = a.a.
  // |kappa|^2 = P/m - Q^2/m^2 (P = b.b, Q = a.b) and kappa_0.kappa = v/m
  // with v = kappa_0.(a x b).
  const double ei = sec.bending_stiffness;
  const Vec3 k0 = a0.cross(b0) / a0.squaredNorm();
  const double m = a.squaredNorm();
  const double p = b.squaredNorm();
  const double q = a.dot(b);
  const double v = k0.dot(a.cross(b));
  const double m2 = m * m, m3 = m2 * m, m4 = m3 * m;

  const double t1 = p / m - q * q / m2;
  const double t2 = v / m;
  out.psi += 0.5 * ei * (t1 - 2.0 * t2 + k0.squaredNorm());

  const double alpha = -2.0 * p / m2 + 4.0 * q * q / m3;
  const double beta = -2.0 * q / m2;
  const Vec3 dt1_da = alpha * a + beta * b;
  const Vec3 dt1_db = 2.0 * b / m - 2.0 * q * a / m2;
  const Vec3 bxk = b.cross(k0);
  const Vec3 kxa = k0.cross(a);
  const Vec3 dt2_da = bxk / m - 2.0 * v * a / m2;
  const Vec3 dt2_db = kxa / m;
  out.grad.head<3>() += 0.5 * ei * (dt1_da - 2.0 * dt2_da);
  out.grad.tail<3>() += 0.5 * ei * (dt1_db - 2.0 * dt2_db);

  if (want_hessian) {
    const Mat3 id = Mat3::Identity();
    const Vec3 dalpha_da = 8.0 * p * a / m3 + 8.0 * q * b / m3 - 24.0 * q * q * a / m4;
    const Vec3 dbeta_da = -2.0 * b / m2 + 8.0 * q * a / m3;
    const Vec3 dalpha_db = -4.0 * b / m2 + 8.0 * q * a / m3;
    const Vec3 dbeta_db = -2.0 * a / m2;
    const Mat3 h1_aa = alpha * id + a * dalpha_da.transpose() + b * dbeta_da.transpose();
    const Mat3 h1_ab = a * dalpha_db.transpose() + beta * id + b * dbeta_db.transpose();
    const Mat3 h1_bb = 2.0 * id / m - 2.0 * a * a.transpose() / m2;

    const Mat3 h2_aa = -2.0 * (bxk * a.transpose() + a * bxk.transpose()) / m2 - 2.0 * v * id / m2 +
                       8.0 * v * a * a.transpose() / m3;
    const Mat3 h2_ab = -skew(k0) / m - 2.0 * a * kxa.transpose() / m2;

    const Mat3 h_aa = 0.5 * ei * (h1_aa - 2.0 * h2_aa);
    const Mat3 h_ab = 0.5 * ei * (h1_ab - 2.0 * h2_ab);
    const Mat3 h_bb = 0.5 * ei * h1_bb;
    out.hess.topLeftCorner<3, 3>() += h_aa;
    out.hess.topRightCorner<3, 3>() += h_ab;
    out.hess.bottomLeftCorner<3, 3>() += h_ab.transpose();
    out.hess.bottomRightCorner<3, 3>() += h_bb;
  }
  return out;
}

/// 6x12 operator mapping the nodal vector to (r', r'').
Eigen::Matrix<double, 6, 12> derivative_operator(const HermiteShape& h) {
  Eigen::Matrix<double, 6, 12> op = Eigen::Matrix<double, 6, 12>::Zero();
  for (int i = 0; i < 4; ++i) {
    op.block<3, 3>(0, 3 * i).diagonal().setConstant(h.ds[i]);
    op.block<3, 3>(3, 3 * i).diagonal().setConstant(h.ds2[i]);
  }
  return op;
}

BeamElementResult integrate(const BeamVector& q_ref, const BeamVector& disp, double length,
                            const BeamSection& section, int n_gauss, bool want_stiffness) {
  BeamElementResult out;
  const BeamVector q = q_ref + disp;
  const GaussRule& g = gauss_legendre(n_gauss);
  const double jac = 0.5 * length;
  for (int i = 0; i < g.size(); ++i) {
    const HermiteShape h = hermite_shape(g.points[i], length);
    const auto op = derivative_operator(h);
    const Vec6 z = op * q;
    const Vec6 z0 = op * q_ref;
    const PointEnergy pe = point_energy(z.head<3>(), z.tail<3>(), z0.head<3>(), z0.tail<3>(), section, want_stiffness);
    const double w = g.weights[i] * jac;
    out.energy += w * pe.psi;
    out.force.noalias() += w * op.transpose() * pe.grad;
    if (want_stiffness) out.stiffness.noalias() += w * op.transpose() * pe.hess * op;
  }
  return out;
}

}  // namespace

HermiteShape hermite_shape(double xi, double length) {
  const double u = 0.5 * (xi + 1.0);
  const double u2 = u * u, u3 = u2 * u;
  const double l = length;
  HermiteShape h;
  h.value = {2.0 * u3 - 3.0 * u2 + 1.0, l * (u3 - 2.0 * u2 + u), -2.0 * u3 + 3.0 * u2, l * (u3 - u2)};
  h.ds = {(6.0 * u2 - 6.0 * u) / l, 3.0 * u2 - 4.0 * u + 1.0, (-6.0 * u2 + 6.0 * u) / l, 3.0 * u2 - 2.0 * u};
  h.ds2 = {(12.0 * u - 6.0) / (l * l), (6.0 * u - 4.0) / l, (-12.0 * u + 6.0) / (l * l), (6.0 * u - 2.0) / l};
  return h;
}

CenterlinePoint centerline_eval(const BeamVector& q, double length, double xi) {
  const HermiteShape h = hermite_shape(xi, length);
  CenterlinePoint p;
  for (int i = 0; i < 4; ++i) {
    const auto qi = q.segment<3>(3 * i);
    p.r += h.value[i] * qi;
    p.dr += h.ds[i] * qi;
    p.ddr += h.ds2[i] * qi;
  }
  return p;
}

BeamVector beam_reference_dofs(const BeamMesh& mesh, int e) {
  BeamVector q;
  const auto& el = mesh.elements[e];
  for (int n = 0; n < 2; ++n) {
    q.segment<3>(6 * n) = mesh.nodes[el.nodes[n]].position;
    q.segment<3>(6 * n + 3) = mesh.nodes[el.nodes[n]].tangent;
  }
  return q;
}

Vec3 curvature_vector(const CenterlinePoint& p) { return p.dr.cross(p.ddr) / p.dr.squaredNorm(); }

BeamElementResult tf_element_force_stiffness(const BeamVector& q_ref, const BeamVector& disp, double length,
                                             const BeamSection& section, int n_gauss) {
  return integrate(q_ref, disp, length, section, n_gauss, true);
}

double tf_element_energy(const BeamVector& q_ref, const BeamVector& disp, double length,
                         const BeamSection& section, int n_gauss) {
  return integrate(q_ref, disp, length, section, n_gauss, false).energy;
}

NodalMomentLoad apply_nodal_moment(const Vec3& tangent, const Vec3& moment) {
  const double t2 = tangent.squaredNorm();
  if (!(t2 > 0.0)) throw InadmissibleState("nodal moment: zero tangent");
  NodalMomentLoad out;
  const Vec3 mxt = moment.cross(tangent);
  out.force = mxt / t2;
  out.stiffness = skew(moment) / t2 - 2.0 * mxt * tangent.transpose() / (t2 * t2);
  return out;
}

}  // namespace fibergrid
