#include "fibergrid/solid.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace fibergrid;
using namespace fibergrid::testing;

namespace {

const SolidMaterial kSvk{SolidModel::SaintVenantKirchhoff, 10.0, 0.3};
const SolidMaterial kNeo{SolidModel::NeoHooke, 10.0, 0.3};

ElementCoords distorted_hex() {
  ElementCoords x = unit_cube();
  for (auto& p : x) p += random_vector<Vec3>(0.1);
  return x;
}

ElementVector displacement_from(const ElementCoords& x, const std::function<Vec3(const Vec3&)>& map) {
  ElementVector u;
  for (int a = 0; a < 8; ++a) u.segment<3>(3 * a) = map(x[a]) - x[a];
  return u;
}

}  // namespace

TEST(Hex8Shape, CenterValues) {
  const Hex8Shape s = hex8_shape(Vec3::Zero());
  for (double n : s.N) EXPECT_DOUBLE_EQ(n, 0.125);
}

TEST(Hex8Shape, KroneckerAtCorners) {
  for (int a = 0; a < 8; ++a) {
    const Hex8Shape s = hex8_shape(hex8_corner(a));
    for (int b = 0; b < 8; ++b) EXPECT_DOUBLE_EQ(s.N[b], a == b ? 1.0 : 0.0);
  }
  EXPECT_EQ(hex8_corner(0), Vec3(-1, -1, -1));
}

TEST(Hex8Shape, PartitionOfUnity) {
  const Hex8Shape s = hex8_shape(Vec3(0.3, -0.2, 0.7));
  double sum = 0.0;
  for (double n : s.N) sum += n;
  EXPECT_NEAR(sum, 1.0, 1e-15);
  EXPECT_LT(s.dN.colwise().sum().norm(), 1e-15);
  for (int k = 0; k < 20; ++k) {
    const Hex8Shape r = hex8_shape(random_vector<Vec3>(1.0));
    double t = 0.0;
    for (double n : r.N) t += n;
    EXPECT_NEAR(t, 1.0, 1e-15);
    EXPECT_LT(r.dN.colwise().sum().norm(), 1e-15);
  }
}

TEST(Hex8Shape, GradientsMatchFiniteDifferences) {
  const Vec3 xi = random_vector<Vec3>(0.9);
  const Hex8Shape s = hex8_shape(xi);
  const double h = 1e-6;
  for (int j = 0; j < 3; ++j) {
    Vec3 p = xi, m = xi;
    p[j] += h;
    m[j] -= h;
    const Hex8Shape sp = hex8_shape(p), sm = hex8_shape(m);
    for (int a = 0; a < 8; ++a) EXPECT_NEAR(s.dN(a, j), (sp.N[a] - sm.N[a]) / (2 * h), 1e-9);
  }
}

TEST(DeformationState, ReferenceState) {
  const StrainState st = deformation_state(unit_cube(), ElementVector::Zero(), Vec3(0.1, 0.2, -0.3), kNeo);
  EXPECT_LT((st.F - Mat3::Identity()).norm(), 1e-15);
  EXPECT_LT(st.green_lagrange.norm(), 1e-15);
  EXPECT_LT(st.pk2.norm(), 1e-15);
}

TEST(DeformationState, UniformStretchSvkNuZero) {
  const SolidMaterial mat{SolidModel::SaintVenantKirchhoff, 7.0, 0.0};
  const ElementCoords x = unit_cube();
  const ElementVector u = displacement_from(x, [](const Vec3& p) { return Vec3(2 * p.x(), p.y(), p.z()); });
  const StrainState st = deformation_state(x, u, Vec3(0.4, -0.1, 0.2), mat);
  Mat3 e = Mat3::Zero();
  e(0, 0) = 1.5;
  EXPECT_LT((st.green_lagrange - e).norm(), 1e-14);
  EXPECT_LT((st.pk2 - 7.0 * e).norm(), 1e-13);
}

TEST(DeformationState, RigidRotationIsStrainFree) {
  const ElementCoords x = distorted_hex();
  const Mat3 r = rotation(Vec3(1, 2, -0.5), 0.8);
  const Vec3 c(0.3, -1.0, 2.0);
  const ElementVector u = displacement_from(x, [&](const Vec3& p) { return Vec3(r * p + c); });
  for (const auto& mat : {kSvk, kNeo}) {
    const StrainState st = deformation_state(x, u, Vec3(0.2, 0.5, -0.7), mat);
    EXPECT_LT(st.green_lagrange.norm(), 1e-14);
    EXPECT_LT(st.pk2.norm(), 1e-12);
  }
}

TEST(DeformationState, SymmetricStressAndStrain) {
  const ElementCoords x = distorted_hex();
  const ElementVector u = random_vector<ElementVector>(0.1);
  for (const auto& mat : {kSvk, kNeo}) {
    const StrainState st = deformation_state(x, u, random_vector<Vec3>(1.0), mat);
    EXPECT_LE((st.green_lagrange - st.green_lagrange.transpose()).norm(), 1e-14 * st.green_lagrange.norm());
    EXPECT_LE((st.pk2 - st.pk2.transpose()).norm(), 1e-14 * st.pk2.norm());
  }
}

TEST(DeformationState, InvertedElementIsInadmissible) {
  const ElementCoords x = unit_cube();
  const ElementVector u = displacement_from(x, [](const Vec3& p) { return Vec3(-p.x(), p.y(), p.z()); });
  EXPECT_THROW(deformation_state(x, u, Vec3::Zero(), kNeo), InadmissibleState);
  EXPECT_THROW(solid_element_force_stiffness(x, u, kSvk), InadmissibleState);
}

TEST(SolidElement, ZeroStateGivesLinearStiffness) {
  // Linear elasticity stiffness assembled independently from B^T C B.
  const ElementCoords x = distorted_hex();
  const SolidElementResult r = solid_element_force_stiffness(x, ElementVector::Zero(), kSvk);
  EXPECT_LT(r.force.norm(), 1e-15);
  const double lam = kSvk.lame_lambda(), mu = kSvk.lame_mu();
  Eigen::Matrix<double, 6, 6> c = Eigen::Matrix<double, 6, 6>::Zero();
  c.topLeftCorner<3, 3>().setConstant(lam);
  c.topLeftCorner<3, 3>() += 2 * mu * Mat3::Identity();
  c.bottomRightCorner<3, 3>() = mu * Mat3::Identity();
  ElementMatrix k = ElementMatrix::Zero();
  const double g = 1.0 / std::sqrt(3.0);
  for (int i = 0; i < 8; ++i) {
    const Vec3 xi = g * hex8_corner(i);
    const Hex8Shape s = hex8_shape(xi);
    const Mat3 jac = hex8_jacobian(x, s);
    const Eigen::Matrix<double, 8, 3> dx = s.dN * jac.inverse();
    Eigen::Matrix<double, 6, 24> b = Eigen::Matrix<double, 6, 24>::Zero();
    for (int a = 0; a < 8; ++a) {
      b(0, 3 * a) = dx(a, 0);
      b(1, 3 * a + 1) = dx(a, 1);
      b(2, 3 * a + 2) = dx(a, 2);
      b(3, 3 * a) = dx(a, 1);
      b(3, 3 * a + 1) = dx(a, 0);
      b(4, 3 * a + 1) = dx(a, 2);
      b(4, 3 * a + 2) = dx(a, 1);
      b(5, 3 * a) = dx(a, 2);
      b(5, 3 * a + 2) = dx(a, 0);
    }
    k += b.transpose() * c * b * jac.determinant();
  }
  EXPECT_LT(relative_deviation(r.stiffness, k), 1e-13);
}

TEST(SolidElement, RigidTranslationGivesNoForce) {
  const ElementCoords x = distorted_hex();
  const Vec3 t(0.3, -0.2, 1.1);
  const ElementVector u = displacement_from(x, [&](const Vec3& p) { return Vec3(p + t); });
  for (const auto& mat : {kSvk, kNeo}) EXPECT_LT(solid_element_force(x, u, mat).norm(), 1e-12);
}

TEST(SolidElement, TangentMatchesFiniteDifferences) {
  const ElementCoords x = unit_cube();
  const ElementVector u = random_vector<ElementVector>(0.1);
  for (const auto& mat : {kSvk, kNeo}) {
    const SolidElementResult r = solid_element_force_stiffness(x, u, mat);
    const Eigen::MatrixXd fd = fd_jacobian(
        [&](const Eigen::VectorXd& v) { return Eigen::VectorXd(solid_element_force(x, ElementVector(v), mat)); }, u, 1e-7);
    EXPECT_LT(relative_deviation(r.stiffness, fd), 1e-5);
    EXPECT_LE((r.stiffness - r.stiffness.transpose()).norm(), 1e-12 * r.stiffness.norm());
  }
}

TEST(SolidElement, TaylorTestsForceAndStiffness) {
  for (const auto& mat : {kSvk, kNeo}) {
    const ElementCoords x = distorted_hex();
    const ElementVector u = random_vector<ElementVector>(0.05);
    const ElementVector v = random_vector<ElementVector>(1.0);
    const SolidElementResult r = solid_element_force_stiffness(x, u, mat);
    const double w0 = solid_element_energy(x, u, mat);
    const double s_energy =
        taylor_slope([&](double h) { return std::abs(solid_element_energy(x, u + h * v, mat) - w0 - h * r.force.dot(v)); });
    const double s_force = taylor_slope(
        [&](double h) { return (solid_element_force(x, u + h * v, mat) - r.force - h * r.stiffness * v).norm(); });
    EXPECT_NEAR(s_energy, 2.0, 0.1);
    EXPECT_NEAR(s_force, 2.0, 0.1);
  }
}

TEST(SolidElement, SvkNuZeroIsLinearInGreenLagrange) {
  const SolidMaterial mat{SolidModel::SaintVenantKirchhoff, 3.0, 0.0};
  const Mat3 f = Mat3::Identity() + 0.2 * random_vector<Eigen::Matrix<double, 9, 1>>(1.0).reshaped(3, 3);
  const Mat3 e = 0.5 * (f.transpose() * f - Mat3::Identity());
  EXPECT_LT((pk2_stress(mat, f) - 3.0 * e).norm(), 1e-14);
}

TEST(SolidElement, NeoHookeStressMatchesClosedForm) {
  const Mat3 f = Mat3::Identity() + 0.1 * random_vector<Eigen::Matrix<double, 9, 1>>(1.0).reshaped(3, 3);
  const Mat3 c = f.transpose() * f;
  const double j = f.determinant();
  const Mat3 s = kNeo.lame_mu() * (Mat3::Identity() - c.inverse()) + kNeo.lame_lambda() * std::log(j) * c.inverse();
  EXPECT_LT((pk2_stress(kNeo, f) - s).norm(), 1e-13);
}

TEST(SolidElement, VolumeAndFaceLoad) {
  const ElementCoords x = unit_cube();
  EXPECT_NEAR(solid_element_volume(x), 1.0, 1e-15);
  for (int face = 0; face < 6; ++face) {
    const ElementVector f = solid_face_load(x, face, Vec3(1.0, 2.0, 3.0));
    Vec3 total = Vec3::Zero();
    for (int a = 0; a < 8; ++a) total += f.segment<3>(3 * a);
    EXPECT_LT((total - Vec3(1.0, 2.0, 3.0)).norm(), 1e-14);
  }
}
