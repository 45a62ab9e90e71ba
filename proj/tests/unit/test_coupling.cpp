#include "fibergrid/beam.hpp"
#include "fibergrid/coupling.hpp"
#include "fibergrid/quadrature.hpp"
#include "fibergrid/solid.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace fibergrid;
using namespace fibergrid::testing;

namespace {

BeamMesh fiber(const Curve& c, int n) {
  BeamMesh b = discretize_fiber(c, n);
  b.youngs_modulus = 100.0;
  b.section = CrossSection::circular(0.05);
  return b;
}

CouplingConfig config(const std::string& scheme, IntegrationType it = IntegrationType::SegmentBased, int n_gauss = 6) {
  CouplingConfig cfg;
  cfg.set_scheme(scheme);
  cfg.integration = it;
  cfg.n_gauss = n_gauss;
  cfg.penalty = 1e4;
  return cfg;
}

Eigen::MatrixXd dense(const SparseMatrix& m) { return Eigen::MatrixXd(m); }

// Row-sum identity of the scalar operators for active multiplier nodes.
void expect_row_sums(const MortarOperators& ops, double tol) {
  const Eigen::MatrixXd d = dense(ops.D), m = dense(ops.M);
  for (int j = 0; j < ops.n_lambda(); ++j) {
    if (!ops.nodes[j].active) continue;
    double dsum = 0.0;
    for (int l = 0; l < ops.n_beam_nodes; ++l) dsum += d(j, 2 * l);
    const double scale = std::max(std::abs(ops.kappa[j]), 1e-300);
    EXPECT_NEAR(dsum, ops.kappa[j], tol * scale) << "node " << j;
    EXPECT_NEAR(m.row(j).sum(), ops.kappa[j], tol * scale) << "node " << j;
  }
}

std::vector<BeamMesh> mixed_fibers() {
  HelixCurve h;
  h.base = Vec3(0.5, 0.5, 0.15);
  h.radius = 0.3;
  h.pitch = 0.35;
  h.turns = 2;
  return {fiber(LineCurve{Vec3(0.1, 0.2, -0.3), Vec3(0.9, 0.8, 1.2)}, 5), fiber(h, 9)};
}

}  // namespace

TEST(LagrangeShape, Examples) {
  const auto l1 = lagrange_shape(1, 0.0);
  ASSERT_EQ(l1.size(), 2u);
  EXPECT_DOUBLE_EQ(l1[0], 0.5);
  EXPECT_DOUBLE_EQ(l1[1], 0.5);
  const auto l2 = lagrange_shape(2, 0.0);
  ASSERT_EQ(l2.size(), 3u);
  EXPECT_NEAR(l2[0], 0.0, 1e-16);
  EXPECT_NEAR(l2[1], 1.0, 1e-16);
  EXPECT_NEAR(l2[2], 0.0, 1e-16);
  for (int k = 0; k < 20; ++k) {
    const auto l3 = lagrange_shape(3, uniform(-1.0, 1.0));
    ASSERT_EQ(l3.size(), 4u);
    EXPECT_NEAR(l3[0] + l3[1] + l3[2] + l3[3], 1.0, 1e-14);
  }
  for (int order = 1; order <= 3; ++order) {
    for (int i = 0; i <= order; ++i) {
      const auto v = lagrange_shape(order, -1.0 + 2.0 * i / order);
      for (int j = 0; j <= order; ++j) EXPECT_NEAR(v[j], i == j ? 1.0 : 0.0, 1e-15);
    }
  }
}

TEST(Projection, UnitCubeCenter) {
  const SolidMesh m = build_solid_grid(1, 1, 1, Vec3::Ones());
  const auto p = project_to_solid(Vec3(0.5, 0.5, 0.5), m);
  ASSERT_TRUE(p);
  EXPECT_EQ(p->element, 0);
  EXPECT_LT(p->xi.norm(), 1e-15);
  EXPECT_TRUE(p->inside);
}

TEST(Projection, ExteriorPointNotFound) {
  const SolidMesh m = build_solid_grid(2, 2, 2, Vec3::Ones());
  EXPECT_FALSE(project_to_solid(Vec3(3.0, 0.5, 0.5), m));
  EXPECT_FALSE(project_to_solid(Vec3(0.5, 0.5, 1.0 + 1e-6), m));
  EXPECT_TRUE(project_to_solid(Vec3(0.5, 0.5, 1.0), m));
}

TEST(Projection, DistortedHexRoundTrip) {
  for (int k = 0; k < 20; ++k) {
    SolidMesh m = build_solid_grid(1, 1, 1, Vec3::Ones());
    for (auto& x : m.nodes) x += random_vector<Vec3>(0.15);
    const Vec3 xi = random_vector<Vec3>(0.95);
    const Vec3 p = hex8_map(m.element_coords(0), xi);
    const auto r = project_to_solid(p, m);
    ASSERT_TRUE(r);
    EXPECT_LT((r->xi - xi).norm(), 1e-10);
    const auto x = m.element_coords(0);
    Vec3 lo = x[0], hi = x[0];
    for (const Vec3& c : x) {
      lo = lo.cwiseMin(c);
      hi = hi.cwiseMax(c);
    }
    EXPECT_LT((hex8_map(x, r->xi) - p).norm(), 1e-12 * (hi - lo).norm());
  }
}

TEST(Projection, HintAndLowestIdTieBreak) {
  const SolidMesh m = build_solid_grid(2, 1, 1, Vec3(2, 1, 1));
  const SolidLocator loc(m);
  const auto shared = project_to_solid(Vec3(1.0, 0.5, 0.5), loc);
  ASSERT_TRUE(shared);
  EXPECT_EQ(shared->element, 0);
  const auto hinted = project_to_solid(Vec3(1.0, 0.5, 0.5), loc, 1);
  ASSERT_TRUE(hinted);
  EXPECT_EQ(hinted->element, 1);
  const auto cands = loc.candidates(Vec3(1.0, 0.5, 0.5));
  EXPECT_TRUE(std::is_sorted(cands.begin(), cands.end()));
}

TEST(Segmentation, ElementInsideOneSolidElement) {
  const SolidMesh m = build_solid_grid(1, 1, 1, Vec3::Ones());
  const SolidLocator loc(m);
  const BeamMesh b = fiber(LineCurve{Vec3(0.2, 0.3, 0.4), Vec3(0.8, 0.6, 0.7)}, 1);
  const auto segs = segment_beam_element(b, 0, loc, config("mortar-linear"));
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0].host, 0);
  EXPECT_EQ(segs[0].xi_a, -1.0);
  EXPECT_EQ(segs[0].xi_b, 1.0);
}

TEST(Segmentation, CrossingInteriorFaceAtMidpoint) {
  const SolidMesh m = build_solid_grid(2, 1, 1, Vec3(2, 1, 1));
  const SolidLocator loc(m);
  const BeamMesh b = fiber(LineCurve{Vec3(0.3, 0.4, 0.5), Vec3(1.7, 0.6, 0.45)}, 1);
  const auto segs = segment_beam_element(b, 0, loc, config("mortar-linear"));
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(segs[0].host, 0);
  EXPECT_EQ(segs[1].host, 1);
  EXPECT_NEAR(segs[0].xi_b, 0.0, 1e-10);
  EXPECT_EQ(segs[0].xi_b, segs[1].xi_a);
}

TEST(Segmentation, StrongDiscontinuity) {
  const SolidMesh m = build_solid_grid(1, 1, 1, Vec3::Ones());
  const SolidLocator loc(m);
  // Exits the cube through x = 1 at 1/2 of the parameter range.
  const BeamMesh b = fiber(LineCurve{Vec3(0.4, 0.5, 0.3), Vec3(1.6, 0.5, 0.7)}, 1);
  const auto segs = segment_beam_element(b, 0, loc, config("mortar-linear"));
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_TRUE(segs[0].hosted());
  EXPECT_FALSE(segs[1].hosted());
  EXPECT_NEAR(segs[0].xi_b, 0.0, 1e-10);
  // Fully outside element: only outside segments.
  const BeamMesh out = fiber(LineCurve{Vec3(2, 2, 2), Vec3(3, 2, 2)}, 1);
  for (const auto& s : segment_beam_element(out, 0, loc, config("mortar-linear"))) EXPECT_FALSE(s.hosted());
}

TEST(Segmentation, CoversElementInOrder) {
  const SolidMesh m = build_solid_grid(3, 3, 3, Vec3::Ones());
  const SolidLocator loc(m);
  const auto fibers = mixed_fibers();
  const FiberSegments segs = segment_fibers(fibers, loc, config("mortar-linear"));
  for (const auto& f : segs) {
    for (const auto& e : f) {
      ASSERT_FALSE(e.empty());
      EXPECT_EQ(e.front().xi_a, -1.0);
      EXPECT_EQ(e.back().xi_b, 1.0);
      for (std::size_t i = 0; i < e.size(); ++i) {
        EXPECT_LT(e[i].xi_a, e[i].xi_b);
        if (i > 0) EXPECT_EQ(e[i - 1].xi_b, e[i].xi_a);
      }
    }
  }
}

TEST(Mortar, SingleElementInsideKappaAndRowSums) {
  const SolidMesh m = build_solid_grid(1, 1, 1, Vec3::Ones());
  const std::vector<BeamMesh> fibers{fiber(LineCurve{Vec3(0.2, 0.3, 0.4), Vec3(0.8, 0.6, 0.7)}, 1)};
  const double len = fibers[0].elements[0].length;
  const MortarOperators ops = assemble_mortar(fibers, m, config("mortar-linear"));
  ASSERT_EQ(ops.n_lambda(), 2);
  EXPECT_NEAR(ops.kappa[0], len / 2, 1e-15);
  EXPECT_NEAR(ops.kappa[1], len / 2, 1e-15);
  expect_row_sums(ops, 1e-14);
  EXPECT_EQ(ops.D_expanded().rows(), 6);
  EXPECT_EQ(ops.D_expanded().cols(), 12);
  EXPECT_EQ(ops.M_expanded().cols(), 24);
}

TEST(Mortar, CubicDAgainstHighOrderQuadrature) {
  const SolidMesh m = build_solid_grid(1, 1, 1, Vec3::Ones());
  const std::vector<BeamMesh> fibers{fiber(LineCurve{Vec3(0.1, 0.3, 0.2), Vec3(0.9, 0.6, 0.8)}, 1)};
  const double len = fibers[0].elements[0].length;
  const MortarOperators ops = assemble_mortar(fibers, m, config("mortar-cubic", IntegrationType::SegmentBased, 4));
  const Eigen::MatrixXd d = dense(ops.D);
  const GaussRule& g = gauss_legendre(64);
  // Multiplier node order: the element nodes at xi = -1, -1/3, 1/3, 1 map to
  // the global rows by arc length.
  std::vector<int> row_of(4);
  for (int j = 0; j < 4; ++j) {
    for (int r = 0; r < ops.n_lambda(); ++r) {
      if (std::abs(ops.nodes[r].xi - (-1.0 + 2.0 * j / 3.0)) < 1e-14) row_of[j] = r;
    }
  }
  for (int j = 0; j < 4; ++j) {
    for (int l = 0; l < 4; ++l) {
      double oracle = 0.0;
      for (int i = 0; i < g.size(); ++i) {
        oracle += g.weights[i] * 0.5 * len * lagrange_shape(3, g.points[i])[j] * hermite_shape(g.points[i], len).value[l];
      }
      // Hermite order (r1, t1, r2, t2) -> D columns (2*0, 2*0+1, 2*1, 2*1+1).
      const double got = d(row_of[j], l);
      EXPECT_NEAR(got, oracle, 1e-13 * std::max(std::abs(oracle), 1e-3)) << j << "," << l;
    }
  }
}

TEST(Mortar, RowSumIdentityAllOrdersAndIntegrationTypes) {
  const SolidMesh m = build_solid_grid(3, 3, 3, Vec3::Ones());
  const auto fibers = mixed_fibers();
  for (const std::string scheme : {"mortar-linear", "mortar-quadratic", "mortar-cubic", "gpts"}) {
    for (auto it : {IntegrationType::SegmentBased, IntegrationType::ElementBased}) {
      const CouplingConfig cfg = config(scheme, it);
      const MortarOperators ops =
          scheme == "gpts" ? assemble_gpts(fibers, m, cfg).operators : assemble_mortar(fibers, m, cfg);
      expect_row_sums(ops, 1e-12);
      for (int j = 0; j < ops.n_lambda(); ++j) {
        if (ops.nodes[j].active) EXPECT_GT(ops.kappa[j], 0.0);
      }
    }
  }
}

TEST(Mortar, ZeroSupportNodesEliminated) {
  const SolidMesh m = build_solid_grid(1, 1, 1, Vec3::Ones());
  // Second element lies completely outside the cube.
  const std::vector<BeamMesh> fibers{fiber(LineCurve{Vec3(0.2, 0.5, 0.5), Vec3(2.6, 0.5, 0.5)}, 3)};
  const MortarOperators ops = assemble_mortar(fibers, m, config("mortar-linear"));
  ASSERT_EQ(ops.n_lambda(), 4);
  ASSERT_FALSE(ops.eliminated.empty());
  for (int j : ops.eliminated) {
    EXPECT_FALSE(ops.nodes[j].active);
    EXPECT_EQ(dense(ops.D).row(j).norm(), 0.0);
  }
  EXPECT_TRUE(ops.nodes[0].active);
}

TEST(Mortar, SegmentSubdivisionInvariance) {
  const SolidMesh m = build_solid_grid(3, 3, 3, Vec3::Ones());
  const auto fibers = mixed_fibers();
  const CouplingConfig cfg = config("mortar-linear");
  const SolidLocator loc(m);
  const FiberSegments segs = segment_fibers(fibers, loc, cfg);
  FiberSegments split = segs;
  for (auto& f : split) {
    for (auto& e : f) {
      std::vector<Segment> out;
      for (const Segment& s : e) {
        const double mid = s.xi_a + 0.37 * (s.xi_b - s.xi_a);
        Segment a = s, b = s;
        a.xi_b = mid;
        b.xi_a = mid;
        out.push_back(a);
        out.push_back(b);
      }
      e = out;
    }
  }
  const MortarOperators a = assemble_mortar(fibers, m, segs, cfg);
  const MortarOperators b = assemble_mortar(fibers, m, split, cfg);
  EXPECT_LT((dense(a.M) - dense(b.M)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((dense(a.D) - dense(b.D)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((a.kappa - b.kappa).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Mortar, SegmentBasedBeatsElementBasedAgainstBruteForce) {
  const SolidMesh m = build_solid_grid(2, 2, 2, Vec3::Ones());
  const std::vector<BeamMesh> fibers{fiber(LineCurve{Vec3(0.15, 0.3, 0.35), Vec3(0.85, 0.7, 0.6)}, 1)};
  const double len = fibers[0].elements[0].length;
  const MortarOperators seg = assemble_mortar(fibers, m, config("mortar-linear"));
  const MortarOperators ele = assemble_mortar(fibers, m, config("mortar-linear", IntegrationType::ElementBased));
  Eigen::MatrixXd oracle = Eigen::MatrixXd::Zero(2, m.num_nodes());
  const GaussRule& g = gauss_legendre(256);
  const BeamVector q = beam_reference_dofs(fibers[0], 0);
  for (int i = 0; i < g.size(); ++i) {
    const Vec3 x = centerline_eval(q, len, g.points[i]).r;
    const auto p = project_to_solid(x, m);
    ASSERT_TRUE(p);
    const Hex8Shape s = hex8_shape(p->xi);
    const auto phi = lagrange_shape(1, g.points[i]);
    for (int j = 0; j < 2; ++j) {
      for (int a = 0; a < 8; ++a) oracle(j, m.elements[p->element][a]) += g.weights[i] * 0.5 * len * phi[j] * s.N[a];
    }
  }
  const double err_seg = (dense(seg.M) - oracle).cwiseAbs().maxCoeff();
  const double err_ele = (dense(ele.M) - oracle).cwiseAbs().maxCoeff();
  EXPECT_GT(err_ele, 1e-6);
  EXPECT_LT(100.0 * err_seg, err_ele);
}

TEST(Mortar, CouplingStiffnessSymmetric) {
  const SolidMesh m = build_solid_grid(3, 3, 3, Vec3::Ones());
  const auto fibers = mixed_fibers();
  const MortarOperators ops = assemble_mortar(fibers, m, config("mortar-quadratic"));
  const Eigen::MatrixXd k = dense(coupling_stiffness(ops, 1e4));
  EXPECT_LE((k - k.transpose()).cwiseAbs().maxCoeff(), 1e-12 * k.cwiseAbs().maxCoeff());
  const CouplingForces cf = coupling_force_stiffness(ops, 1e4, Eigen::VectorXd::Zero(3 * ops.n_solid_nodes),
                                                     Eigen::VectorXd::Zero(6 * ops.n_beam_nodes));
  EXPECT_LE((dense(cf.k_sb) - dense(cf.k_bs).transpose()).cwiseAbs().maxCoeff(), 1e-12 * k.cwiseAbs().maxCoeff());
}

TEST(Mortar, OperatorsIndependentOfCallOrder) {
  const SolidMesh m = build_solid_grid(3, 3, 3, Vec3::Ones());
  const auto fibers = mixed_fibers();
  const MortarOperators a = assemble_mortar(fibers, m, config("mortar-cubic"));
  const MortarOperators b = assemble_mortar(fibers, m, config("mortar-cubic"));
  EXPECT_EQ((dense(a.D) - dense(b.D)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((dense(a.M) - dense(b.M)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(CouplingForces, ZeroAndRigidTranslation) {
  const SolidMesh m = build_solid_grid(3, 3, 3, Vec3::Ones());
  const auto fibers = mixed_fibers();
  for (const std::string scheme : {"mortar-linear", "gpts"}) {
    const CouplingConfig cfg = config(scheme);
    const MortarOperators ops =
        scheme == "gpts" ? assemble_gpts(fibers, m, cfg).operators : assemble_mortar(fibers, m, cfg);
    const Eigen::VectorXd zs = Eigen::VectorXd::Zero(3 * ops.n_solid_nodes);
    const Eigen::VectorXd zb = Eigen::VectorXd::Zero(6 * ops.n_beam_nodes);
    const CouplingForces zero = coupling_force_stiffness(ops, 1e4, zs, zb);
    EXPECT_EQ(zero.solid.norm() + zero.beam.norm() + zero.gap.norm(), 0.0);

    const Vec3 t(0.3, -0.7, 1.1);
    Eigen::VectorXd ds = zs, db = zb;
    for (int k = 0; k < ops.n_solid_nodes; ++k) ds.segment<3>(3 * k) = t;
    for (int l = 0; l < ops.n_beam_nodes; ++l) db.segment<3>(6 * l) = t;
    const CouplingForces cf = coupling_force_stiffness(ops, 1e4, ds, db);
    EXPECT_LT(cf.gap.cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(CouplingForces, TranslatedBeamOverRigidSolid) {
  const SolidMesh m = build_solid_grid(4, 4, 7, Vec3(1, 1, 2));
  const Vec3 dir = Vec3(1, 1, 2).normalized();
  const double half = 0.35 * std::sqrt(5.0);
  const std::vector<BeamMesh> fibers{fiber(LineCurve{Vec3(0.5, 0.5, 1) - half * dir, Vec3(0.5, 0.5, 1) + half * dir}, 5)};
  const double eps = 1e4, u = 2.5e-4;
  const MortarOperators ops = assemble_mortar(fibers, m, config("mortar-linear"));
  Eigen::VectorXd d = Eigen::VectorXd::Zero(ops.n_dofs());
  for (int l = 0; l < ops.n_beam_nodes; ++l) d[3 * ops.n_solid_nodes + 6 * l + 2] = u;
  for (const Vec3& lambda : recover_lagrange(ops, eps, d)) EXPECT_LT((lambda - Vec3(0, 0, eps * u)).norm(), 1e-10);
  for (const Vec3& lambda : recover_lagrange(ops, eps, Eigen::VectorXd::Zero(ops.n_dofs()))) EXPECT_EQ(lambda.norm(), 0.0);
}

TEST(Gpts, SinglePointSparsity) {
  const SolidMesh m = build_solid_grid(1, 1, 1, Vec3::Ones());
  const std::vector<BeamMesh> fibers{fiber(LineCurve{Vec3(0.2, 0.3, 0.4), Vec3(0.8, 0.6, 0.7)}, 1)};
  const GptsConstraintSet set = assemble_gpts(fibers, m, config("gpts", IntegrationType::SegmentBased, 1));
  ASSERT_EQ(set.points.size(), 1u);
  EXPECT_NEAR(set.points[0].xi, 0.0, 1e-15);
  const SparseMatrix g = set.operators.constraint_matrix();
  EXPECT_EQ(g.rows(), 3);
  int nonzero_cols = 0;
  const Eigen::MatrixXd gd = dense(g);
  for (int c = 0; c < gd.cols(); ++c) nonzero_cols += gd.col(c).norm() > 0.0;
  EXPECT_EQ(nonzero_cols, 24 + 12);
}

TEST(Gpts, ConstraintCountMatchesHostedPoints) {
  const SolidMesh m = build_solid_grid(3, 3, 3, Vec3::Ones());
  const auto fibers = mixed_fibers();
  const CouplingConfig cfg = config("gpts");
  const SolidLocator loc(m);
  const FiberSegments segs = segment_fibers(fibers, loc, cfg);
  int hosted = 0;
  for (const auto& f : segs) {
    for (const auto& e : f) {
      for (const auto& s : e) hosted += s.hosted();
    }
  }
  const GptsConstraintSet set = assemble_gpts(fibers, m, segs, cfg);
  EXPECT_EQ(static_cast<int>(set.points.size()), hosted * cfg.n_gauss);
  EXPECT_EQ(set.operators.constraint_matrix().rows(), 3 * hosted * cfg.n_gauss);
  for (std::size_t j = 0; j < set.points.size(); ++j) EXPECT_DOUBLE_EQ(set.operators.kappa[j], set.points[j].weight);
}

TEST(CouplingConfig, Validation) {
  CouplingConfig cfg = config("mortar-linear");
  cfg.penalty = 0.0;
  EXPECT_THROW(cfg.validate(), InputError);
  cfg.penalty = 1.0;
  cfg.n_gauss = 0;
  EXPECT_THROW(cfg.validate(), InputError);
  EXPECT_THROW(cfg.set_scheme("mortar-quartic"), InputError);
  cfg.set_scheme("mortar-quadratic");
  EXPECT_EQ(cfg.scheme_name(), "mortar-quadratic");
}

TEST(SegmentsCsv, HeaderAndRows) {
  const SolidMesh m = build_solid_grid(1, 1, 1, Vec3::Ones());
  const SolidLocator loc(m);
  const std::vector<BeamMesh> fibers{fiber(LineCurve{Vec3(0.4, 0.5, 0.3), Vec3(1.6, 0.5, 0.7)}, 1)};
  std::ostringstream os;
  write_segments_csv(os, segment_fibers(fibers, loc, config("mortar-linear")));
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "beam_elem,xi_a,xi_b,host_elem");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 2);
}
