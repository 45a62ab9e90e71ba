#include "fibergrid/postprocess.hpp"
#include "fibergrid/solver.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <cstring>

using namespace fibergrid;
using namespace fibergrid::testing;

namespace {

Model loaded_small_model(double moment = 0.02) {
  Model m = parse_deck(small_deck());
  m.beams[0].loads.line_load = Vec3(0.3, -0.2, -1.0);
  m.beams[0].loads.moments.push_back({1, Vec3(0.0, moment, 0.01)});
  return m;
}

/// Displacement field of a rigid motion x -> R X + c, including tangent increments.
Eigen::VectorXd rigid_motion(const Problem& p, const Mat3& r, const Vec3& c) {
  const DofMap& dofs = p.dofs();
  Eigen::VectorXd d = Eigen::VectorXd::Zero(dofs.size());
  for (int k = 0; k < dofs.n_solid_nodes; ++k) {
    const Vec3 x = p.solid().nodes[k];
    d.segment<3>(dofs.solid(k, 0)) = r * x + c - x;
  }
  for (std::size_t f = 0; f < p.fibers().size(); ++f) {
    for (int n = 0; n < p.fibers()[f].num_nodes(); ++n) {
      const auto& node = p.fibers()[f].nodes[n];
      d.segment<3>(dofs.beam_position(static_cast<int>(f), n, 0)) = r * node.position + c - node.position;
      d.segment<3>(dofs.beam_tangent(static_cast<int>(f), n, 0)) = r * node.tangent - node.tangent;
    }
  }
  return d;
}

class ThreadEnv {
 public:
  explicit ThreadEnv(int n) {
    if (const char* old = std::getenv("FIBERGRID_THREADS")) saved_ = old;
    setenv("FIBERGRID_THREADS", std::to_string(n).c_str(), 1);
  }
  ~ThreadEnv() {
    if (saved_.empty()) {
      unsetenv("FIBERGRID_THREADS");
    } else {
      setenv("FIBERGRID_THREADS", saved_.c_str(), 1);
    }
  }

 private:
  std::string saved_;
};

std::string block_deck(int n_beam, double moment, int steps = 4) {
  return R"({
  "solid": {
    "grid": {"n": [5, 1, 1], "dims": [5, 1, 1]},
    "material": {"model": "svk", "E": 10, "nu": 0},
    "node_sets": {"clamp": {"box": [[0, 0, 0], [0, 1, 1]]}},
    "dirichlet": [{"set": "clamp", "dofs": [true, true, true]}]
  },
  "beams": [{
    "curve": {"type": "line", "start": [0, 0.5, 0.5], "end": [5, 0.5, 0.5]}, "n_elements": )" +
         std::to_string(n_beam) + R"(, "E": 4346, "radius": 0.125,
    "loads": {"nodal_moments": [{"node": "end", "moment": [0, )" +
         std::to_string(-moment) + R"(, 0]}]},
    "dirichlet": [{"node": "start", "position": [true, true, true], "tangent": [true, true, true]}]
  }],
  "coupling": {"scheme": "mortar-linear", "integration": {"type": "segment", "gauss_points": 6}, "penalty": 100},
  "solver": {"n_load_steps": )" +
         std::to_string(steps) + R"(, "newton_tol": 1e-10}
})";
}

}  // namespace

TEST(DofMap, Ordering) {
  const Problem p(parse_deck(small_deck()));
  const DofMap& dofs = p.dofs();
  EXPECT_EQ(dofs.size(), 3 * 8 + 6 * 2);
  EXPECT_EQ(dofs.beam_position(0, 1, 2), 24 + 6 + 2);
  EXPECT_EQ(dofs.beam_tangent(0, 0, 0), 27);
  EXPECT_EQ(dofs.num_fixed(), 12);
  EXPECT_EQ(static_cast<int>(dofs.free_dofs().size()), dofs.size() - 12);
}

TEST(Newton, ZeroLoadConvergesWithoutIterations) {
  const Problem p(parse_deck(small_deck()));
  const SolveResult r = newton_solve(p);
  EXPECT_EQ(r.load_factor, 1.0);
  EXPECT_EQ(r.d.norm(), 0.0);
  for (const auto& rec : r.log) EXPECT_EQ(rec.iter, 0);
  EXPECT_EQ(summarize(p, r).iterations, 0);
}

TEST(Assembly, TangentMatchesFiniteDifferences) {
  const Problem p(loaded_small_model());
  const Eigen::VectorXd d = random_vector(p.dofs().size(), 0.02);
  const GlobalSystem sys = assemble_global(p, d, 0.7);
  const Eigen::MatrixXd fd =
      fd_jacobian([&](const Eigen::VectorXd& v) { return assemble_global(p, v, 0.7, false).residual; }, d, 1e-7);
  const Eigen::MatrixXd k = Eigen::MatrixXd(sys.full_tangent());
  EXPECT_LT(relative_deviation(k, fd), 1e-5);
  EXPECT_FALSE(sys.blocks.empty());
}

TEST(Assembly, CouplingBlockIsConstantAndSymmetric) {
  const Problem p(loaded_small_model());
  const SparseMatrix& kc = p.coupling_matrix();
  EXPECT_LT(Eigen::MatrixXd(kc - SparseMatrix(kc.transpose())).norm(), 1e-12 * Eigen::MatrixXd(kc).norm());
  const Eigen::VectorXd d1 = random_vector(p.dofs().size(), 0.01), d2 = random_vector(p.dofs().size(), 0.01);
  const Eigen::VectorXd dd = d2 - d1;
  const Eigen::VectorXd r1 = assemble_global(p, d1, 0.0, false).residual;
  const Eigen::VectorXd r2 = assemble_global(p, d2, 0.0, false).residual;
  // Coupling residual is exactly linear; the element parts are checked elsewhere.
  const CouplingForces c1 = coupling_force_stiffness(p.operators(), p.model().coupling.penalty,
                                                     solid_part(p.dofs(), d1), beam_part(p.dofs(), d1));
  const CouplingForces c2 = coupling_force_stiffness(p.operators(), p.model().coupling.penalty,
                                                     solid_part(p.dofs(), d2), beam_part(p.dofs(), d2));
  Eigen::VectorXd f1(p.dofs().size()), f2(p.dofs().size());
  f1 << c1.solid, c1.beam;
  f2 << c2.solid, c2.beam;
  EXPECT_LT((f2 - f1 - kc * dd).norm(), 1e-10 * (f2 - f1).norm());
  EXPECT_GT((r2 - r1).norm(), 0.0);
}

TEST(Assembly, DeterministicAcrossThreadCounts) {
  const Problem p(loaded_small_model());
  const Eigen::VectorXd d = random_vector(p.dofs().size(), 0.02);
  GlobalSystem a, b;
  {
    ThreadEnv env(1);
    a = assemble_global(p, d, 1.0);
  }
  {
    ThreadEnv env(4);
    b = assemble_global(p, d, 1.0);
  }
  ASSERT_EQ(a.residual.size(), b.residual.size());
  EXPECT_EQ(std::memcmp(a.residual.data(), b.residual.data(), sizeof(double) * a.residual.size()), 0);
  const Eigen::MatrixXd ka(a.tangent), kb(b.tangent);
  EXPECT_EQ(std::memcmp(ka.data(), kb.data(), sizeof(double) * ka.size()), 0);
}

TEST(Assembly, RigidMotionGivesZeroCouplingGap) {
  const Problem p(parse_deck(small_deck()));
  const Eigen::VectorXd d = rigid_motion(p, rotation(Vec3(0.3, -1, 2), 0.9), Vec3(0.5, 1.0, -2.0));
  const CouplingForces c = coupling_force_stiffness(p.operators(), p.model().coupling.penalty, solid_part(p.dofs(), d),
                                                    beam_part(p.dofs(), d));
  EXPECT_LT(c.gap.norm(), 1e-13);
  EXPECT_LT(c.solid.norm() + c.beam.norm(), 1e-9);
}

TEST(Dirichlet, ReductionAndReactions) {
  const Problem p(loaded_small_model());
  const Eigen::VectorXd d = random_vector(p.dofs().size(), 0.01);
  const GlobalSystem sys = assemble_global(p, d, 1.0);
  const ReducedSystem red = apply_dirichlet(sys, p.dofs().fixed);
  EXPECT_EQ(static_cast<int>(red.free.size()), p.dofs().size() - p.dofs().num_fixed());
  EXPECT_EQ(red.tangent.rows(), static_cast<Eigen::Index>(red.free.size()));
  for (int i = 0; i < p.dofs().size(); ++i) {
    if (p.dofs().fixed[i]) {
      EXPECT_EQ(red.reduced_index[i], -1);
      EXPECT_EQ(red.reactions[i], sys.residual[i]);
    } else {
      EXPECT_EQ(red.residual[red.reduced_index[i]], sys.residual[i]);
      EXPECT_EQ(red.reactions[i], 0.0);
    }
  }
}

TEST(Dirichlet, PrescribedDisplacementIsReached) {
  Model m = parse_deck(small_deck());
  m.solid.node_set_specs["top"] = NodeSetSpec{std::make_pair(Vec3(0, 0, 1), Vec3(1, 1, 1)), {}};
  SolidDirichlet lift;
  lift.set = "top";
  lift.fixed = {false, false, true};
  lift.value = Vec3(0, 0, 0.05);
  m.solid.mesh.dirichlet.push_back(lift);
  finalize_model(m);
  const Problem p(std::move(m));
  const SolveResult r = newton_solve(p);
  ASSERT_EQ(p.solid().node_sets.at("top").size(), 4u);
  for (int k : p.solid().node_sets.at("top")) EXPECT_NEAR(r.d[p.dofs().solid(k, 2)], 0.05, 1e-14);
  // Nothing else is loaded, so the reactions are self-equilibrated.
  EXPECT_LT(summarize(p, r).reaction_force.norm(), 1e-8);
}

TEST(LinearSolver, SymmetricAndWoodburyPaths) {
  const int n = 12;
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(n, n);
  Eigen::MatrixXd spd = a * a.transpose() + n * Eigen::MatrixXd::Identity(n, n);
  const SparseMatrix k = spd.sparseView();
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(n, -1.0, 2.0);
  LinearSolver s;
  s.factorize(k);
  EXPECT_LT((spd * s.solve(b) - b).norm(), 1e-12 * b.norm());
  EXPECT_FALSE(s.used_lu());

  NonsymmetricBlock blk;
  blk.dofs = {1, 5, 9};
  blk.k << 0.0, 2.0, -1.0, -0.5, 0.3, 0.7, 1.1, 0.0, 0.2;
  Eigen::MatrixXd full = spd;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) full(blk.dofs[i], blk.dofs[j]) += blk.k(i, j);
  }
  s.factorize(k, {blk});
  EXPECT_LT((full * s.solve(b) - b).norm(), 1e-12 * b.norm());

  // Indefinite symmetric part goes through LU.
  Eigen::MatrixXd indef = spd;
  indef(0, 0) = -50.0;
  s.factorize(SparseMatrix(indef.sparseView()));
  EXPECT_LT((indef * s.solve(b) - b).norm(), 1e-10 * b.norm());
  EXPECT_TRUE(s.used_lu());

  EXPECT_THROW(s.factorize(SparseMatrix(Eigen::MatrixXd::Zero(n, n).sparseView())), SingularSystem);
}

TEST(Newton, ReactionsBalanceLoads) {
  const Problem p(loaded_small_model(0.0));
  const SolveResult r = newton_solve(p);
  const SolutionSummary s = summarize(p, r);
  EXPECT_GT(s.load_force.norm(), 0.0);
  EXPECT_LT((s.reaction_force + s.load_force).norm(), 1e-8 * s.load_force.norm());
  EXPECT_LT((s.reaction_moment + s.load_moment).norm(), 1e-8 * s.load_force.norm());
}

TEST(Newton, QuadraticConvergence) {
  // One large step so that several iterations fall in the asymptotic range.
  const Problem p(parse_deck(block_deck(4, 0.3, 1)));
  const SolveResult r = newton_solve(p);
  ASSERT_EQ(r.load_factor, 1.0);
  ASSERT_EQ(r.cutbacks, 0);
  std::vector<double> res;
  for (const auto& rec : r.log) {
    if (rec.iter > 0 && rec.residual_norm > 1e-12) res.push_back(rec.residual_norm);
  }
  ASSERT_GE(res.size(), 3u);
  const std::size_t k = res.size() - 1;
  const double order = std::log(res[k] / res[k - 1]) / std::log(res[k - 1] / res[k - 2]);
  EXPECT_GE(order, 1.8) << res[k - 2] << " " << res[k - 1] << " " << res[k];
}

TEST(Newton, ClampedFaceReactionMoment) {
  const Problem p(parse_deck(block_deck(4, 0.025)));
  const SolveResult r = newton_solve(p);
  const SolutionSummary s = summarize(p, r);
  EXPECT_NEAR(s.reaction_moment.x(), 0.0, 1e-8);
  EXPECT_NEAR(s.reaction_moment.y(), 0.025, 1e-8);
  EXPECT_NEAR(s.reaction_moment.z(), 0.0, 1e-8);
}
