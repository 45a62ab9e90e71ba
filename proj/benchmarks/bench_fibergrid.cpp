#include "fibergrid/beam.hpp"
#include "fibergrid/model.hpp"
#include "fibergrid/solid.hpp"
#include "fibergrid/solver.hpp"

#include <benchmark/benchmark.h>

#include <numbers>

using namespace fibergrid;

namespace {

ElementCoords cube() {
  const SolidMesh m = build_solid_grid(1, 1, 1, Vec3::Ones());
  ElementCoords x;
  for (int a = 0; a < 8; ++a) x[a] = m.nodes[m.elements[0][a]];
  return x;
}

HelixCurve helix() {
  HelixCurve h;
  h.base = Vec3(0.5, 0.5, 0.1);
  h.radius = 0.45;
  h.pitch = 0.6;
  h.turns = 3;
  return h;
}

Model block(int n) {
  Model m;
  m.solid.grid = GridSpec{{5 * n, n, n}, Vec3(5, 1, 1), Vec3::Zero()};
  m.solid.material = SolidMaterial{SolidModel::SaintVenantKirchhoff, 10.0, 0.0};
  m.solid.node_set_specs["clamp"] = NodeSetSpec{std::make_pair(Vec3::Zero(), Vec3(0, 1, 1)), {}};
  m.solid.mesh.dirichlet.push_back({"clamp", {true, true, true}, Vec3::Zero()});
  FiberInput f;
  f.curve = LineCurve{Vec3(0, 0.5, 0.5), Vec3(5, 0.5, 0.5)};
  f.n_elements = 2 * n;
  f.youngs_modulus = 4346;
  f.radius = 0.125;
  m.beams.push_back(f);
  m.coupling.set_scheme("mortar-linear");
  m.coupling.penalty = 100;
  finalize_model(m);
  return m;
}

}  // namespace

static void BM_SolidElement(benchmark::State& state) {
  const ElementCoords x = cube();
  ElementVector u = ElementVector::Random() * 0.05;
  const SolidMaterial mat{state.range(0) == 0 ? SolidModel::SaintVenantKirchhoff : SolidModel::NeoHooke, 10.0, 0.3};
  for (auto _ : state) benchmark::DoNotOptimize(solid_element_force_stiffness(x, u, mat));
}
BENCHMARK(BM_SolidElement)->Arg(0)->Arg(1)->ArgNames({"neohooke"});

static void BM_BeamElement(benchmark::State& state) {
  const BeamMesh b = discretize_fiber(helix(), 23);
  const BeamVector q = beam_reference_dofs(b, 3);
  const BeamVector d = BeamVector::Random() * 0.01;
  const BeamSection section{100.0 * std::numbers::pi * 0.05 * 0.05, 100.0 * std::numbers::pi * std::pow(0.05, 4) / 4};
  for (auto _ : state) benchmark::DoNotOptimize(tf_element_force_stiffness(q, d, b.elements[3].length, section));
}
BENCHMARK(BM_BeamElement);

static void BM_ProblemSetup(benchmark::State& state) {
  const Model m = block(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    Problem p(m);
    benchmark::DoNotOptimize(p.coupling_matrix().nonZeros());
  }
}
BENCHMARK(BM_ProblemSetup)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_GlobalAssembly(benchmark::State& state) {
  const Problem p(block(static_cast<int>(state.range(0))));
  const Eigen::VectorXd d = Eigen::VectorXd::Random(p.dofs().size()) * 1e-3;
  for (auto _ : state) benchmark::DoNotOptimize(assemble_global(p, d, 1.0));
  state.counters["dofs"] = p.dofs().size();
}
BENCHMARK(BM_GlobalAssembly)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_LinearSolve(benchmark::State& state) {
  const Problem p(block(static_cast<int>(state.range(0))));
  const GlobalSystem sys = assemble_global(p, Eigen::VectorXd::Zero(p.dofs().size()), 1.0);
  const ReducedSystem red = apply_dirichlet(sys, p.dofs().fixed);
  LinearSolver solver;
  const Eigen::VectorXd rhs = Eigen::VectorXd::Ones(red.tangent.rows());
  for (auto _ : state) {
    solver.factorize(red.tangent, red.blocks);
    benchmark::DoNotOptimize(solver.solve(rhs));
  }
}
BENCHMARK(BM_LinearSolve)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
