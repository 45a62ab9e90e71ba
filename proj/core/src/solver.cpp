#include "fibergrid/solver.hpp"

#include "fibergrid/beam.hpp"
#include "fibergrid/quadrature.hpp"
#include "fibergrid/solid.hpp"

#include <Eigen/CholmodSupport>
#include <umfpack.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace fibergrid {

namespace {

using Triplet = Eigen::Triplet<double>;

constexpr double kPivotRatio = 1e-14;

/// Runs fn(begin, end) over [0, n) split into contiguous chunks.
template <class Fn>
void parallel_for(int n, Fn&& fn) {
  const int threads = std::min(worker_threads(), std::max(1, n / 64));
  if (threads <= 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex mutex;
  for (int t = 0; t < threads; ++t) {
    const int begin = static_cast<int>(static_cast<long long>(n) * t / threads);
    const int end = static_cast<int>(static_cast<long long>(n) * (t + 1) / threads);
    pool.emplace_back([&, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

int value_index(const SparseMatrix& m, int row, int col) {
  const int* inner = m.innerIndexPtr();
  const int* begin = inner + m.outerIndexPtr()[col];
  const int* end = inner + m.outerIndexPtr()[col + 1];
  const int* it = std::lower_bound(begin, end, row);
  if (it == end || *it != row) throw Error("assembly: entry outside the sparsity pattern");
  return static_cast<int>(it - inner);
}

std::array<int, 24> solid_element_dofs(const SolidMesh& mesh, int e) {
  std::array<int, 24> dofs{};
  for (int a = 0; a < 8; ++a) {
    for (int i = 0; i < 3; ++i) dofs[3 * a + i] = 3 * mesh.elements[e][a] + i;
  }
  return dofs;
}

std::array<int, 12> beam_element_dofs(const DofMap& dofs, const BeamMesh& beam, int fiber, int e) {
  std::array<int, 12> out{};
  for (int n = 0; n < 2; ++n) {
    for (int i = 0; i < 3; ++i) {
      out[6 * n + i] = dofs.beam_position(fiber, beam.elements[e].nodes[n], i);
      out[6 * n + 3 + i] = dofs.beam_tangent(fiber, beam.elements[e].nodes[n], i);
    }
  }
  return out;
}

BeamVector gather_beam(const Eigen::VectorXd& d, const std::array<int, 12>& dofs) {
  BeamVector v;
  for (int i = 0; i < 12; ++i) v[i] = d[dofs[i]];
  return v;
}

}  // namespace

int worker_threads() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("FIBERGRID_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) n = v;
  }
  return n;
}

std::vector<int> DofMap::free_dofs() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i) {
    if (!fixed[i]) out.push_back(i);
  }
  return out;
}

int DofMap::num_fixed() const { return static_cast<int>(std::count(fixed.begin(), fixed.end(), 1)); }

DofMap DofMap::build(const Model& model) {
  DofMap m;
  m.n_solid_nodes = model.solid.mesh.num_nodes();
  for (const auto& b : model.beams) {
    m.fiber_offset.push_back(m.n_beam_nodes);
    m.n_beam_nodes += b.mesh.num_nodes();
  }
  m.fixed.assign(m.size(), 0);
  m.prescribed = Eigen::VectorXd::Zero(m.size());
  for (const auto& bc : model.solid.mesh.dirichlet) {
    for (int node : model.solid.mesh.node_sets.at(bc.set)) {
      for (int c = 0; c < 3; ++c) {
        if (!bc.fixed[c]) continue;
        m.fixed[m.solid(node, c)] = 1;
        m.prescribed[m.solid(node, c)] = bc.value[c];
      }
    }
  }
  for (std::size_t f = 0; f < model.beams.size(); ++f) {
    for (const auto& bc : model.beams[f].dirichlet) {
      for (int c = 0; c < 3; ++c) {
        if (bc.position[c]) m.fixed[m.beam_position(static_cast<int>(f), bc.node, c)] = 1;
        if (bc.tangent[c]) m.fixed[m.beam_tangent(static_cast<int>(f), bc.node, c)] = 1;
      }
    }
  }
  return m;
}

struct Problem::Pattern {
  SparseMatrix structure;
  std::vector<int> solid_index;  // 576 per solid element, row-major local (r, c)
  std::vector<int> beam_index;   // 144 per beam element (fibers concatenated)
  std::vector<std::pair<int, int>> beam_elements;  // (fiber, element)
  std::vector<int> coupling_index;  // per stored entry of the coupling matrix
};

Problem::Problem(Model model) : model_(std::move(model)) {
  model_.validate();
  fibers_ = model_.fiber_meshes();
  dofs_ = DofMap::build(model_);
  const SolidMesh& mesh = model_.solid.mesh;
  const CouplingConfig& cfg = model_.coupling;

  locator_ = std::make_unique<SolidLocator>(mesh);
  segments_ = segment_fibers(fibers_, *locator_, cfg);
  if (cfg.scheme == CouplingScheme::Mortar) {
    operators_ = assemble_mortar(fibers_, mesh, segments_, cfg);
    for (int j : operators_.eliminated) {
      const auto& n = operators_.nodes[j];
      notes_.push_back("multiplier node " + std::to_string(j) + " (fiber " + std::to_string(n.fiber) + ", s = " +
                       std::to_string(n.arc_length) + ") has no in-solid support and is eliminated");
    }
  } else {
    GptsConstraintSet gpts = assemble_gpts(fibers_, mesh, segments_, cfg);
    operators_ = std::move(gpts.operators);
    gpts_points_ = std::move(gpts.points);
  }
  coupling_ = coupling_stiffness(operators_, cfg.penalty);

  // Dead loads at unit load factor.
  dead_load_ = Eigen::VectorXd::Zero(dofs_.size());
  for (const auto& nm : mesh.neumann) {
    for (int e : nm.elements) {
      const ElementVector fe = solid_face_load(mesh.element_coords(e), nm.face, nm.traction);
      const auto idx = solid_element_dofs(mesh, e);
      for (int i = 0; i < 24; ++i) dead_load_[idx[i]] += fe[i];
    }
  }
  const GaussRule& g4 = gauss_legendre(4);
  for (std::size_t f = 0; f < fibers_.size(); ++f) {
    const FiberLoads& loads = model_.beams[f].loads;
    const Vec3 q = loads.scale * loads.line_load;
    const BeamMesh& beam = fibers_[f];
    for (int e = 0; e < beam.num_elements(); ++e) {
      std::vector<std::pair<double, double>> ranges;
      if (loads.in_solid_only) {
        for (const auto& s : segments_[f][e]) {
          if (s.hosted()) ranges.emplace_back(s.xi_a, s.xi_b);
        }
      } else {
        ranges.emplace_back(-1.0, 1.0);
      }
      const double len = beam.elements[e].length;
      const auto idx = beam_element_dofs(dofs_, beam, static_cast<int>(f), e);
      for (const auto& [a, b] : ranges) {
        for (int i = 0; i < g4.size(); ++i) {
          const double xi = 0.5 * (a + b) + 0.5 * (b - a) * g4.points[i];
          const double w = g4.weights[i] * 0.5 * (b - a) * 0.5 * len;
          const HermiteShape h = hermite_shape(xi, len);
          for (int k = 0; k < 4; ++k) {
            for (int c = 0; c < 3; ++c) dead_load_[idx[3 * k + c]] += w * h.value[k] * q[c];
          }
        }
      }
    }
    for (const auto& m : loads.moments) moments_.push_back({static_cast<int>(f), m.node, loads.scale * m.moment});
  }

  // Sparsity pattern: solid and beam element blocks plus the coupling matrix.
  pattern_ = std::make_unique<Pattern>();
  Pattern& p = *pattern_;
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(mesh.num_elements()) * 576 + coupling_.nonZeros());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto idx = solid_element_dofs(mesh, e);
    for (int r : idx) {
      for (int c : idx) t.emplace_back(r, c, 0.0);
    }
  }
  for (std::size_t f = 0; f < fibers_.size(); ++f) {
    for (int e = 0; e < fibers_[f].num_elements(); ++e) {
      p.beam_elements.emplace_back(static_cast<int>(f), e);
      const auto idx = beam_element_dofs(dofs_, fibers_[f], static_cast<int>(f), e);
      for (int r : idx) {
        for (int c : idx) t.emplace_back(r, c, 0.0);
      }
    }
  }
  for (int k = 0; k < coupling_.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(coupling_, k); it; ++it) t.emplace_back(it.row(), it.col(), 0.0);
  }
  p.structure.resize(dofs_.size(), dofs_.size());
  p.structure.setFromTriplets(t.begin(), t.end());
  p.structure.makeCompressed();
  t.clear();
  t.shrink_to_fit();

  p.solid_index.resize(static_cast<std::size_t>(mesh.num_elements()) * 576);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto idx = solid_element_dofs(mesh, e);
    for (int r = 0; r < 24; ++r) {
      for (int c = 0; c < 24; ++c) p.solid_index[576 * e + 24 * r + c] = value_index(p.structure, idx[r], idx[c]);
    }
  }
  p.beam_index.resize(p.beam_elements.size() * 144);
  for (std::size_t be = 0; be < p.beam_elements.size(); ++be) {
    const auto [f, e] = p.beam_elements[be];
    const auto idx = beam_element_dofs(dofs_, fibers_[f], f, e);
    for (int r = 0; r < 12; ++r) {
      for (int c = 0; c < 12; ++c) p.beam_index[144 * be + 12 * r + c] = value_index(p.structure, idx[r], idx[c]);
    }
  }
  for (int k = 0; k < coupling_.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(coupling_, k); it; ++it) {
      p.coupling_index.push_back(value_index(p.structure, static_cast<int>(it.row()), static_cast<int>(it.col())));
    }
  }
}

Problem::~Problem() = default;

SparseMatrix GlobalSystem::full_tangent() const {
  SparseMatrix k = tangent;
  if (blocks.empty()) return k;
  std::vector<Triplet> t;
  for (const auto& b : blocks) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) t.emplace_back(b.dofs[r], b.dofs[c], b.k(r, c));
    }
  }
  SparseMatrix extra(k.rows(), k.cols());
  extra.setFromTriplets(t.begin(), t.end());
  return k + extra;
}

GlobalSystem assemble_global(const Problem& problem, const Eigen::VectorXd& d, double load_factor,
                             bool with_tangent) {
  const DofMap& dofs = problem.dofs();
  const SolidMesh& mesh = problem.solid();
  const SolidMaterial& mat = problem.model().solid.material;
  const auto& pat = problem.pattern();
  if (d.size() != dofs.size()) throw Error("assemble_global: state size mismatch");

  GlobalSystem sys;
  Eigen::VectorXd f_int = Eigen::VectorXd::Zero(dofs.size());
  if (with_tangent) {
    sys.tangent = pat.structure;
    std::fill(sys.tangent.valuePtr(), sys.tangent.valuePtr() + sys.tangent.nonZeros(), 0.0);
  }
  double* values = with_tangent ? sys.tangent.valuePtr() : nullptr;

  // Solid elements: evaluated in parallel batches, reduced in element order.
  const int ne = mesh.num_elements();
  constexpr int kBatch = 2048;
  std::vector<SolidElementResult> batch(std::min(ne, kBatch));
  for (int first = 0; first < ne; first += kBatch) {
    const int count = std::min(kBatch, ne - first);
    parallel_for(count, [&](int begin, int end) {
      for (int i = begin; i < end; ++i) {
        const int e = first + i;
        const auto idx = solid_element_dofs(mesh, e);
        ElementVector u;
        for (int k = 0; k < 24; ++k) u[k] = d[idx[k]];
        if (with_tangent) {
          batch[i] = solid_element_force_stiffness(mesh.element_coords(e), u, mat);
        } else {
          batch[i].force = solid_element_force(mesh.element_coords(e), u, mat);
        }
      }
    });
    for (int i = 0; i < count; ++i) {
      const int e = first + i;
      const auto idx = solid_element_dofs(mesh, e);
      for (int k = 0; k < 24; ++k) f_int[idx[k]] += batch[i].force[k];
      if (with_tangent) {
        const int* vi = pat.solid_index.data() + 576 * static_cast<std::size_t>(e);
        for (int r = 0; r < 24; ++r) {
          for (int c = 0; c < 24; ++c) values[vi[24 * r + c]] += batch[i].stiffness(r, c);
        }
      }
    }
  }

  // Beam elements.
  for (std::size_t be = 0; be < pat.beam_elements.size(); ++be) {
    const auto [f, e] = pat.beam_elements[be];
    const BeamMesh& beam = problem.fibers()[f];
    const auto idx = beam_element_dofs(dofs, beam, f, e);
    const BeamElementResult r = tf_element_force_stiffness(beam_reference_dofs(beam, e), gather_beam(d, idx),
                                                           beam.elements[e].length, BeamSection::of(beam));
    for (int k = 0; k < 12; ++k) f_int[idx[k]] += r.force[k];
    if (with_tangent) {
      const int* vi = pat.beam_index.data() + 144 * be;
      for (int rr = 0; rr < 12; ++rr) {
        for (int c = 0; c < 12; ++c) values[vi[12 * rr + c]] += r.stiffness(rr, c);
      }
    }
  }

  // Coupling (linear in d).
  const SparseMatrix& kc = problem.coupling_matrix();
  f_int += kc * d;
  if (with_tangent) {
    const double* kv = kc.valuePtr();
    for (std::size_t i = 0; i < pat.coupling_index.size(); ++i) values[pat.coupling_index[i]] += kv[i];
  }

  // External loads.
  sys.f_ext = load_factor * problem.dead_load();
  for (const auto& m : problem.moments()) {
    const BeamMesh& beam = problem.fibers()[m.fiber];
    std::array<int, 3> idx{};
    Vec3 t;
    for (int c = 0; c < 3; ++c) {
      idx[c] = dofs.beam_tangent(m.fiber, m.node, c);
      t[c] = beam.nodes[m.node].tangent[c] + d[idx[c]];
    }
    const NodalMomentLoad ml = apply_nodal_moment(t, load_factor * m.moment);
    for (int c = 0; c < 3; ++c) sys.f_ext[idx[c]] += ml.force[c];
    if (with_tangent) sys.blocks.push_back({idx, -ml.stiffness});
  }
  sys.residual = f_int - sys.f_ext;
  return sys;
}

ReducedSystem apply_dirichlet(const GlobalSystem& system, const std::vector<char>& fixed) {
  const int n = static_cast<int>(system.residual.size());
  ReducedSystem out;
  out.reduced_index.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    if (!fixed[i]) {
      out.reduced_index[i] = static_cast<int>(out.free.size());
      out.free.push_back(i);
    }
  }
  const int nf = static_cast<int>(out.free.size());
  out.residual.resize(nf);
  for (int i = 0; i < nf; ++i) out.residual[i] = system.residual[out.free[i]];
  out.reactions = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (fixed[i]) out.reactions[i] = system.residual[i];
  }

  const SparseMatrix& k = system.tangent;
  if (k.rows() == n) {
    // Column-major extraction keeps row order, so the CSC arrays are built
    // directly.
    std::vector<int> outer(nf + 1, 0);
    std::vector<int> inner;
    std::vector<double> vals;
    inner.reserve(k.nonZeros());
    vals.reserve(k.nonZeros());
    for (int jc = 0; jc < nf; ++jc) {
      const int col = out.free[jc];
      for (SparseMatrix::InnerIterator it(k, col); it; ++it) {
        const int r = out.reduced_index[it.row()];
        if (r < 0) continue;
        inner.push_back(r);
        vals.push_back(it.value());
      }
      outer[jc + 1] = static_cast<int>(inner.size());
    }
    out.tangent = Eigen::Map<const SparseMatrix>(nf, nf, static_cast<int>(inner.size()), outer.data(), inner.data(),
                                                 vals.data());
  }
  for (const auto& b : system.blocks) {
    NonsymmetricBlock rb = b;
    for (int c = 0; c < 3; ++c) rb.dofs[c] = out.reduced_index[b.dofs[c]];
    out.blocks.push_back(rb);
  }
  return out;
}

struct LinearSolver::Impl {
  cholmod_common common;
  cholmod_factor* factor = nullptr;
  int analyzed_n = -1;
  std::vector<int> analyzed_outer, analyzed_inner;

  bool lu = false;
  void* symbolic = nullptr;
  void* numeric = nullptr;
  SparseMatrix lu_matrix;

  // Woodbury data for K = A + E C E^T.
  std::vector<int> e_cols;
  Eigen::MatrixXd c_small;
  Eigen::MatrixXd z;  // A^-1 E
  Eigen::PartialPivLU<Eigen::MatrixXd> s_lu;

  Impl() {
    cholmod_start(&common);
    common.supernodal = CHOLMOD_SUPERNODAL;
    common.final_ll = 1;
    common.print = 0;
  }
  ~Impl() {
    free_lu();
    if (factor) cholmod_free_factor(&factor, &common);
    cholmod_finish(&common);
  }

  void free_lu() {
    if (numeric) umfpack_di_free_numeric(&numeric);
    if (symbolic) umfpack_di_free_symbolic(&symbolic);
    numeric = symbolic = nullptr;
  }

  bool same_pattern(const SparseMatrix& k) const {
    if (k.rows() != analyzed_n) return false;
    return std::equal(k.outerIndexPtr(), k.outerIndexPtr() + k.cols() + 1, analyzed_outer.begin()) &&
           static_cast<std::size_t>(k.nonZeros()) == analyzed_inner.size() &&
           std::equal(k.innerIndexPtr(), k.innerIndexPtr() + k.nonZeros(), analyzed_inner.begin());
  }

  Eigen::VectorXd chol_solve(const Eigen::VectorXd& b) {
    Eigen::VectorXd bb = b;
    cholmod_dense rhs = Eigen::viewAsCholmod(bb);
    cholmod_dense* x = cholmod_solve(CHOLMOD_A, factor, &rhs, &common);
    if (!x) throw SingularSystem("linear solver: Cholesky solve failed");
    Eigen::VectorXd out = Eigen::Map<Eigen::VectorXd>(static_cast<double*>(x->x), b.size());
    cholmod_free_dense(&x, &common);
    return out;
  }

  bool try_cholesky(const SparseMatrix& k) {
    SparseMatrix& km = const_cast<SparseMatrix&>(k);
    cholmod_sparse a = Eigen::viewAsCholmod(Eigen::Ref<SparseMatrix>(km));
    a.stype = -1;
    if (!factor || !same_pattern(k)) {
      if (factor) cholmod_free_factor(&factor, &common);
      factor = cholmod_analyze(&a, &common);
      if (!factor) throw SingularSystem("linear solver: symbolic analysis failed");
      analyzed_n = static_cast<int>(k.rows());
      analyzed_outer.assign(k.outerIndexPtr(), k.outerIndexPtr() + k.cols() + 1);
      analyzed_inner.assign(k.innerIndexPtr(), k.innerIndexPtr() + k.nonZeros());
    }
    cholmod_factorize(&a, factor, &common);
    if (common.status == CHOLMOD_NOT_POSDEF || common.status < 0) return false;
    const double rc = cholmod_rcond(factor, &common);
    return rc >= kPivotRatio;
  }

  void factor_lu(const SparseMatrix& k, const std::vector<NonsymmetricBlock>& blocks) {
    free_lu();
    std::vector<Triplet> t;
    for (const auto& b : blocks) {
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
          if (b.dofs[r] >= 0 && b.dofs[c] >= 0) t.emplace_back(b.dofs[r], b.dofs[c], b.k(r, c));
        }
      }
    }
    SparseMatrix extra(k.rows(), k.cols());
    extra.setFromTriplets(t.begin(), t.end());
    lu_matrix = k + extra;
    lu_matrix.makeCompressed();
    double control[UMFPACK_CONTROL];
    double info[UMFPACK_INFO];
    umfpack_di_defaults(control);
    control[UMFPACK_STRATEGY] = UMFPACK_STRATEGY_SYMMETRIC;
    const int n = static_cast<int>(lu_matrix.rows());
    int status = umfpack_di_symbolic(n, n, lu_matrix.outerIndexPtr(), lu_matrix.innerIndexPtr(),
                                     lu_matrix.valuePtr(), &symbolic, control, info);
    if (status != UMFPACK_OK) throw SingularSystem("linear solver: LU symbolic analysis failed");
    status = umfpack_di_numeric(lu_matrix.outerIndexPtr(), lu_matrix.innerIndexPtr(), lu_matrix.valuePtr(), symbolic,
                                &numeric, control, info);
    if (status == UMFPACK_WARNING_singular_matrix || status != UMFPACK_OK || !(info[UMFPACK_RCOND] >= kPivotRatio)) {
      throw SingularSystem("linear solver: matrix is singular (reciprocal pivot ratio " +
                           std::to_string(info[UMFPACK_RCOND]) + ")");
    }
    lu = true;
  }

  Eigen::VectorXd lu_solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd x(b.size());
    double control[UMFPACK_CONTROL];
    double info[UMFPACK_INFO];
    umfpack_di_defaults(control);
    const int status = umfpack_di_solve(UMFPACK_A, lu_matrix.outerIndexPtr(), lu_matrix.innerIndexPtr(),
                                        lu_matrix.valuePtr(), x.data(), b.data(), numeric, control, info);
    if (status != UMFPACK_OK) throw SingularSystem("linear solver: LU solve failed");
    return x;
  }
};

LinearSolver::LinearSolver() : impl_(std::make_unique<Impl>()) {}
LinearSolver::~LinearSolver() = default;

bool LinearSolver::used_lu() const { return impl_->lu; }

void LinearSolver::factorize(const SparseMatrix& k, const std::vector<NonsymmetricBlock>& blocks) {
  Impl& s = *impl_;
  s.lu = false;
  s.e_cols.clear();
  if (k.rows() == 0) return;
  if (!s.try_cholesky(k)) {
    s.factor_lu(k, blocks);
    return;
  }
  // Woodbury correction for the non-symmetric blocks.
  std::vector<std::pair<int, int>> entries;  // (block, local index)
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (int c = 0; c < 3; ++c) {
      if (blocks[b].dofs[c] >= 0) entries.emplace_back(static_cast<int>(b), c);
    }
  }
  const int m = static_cast<int>(entries.size());
  if (m == 0) return;
  s.e_cols.resize(m);
  s.c_small = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    s.e_cols[i] = blocks[entries[i].first].dofs[entries[i].second];
    for (int j = 0; j < m; ++j) {
      if (entries[i].first == entries[j].first) {
        s.c_small(i, j) = blocks[entries[i].first].k(entries[i].second, entries[j].second);
      }
    }
  }
  s.z.resize(k.rows(), m);
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(k.rows());
    e[s.e_cols[i]] = 1.0;
    s.z.col(i) = s.chol_solve(e);
  }
  Eigen::MatrixXd ez(m, m);
  for (int i = 0; i < m; ++i) ez.row(i) = s.z.row(s.e_cols[i]);
  const Eigen::MatrixXd small = Eigen::MatrixXd::Identity(m, m) + s.c_small * ez;
  s.s_lu.compute(small);
  if (!(std::abs(s.s_lu.determinant()) > kPivotRatio)) s.factor_lu(k, blocks);
}

Eigen::VectorXd LinearSolver::solve(const Eigen::VectorXd& b) const {
  Impl& s = *impl_;
  if (b.size() == 0) return b;
  if (s.lu) return s.lu_solve(b);
  Eigen::VectorXd y = s.chol_solve(b);
  if (s.e_cols.empty()) return y;
  Eigen::VectorXd ey(s.e_cols.size());
  for (std::size_t i = 0; i < s.e_cols.size(); ++i) ey[i] = y[s.e_cols[i]];
  const Eigen::VectorXd w = s.s_lu.solve(s.c_small * ey);
  return y - s.z * w;
}

Eigen::VectorXd solid_part(const DofMap& dofs, const Eigen::VectorXd& d) { return d.head(3 * dofs.n_solid_nodes); }
Eigen::VectorXd beam_part(const DofMap& dofs, const Eigen::VectorXd& d) { return d.tail(6 * dofs.n_beam_nodes); }

namespace {

struct StepFailed {
  std::string reason;
};

class NewtonDriver {
 public:
  explicit NewtonDriver(const Problem& p) : problem_(p), settings_(p.model().solver) {
    result_.d = Eigen::VectorXd::Zero(p.dofs().size());
  }

  SolveResult run() {
    const int n = settings_.n_load_steps;
    double previous = 0.0;
    for (int step = 1; step <= n; ++step) {
      const double target = static_cast<double>(step) / n;
      advance(step, previous, target, 0);
      previous = target;
    }
    return std::move(result_);
  }

 private:
  void advance(int step, double from, double to, int depth) {
    const Eigen::VectorXd saved = result_.d;
    std::string reason;
    try {
      iterate(step, to);
      return;
    } catch (const StepFailed& f) {
      reason = f.reason;
    } catch (const InadmissibleState& e) {
      reason = e.what();
    }
    result_.d = saved;
    if (depth >= settings_.max_cutbacks) {
      throw SolveFailure("load step " + std::to_string(step) + " failed at load factor " + std::to_string(to) +
                             " after " + std::to_string(depth) + " cutbacks: " + reason,
                         result_.log);
    }
    ++result_.cutbacks;
    const double mid = 0.5 * (from + to);
    advance(step, from, mid, depth + 1);
    advance(step, mid, to, depth + 1);
  }

  void iterate(int step, double factor) {
    const DofMap& dofs = problem_.dofs();
    for (int i = 0; i < dofs.size(); ++i) {
      if (dofs.fixed[i]) result_.d[i] = factor * dofs.prescribed[i];
    }
    GlobalSystem sys = assemble_global(problem_, result_.d, factor);
    ReducedSystem red = apply_dirichlet(sys, dofs.fixed);
    double f_norm = 0.0;
    for (int i : red.free) f_norm += sys.f_ext[i] * sys.f_ext[i];
    const double tol = settings_.newton_tol * std::max(1.0, std::sqrt(f_norm));
    double r_norm = red.residual.norm();
    result_.log.push_back({step, 0, r_norm, 0.0});
    if (!std::isfinite(r_norm)) throw StepFailed{"non-finite residual"};
    for (int it = 1; r_norm >= tol; ++it) {
      if (it > settings_.newton_max_iter) {
        throw StepFailed{"no convergence in " + std::to_string(settings_.newton_max_iter) + " iterations (residual " +
                         std::to_string(r_norm) + ")"};
      }
      solver_.factorize(red.tangent, red.blocks);
      const Eigen::VectorXd dx = -solver_.solve(red.residual);
      if (!dx.allFinite()) throw StepFailed{"non-finite increment"};
      for (std::size_t i = 0; i < red.free.size(); ++i) result_.d[red.free[i]] += dx[i];
      sys = assemble_global(problem_, result_.d, factor);
      red = apply_dirichlet(sys, dofs.fixed);
      r_norm = red.residual.norm();
      result_.log.push_back({step, it, r_norm, dx.norm()});
      if (!std::isfinite(r_norm)) throw StepFailed{"non-finite residual"};
    }
    result_.load_factor = factor;
    result_.reactions = red.reactions;
  }

  const Problem& problem_;
  SolverSettings settings_;
  LinearSolver solver_;
  SolveResult result_;
};

}  // namespace

SolveResult newton_solve(const Problem& problem) {
  NewtonDriver driver(problem);
  return driver.run();
}

}  // namespace fibergrid
