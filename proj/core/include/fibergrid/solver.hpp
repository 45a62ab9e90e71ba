#pragma once

// Global DOF management, assembly, Dirichlet elimination, sparse direct
// solves and the load-stepped Newton-Raphson driver.

#include "fibergrid/coupling.hpp"
#include "fibergrid/model.hpp"

#include <memory>
#include <string>
#include <vector>

namespace fibergrid {

/// Global ordering: solid node k -> 3k..3k+2; global beam node l ->
/// 3 n_S + 6 l + (0..2 position, 3..5 tangent).
struct DofMap {
  int n_solid_nodes = 0;
  int n_beam_nodes = 0;
  std::vector<int> fiber_offset;  // first global beam node of each fiber
  std::vector<char> fixed;        // Dirichlet mask per global DOF
  Eigen::VectorXd prescribed;     // prescribed value at load factor 1

  int size() const { return 3 * n_solid_nodes + 6 * n_beam_nodes; }
  int solid(int node, int c) const { return 3 * node + c; }
  int beam_position(int fiber, int node, int c) const {
    return 3 * n_solid_nodes + 6 * (fiber_offset[fiber] + node) + c;
  }
  int beam_tangent(int fiber, int node, int c) const { return beam_position(fiber, node, c) + 3; }
  std::vector<int> free_dofs() const;
  int num_fixed() const;

  static DofMap build(const Model& model);
};

/// Follower load of a nodal moment on one beam node (load factor 1).
struct MomentLoad {
  int fiber = 0;
  int node = 0;
  Vec3 moment = Vec3::Zero();
};

/// Non-symmetric 3x3 tangent contribution on three global DOFs.
struct NonsymmetricBlock {
  std::array<int, 3> dofs{};
  Mat3 k = Mat3::Zero();
};

/// Everything derived once from a Model: meshes, coupling operators (built in
/// the reference configuration), load vectors and the sparsity pattern.
class Problem {
 public:
  explicit Problem(Model model);
  ~Problem();
  Problem(const Problem&) = delete;
  Problem& operator=(const Problem&) = delete;

  const Model& model() const { return model_; }
  const SolidMesh& solid() const { return model_.solid.mesh; }
  const std::vector<BeamMesh>& fibers() const { return fibers_; }
  const DofMap& dofs() const { return dofs_; }
  const SolidLocator& locator() const { return *locator_; }
  const FiberSegments& segments() const { return segments_; }
  /// Mortar operators, or the Dirac-multiplier form of the GPTS constraints.
  const MortarOperators& operators() const { return operators_; }
  const std::vector<CouplingPoint>& gpts_points() const { return gpts_points_; }
  /// Constant coupling stiffness eps [-M D]^T kappa^-1 [-M D], global size.
  const SparseMatrix& coupling_matrix() const { return coupling_; }
  /// Dead loads (line loads and solid tractions) at load factor 1.
  const Eigen::VectorXd& dead_load() const { return dead_load_; }
  const std::vector<MomentLoad>& moments() const { return moments_; }
  /// Informational messages (e.g. eliminated multiplier nodes).
  const std::vector<std::string>& notes() const { return notes_; }

  struct Pattern;
  const Pattern& pattern() const { return *pattern_; }

 private:
  Model model_;
  std::vector<BeamMesh> fibers_;
  DofMap dofs_;
  std::unique_ptr<SolidLocator> locator_;
  FiberSegments segments_;
  MortarOperators operators_;
  std::vector<CouplingPoint> gpts_points_;
  SparseMatrix coupling_;
  Eigen::VectorXd dead_load_;
  std::vector<MomentLoad> moments_;
  std::vector<std::string> notes_;
  std::unique_ptr<Pattern> pattern_;
};

struct GlobalSystem {
  Eigen::VectorXd residual;  // f_int + f_c - f_ext
  Eigen::VectorXd f_ext;
  SparseMatrix tangent;      // symmetric part (solid, beam, coupling)
  std::vector<NonsymmetricBlock> blocks;  // follower-moment stiffness

  SparseMatrix full_tangent() const;
};

/// Residual and tangent at displacement d and load factor. Element
/// evaluation runs on worker threads; results are reduced in element order,
/// so the output does not depend on the thread count.
GlobalSystem assemble_global(const Problem& problem, const Eigen::VectorXd& d, double load_factor,
                             bool with_tangent = true);

struct ReducedSystem {
  std::vector<int> free;          // reduced index -> global DOF
  std::vector<int> reduced_index; // global DOF -> reduced index or -1
  SparseMatrix tangent;
  std::vector<NonsymmetricBlock> blocks;  // reduced indices, -1 for eliminated DOFs
  Eigen::VectorXd residual;
  Eigen::VectorXd reactions;  // global size; residual on constrained DOFs
};

ReducedSystem apply_dirichlet(const GlobalSystem& system, const std::vector<char>& fixed);

/// Sparse direct solver for K + sum_b E_b C_b E_b^T: supernodal Cholesky of
/// the symmetric part with a Woodbury correction for the small non-symmetric
/// blocks; falls back to LU of the full matrix when the symmetric part is not
/// positive definite. Throws SingularSystem for a (numerically) singular
/// matrix.
class LinearSolver {
 public:
  LinearSolver();
  ~LinearSolver();
  LinearSolver(const LinearSolver&) = delete;
  LinearSolver& operator=(const LinearSolver&) = delete;

  void factorize(const SparseMatrix& k, const std::vector<NonsymmetricBlock>& blocks = {});
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  bool used_lu() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct ConvergenceRecord {
  int load_step = 0;
  int iter = 0;
  double residual_norm = 0.0;
  double increment_norm = 0.0;
};

struct SolveResult {
  Eigen::VectorXd d;
  double load_factor = 0.0;
  Eigen::VectorXd reactions;
  std::vector<ConvergenceRecord> log;
  int cutbacks = 0;
};

class SolveFailure : public NonConvergence {
 public:
  SolveFailure(const std::string& what, std::vector<ConvergenceRecord> log)
      : NonConvergence(what), log_(std::move(log)) {}
  const std::vector<ConvergenceRecord>& log() const { return log_; }

 private:
  std::vector<ConvergenceRecord> log_;
};

/// Load-stepped Newton-Raphson. Each step iterates until
/// |r_free| < tol * max(1, |f_ext,free|); a failed step (no convergence or
/// inadmissible state) is bisected up to max_cutbacks times.
SolveResult newton_solve(const Problem& problem);

/// Number of worker threads: FIBERGRID_THREADS if set, else the hardware
/// concurrency.
int worker_threads();

/// Views into the global vector.
Eigen::VectorXd solid_part(const DofMap& dofs, const Eigen::VectorXd& d);
Eigen::VectorXd beam_part(const DofMap& dofs, const Eigen::VectorXd& d);

}  // namespace fibergrid
