#pragma once

// Beam-centerline-to-solid-volume coupling: point projection, segmentation
// at element crossings and solid exits, quadrature, mortar (D, M, kappa) and
// Gauss-point-to-segment operators, and the penalty-regularized coupling
// forces.
//
// Global vector ordering used throughout: [d_S; d_B] with 3 DOFs per solid
// node followed by 6 DOFs per beam node (positions, then tangents), fibers
// concatenated in input order.

#include "fibergrid/mesh.hpp"
#include "fibergrid/types.hpp"

#include <Eigen/Sparse>

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fibergrid {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class CouplingScheme { Mortar, Gpts };
enum class IntegrationType { SegmentBased, ElementBased };

struct ProjectionTolerances {
  double projection = 1e-12;  // physical residual, relative to element diameter
  double inside = 1e-10;      // parametric slack for the inside test
};

struct CouplingConfig {
  CouplingScheme scheme = CouplingScheme::Mortar;
  int mortar_order = 1;  // 1, 2 or 3; ignored for GPTS
  IntegrationType integration = IntegrationType::SegmentBased;
  int n_gauss = 6;
  double penalty = 0.0;  // N/m^2
  int n_sample = 20;
  double tol_segment = 1e-10;
  ProjectionTolerances tolerances;

  void validate() const;
  /// "mortar-linear", "mortar-quadratic", "mortar-cubic" or "gpts".
  std::string scheme_name() const;
  /// Parses a scheme name into scheme/mortar_order. Throws InputError.
  void set_scheme(const std::string& name);
};

struct ProjectionResult {
  int element = -1;
  Vec3 xi = Vec3::Zero();
  bool inside = false;
};

/// Axis-aligned bounding-box bins over the solid elements.
class SolidLocator {
 public:
  explicit SolidLocator(const SolidMesh& mesh);
  /// Elements whose (slightly inflated) bounding box contains p, ascending id.
  std::vector<int> candidates(const Vec3& p) const;
  const SolidMesh& mesh() const { return *mesh_; }

 private:
  const SolidMesh* mesh_;
  std::vector<Vec3> box_lo_, box_hi_;
  Vec3 origin_ = Vec3::Zero();
  Vec3 cell_ = Vec3::Ones();
  std::array<int, 3> dims_{1, 1, 1};
  std::vector<std::vector<int>> bins_;
};

/// Newton inversion of the trilinear map of element e. Returns nullopt if the
/// iteration does not converge; otherwise the parametric point and whether it
/// lies inside [-1,1]^3 (with tolerance).
std::optional<ProjectionResult> project_to_element(const SolidMesh& mesh, int e, const Vec3& p,
                                                   const ProjectionTolerances& tol = {});

/// Finds the hosting element of p. The hint element is tried first; the
/// remaining candidates are tried in ascending id. nullopt means the point is
/// outside the solid.
std::optional<ProjectionResult> project_to_solid(const Vec3& p, const SolidLocator& locator,
                                                 std::optional<int> hint = std::nullopt,
                                                 const ProjectionTolerances& tol = {});
std::optional<ProjectionResult> project_to_solid(const Vec3& p, const SolidMesh& mesh,
                                                 std::optional<int> hint = std::nullopt,
                                                 const ProjectionTolerances& tol = {});

/// Part of a beam element's parameter range hosted by one solid element
/// (host == -1 marks a part outside the solid).
struct Segment {
  int beam_element = 0;
  double xi_a = -1.0;
  double xi_b = 1.0;
  int host = -1;

  bool hosted() const { return host >= 0; }
};

/// Splits beam element e of `beam` at solid-element crossings and solid
/// exits, in the reference configuration. Segments are ordered and cover
/// [-1, 1].
std::vector<Segment> segment_beam_element(const BeamMesh& beam, int e, const SolidLocator& locator,
                                          const CouplingConfig& cfg);

/// Segments of every element of every fiber: result[fiber][element].
using FiberSegments = std::vector<std::vector<std::vector<Segment>>>;
FiberSegments segment_fibers(std::span<const BeamMesh> fibers, const SolidLocator& locator,
                             const CouplingConfig& cfg);

/// Lagrange basis of the given order on equidistant nodes in [-1, 1].
std::vector<double> lagrange_shape(int order, double xi);

/// One quadrature point of the coupling integrals.
struct CouplingPoint {
  int fiber = 0;
  int beam_element = 0;
  double xi = 0.0;
  double weight = 0.0;  // includes ds/dxi
  int host = -1;
  Vec3 host_xi = Vec3::Zero();
  Vec3 position = Vec3::Zero();
};

/// Quadrature points on the hosted parts of all fibers, ordered by (fiber,
/// element, segment, Gauss index). Segment-based: n_gauss per hosted
/// segment. Element-based: n_gauss per contiguous in-solid interval of each
/// element.
std::vector<CouplingPoint> coupling_points(std::span<const BeamMesh> fibers, const SolidMesh& mesh,
                                           const FiberSegments& segments, const CouplingConfig& cfg);

struct MultiplierNode {
  int fiber = 0;
  int beam_element = 0;  // element the node is placed on (first one for shared nodes)
  double xi = -1.0;
  double arc_length = 0.0;  // position along the fiber
  Vec3 position = Vec3::Zero();
  bool active = true;
};

/// Scalar mortar operators; every block in the 3D system is the scalar entry
/// times the 3x3 identity. D columns: 2 l for the position and 2 l + 1 for the
/// tangent of global beam node l.
struct MortarOperators {
  int n_solid_nodes = 0;
  int n_beam_nodes = 0;
  SparseMatrix D;  // n_lambda x 2 n_B
  SparseMatrix M;  // n_lambda x n_S
  Eigen::VectorXd kappa;
  std::vector<MultiplierNode> nodes;
  std::vector<int> eliminated;  // zero-support multiplier nodes

  int n_lambda() const { return static_cast<int>(kappa.size()); }
  int n_dofs() const { return 3 * n_solid_nodes + 6 * n_beam_nodes; }
  /// D and M expanded to 3 n_lambda x 6 n_B and 3 n_lambda x 3 n_S.
  SparseMatrix D_expanded() const;
  SparseMatrix M_expanded() const;
  /// [-M D] expanded to 3 n_lambda x n_dofs in the global ordering.
  SparseMatrix constraint_matrix() const;
};

/// Global beam-node offset of each fiber (and the total at the end).
std::vector<int> fiber_node_offsets(std::span<const BeamMesh> fibers);

/// Mortar operators for the configured multiplier order. Multiplier nodes are
/// shared between consecutive elements of one fiber.
MortarOperators assemble_mortar(std::span<const BeamMesh> fibers, const SolidMesh& mesh,
                                const FiberSegments& segments, const CouplingConfig& cfg);
MortarOperators assemble_mortar(std::span<const BeamMesh> fibers, const SolidMesh& mesh, const CouplingConfig& cfg);

/// Gauss-point-to-segment constraints: one 3-component constraint per
/// coupling point.
struct GptsConstraintSet {
  std::vector<CouplingPoint> points;
  /// Equivalent operator form (Dirac multipliers): D_j = w_j H(xi_j),
  /// M_j = w_j N(chi(xi_j)), kappa_j = w_j.
  MortarOperators operators;
};

GptsConstraintSet assemble_gpts(std::span<const BeamMesh> fibers, const SolidMesh& mesh,
                                const FiberSegments& segments, const CouplingConfig& cfg);
GptsConstraintSet assemble_gpts(std::span<const BeamMesh> fibers, const SolidMesh& mesh, const CouplingConfig& cfg);

struct CouplingForces {
  Eigen::VectorXd gap;      // g_c, 3 n_lambda
  Eigen::VectorXd solid;    // f_c^S
  Eigen::VectorXd beam;     // f_c^B
  SparseMatrix k_ss, k_sb, k_bs, k_bb;
};

/// Penalty coupling with lambda = eps kappa^-1 g_c, g_c = [-M D] [d_S; d_B]:
/// f_c^S = -eps M^T kappa^-1 g_c, f_c^B = eps D^T kappa^-1 g_c.
CouplingForces coupling_force_stiffness(const MortarOperators& ops, double penalty, const Eigen::VectorXd& d_solid,
                                        const Eigen::VectorXd& d_beam);

/// eps [-M D]^T kappa^-1 [-M D] in the global ordering.
SparseMatrix coupling_stiffness(const MortarOperators& ops, double penalty);

/// Nodal multipliers lambda_j = eps kappa_jj^-1 g_c,j (N/m); zero for
/// eliminated nodes. `d` is the global vector [d_S; d_B].
std::vector<Vec3> recover_lagrange(const MortarOperators& ops, double penalty, const Eigen::VectorXd& d);

/// CSV dump: beam_elem,xi_a,xi_b,host_elem (global element numbering across
/// fibers; host -1 for parts outside the solid).
void write_segments_csv(std::ostream& os, const FiberSegments& segments);

}  // namespace fibergrid
