#pragma once

// Discrete geometry: structured hex8 solid grids and Hermite fiber meshes.

#include "fibergrid/types.hpp"

#include <array>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace fibergrid {

/// Per-component fixity applied to every node of a named set.
struct SolidDirichlet {
  std::string set;
  std::array<bool, 3> fixed{true, true, true};
  Vec3 value = Vec3::Zero();
};

/// Constant reference traction (N/m^2) on one parametric face of each listed
/// element. Faces: 0 xi=-1, 1 xi=+1, 2 eta=-1, 3 eta=+1, 4 zeta=-1, 5 zeta=+1.
struct SolidNeumann {
  std::vector<int> elements;
  int face = 0;
  Vec3 traction = Vec3::Zero();
};

/// Hex8 mesh in the reference configuration. Element node order follows the
/// usual right-handed convention: bottom face (zeta=-1) counter-clockwise,
/// then the top face.
struct SolidMesh {
  std::vector<Vec3> nodes;
  std::vector<std::array<int, 8>> elements;
  std::map<std::string, std::vector<int>> node_sets;
  std::vector<SolidDirichlet> dirichlet;
  std::vector<SolidNeumann> neumann;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_elements() const { return static_cast<int>(elements.size()); }
  std::array<Vec3, 8> element_coords(int e) const;

  /// Throws InputError on dangling indices, non-finite coordinates, inverted
  /// elements or references to unknown node sets.
  void validate() const;
};

/// Circular cross section data.
struct CrossSection {
  double area = 0.0;
  double inertia = 0.0;
  double radius = 0.0;

  static CrossSection circular(double radius);
};

/// Centerline node: reference position and reference unit tangent dr/ds.
struct BeamNode {
  Vec3 position = Vec3::Zero();
  Vec3 tangent = Vec3::UnitX();
};

struct BeamElement {
  std::array<int, 2> nodes{0, 1};
  double length = 0.0;
};

/// One fiber discretized with two-node Hermite elements.
struct BeamMesh {
  std::vector<BeamNode> nodes;
  std::vector<BeamElement> elements;
  CrossSection section;
  double youngs_modulus = 0.0;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_elements() const { return static_cast<int>(elements.size()); }
  /// Sum of element lengths (the arc-length measure used by all integrals).
  double total_length() const;
  /// Arc-length coordinate of the start of each element.
  std::vector<double> element_offsets() const;

  void validate() const;
};

struct LineCurve {
  Vec3 start = Vec3::Zero();
  Vec3 end = Vec3::UnitX();
};

/// Circular helix around `axis` through `base`. `pitch` is the rise per turn;
/// `ref_dir` fixes the angular origin (projected orthogonal to the axis).
struct HelixCurve {
  Vec3 base = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();
  Vec3 ref_dir = Vec3::UnitX();
  double radius = 1.0;
  double pitch = 1.0;
  double turns = 1.0;
  bool right_handed = true;
};

using Curve = std::variant<LineCurve, HelixCurve>;

/// Point and unit tangent at normalized parameter u in [0,1] (constant speed).
Vec3 curve_point(const Curve& curve, double u);
Vec3 curve_tangent(const Curve& curve, double u);
double curve_length(const Curve& curve);

SolidMesh build_solid_grid(int nx, int ny, int nz, const Vec3& dims, const Vec3& origin = Vec3::Zero());

/// Node index of grid point (i, j, k) of a grid built by build_solid_grid.
inline int grid_node(int nx, int ny, int i, int j, int k) { return i + (nx + 1) * (j + (ny + 1) * k); }

/// Places n_elements+1 nodes at equal curve-parameter increments. Nodal
/// tangents are the analytic unit tangents; every element length is the
/// analytic arc length divided by n_elements.
BeamMesh discretize_fiber(const Curve& curve, int n_elements);

/// Nodes of `mesh` inside the closed box [lo, hi] (with tolerance tol).
std::vector<int> nodes_in_box(const SolidMesh& mesh, const Vec3& lo, const Vec3& hi, double tol = 1e-9);

}  // namespace fibergrid
