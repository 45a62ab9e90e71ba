#include "fibergrid/mesh.hpp"

#include "fibergrid/solid.hpp"

#include <cmath>
#include <numbers>

namespace fibergrid {

std::array<Vec3, 8> SolidMesh::element_coords(int e) const {
  std::array<Vec3, 8> x;
  for (int a = 0; a < 8; ++a) x[a] = nodes[elements[e][a]];
  return x;
}

void SolidMesh::validate() const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!nodes[i].allFinite()) throw InputError("solid.nodes[" + std::to_string(i) + "]", "non-finite coordinate");
  }
  const int n = num_nodes();
  for (std::size_t e = 0; e < elements.size(); ++e) {
    const std::string where = "solid.elements[" + std::to_string(e) + "]";
    for (int idx : elements[e]) {
      if (idx < 0 || idx >= n) throw InputError(where, "node index " + std::to_string(idx) + " out of range");
    }
    const auto x = element_coords(static_cast<int>(e));
    for (int a = 0; a < 8; ++a) {
      const Hex8Shape s = hex8_shape(hex8_corner(a));
      const Mat3 jac = hex8_jacobian(x, s);
      if (!(jac.determinant() > 0.0)) throw InputError(where, "non-positive Jacobian at corner " + std::to_string(a));
    }
  }
  for (const auto& [name, set] : node_sets) {
    for (int idx : set) {
      if (idx < 0 || idx >= n) throw InputError("solid.node_sets." + name, "node index out of range");
    }
  }
  for (const auto& d : dirichlet) {
    if (!node_sets.contains(d.set)) throw InputError("solid.dirichlet", "undefined node set \"" + d.set + "\"");
  }
  for (const auto& nm : neumann) {
    if (nm.face < 0 || nm.face > 5) throw InputError("solid.neumann", "face id must be in 0..5");
    for (int e : nm.elements) {
      if (e < 0 || e >= num_elements()) throw InputError("solid.neumann", "element index out of range");
    }
  }
}

CrossSection CrossSection::circular(double radius) {
  const double r2 = radius * radius;
  return CrossSection{std::numbers::pi * r2, std::numbers::pi * r2 * r2 / 4.0, radius};
}

double BeamMesh::total_length() const {
  double l = 0.0;
  for (const auto& e : elements) l += e.length;
  return l;
}

std::vector<double> BeamMesh::element_offsets() const {
  std::vector<double> off(elements.size());
  double s = 0.0;
  for (std::size_t i = 0; i < elements.size(); ++i) {
    off[i] = s;
    s += elements[i].length;
  }
  return off;
}

void BeamMesh::validate() const {
  const int n = num_nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string where = "beam.nodes[" + std::to_string(i) + "]";
    if (!nodes[i].position.allFinite() || !nodes[i].tangent.allFinite()) throw InputError(where, "non-finite value");
    if (!(nodes[i].tangent.norm() > 0.0)) throw InputError(where, "zero reference tangent");
  }
  for (std::size_t e = 0; e < elements.size(); ++e) {
    const std::string where = "beam.elements[" + std::to_string(e) + "]";
    for (int idx : elements[e].nodes) {
      if (idx < 0 || idx >= n) throw InputError(where, "node index out of range");
    }
    if (!(elements[e].length > 0.0)) throw InputError(where, "element length must be positive");
  }
  if (!(section.area > 0.0) || !(section.inertia > 0.0)) throw InputError("beam.section", "area and inertia must be positive");
  if (!(youngs_modulus > 0.0)) throw InputError("beam.E", "Young's modulus must be positive");
}

namespace {

struct HelixFrame {
  Vec3 axis, e1, e2;
  double angle;  // total swept angle
};

HelixFrame helix_frame(const HelixCurve& h) {
  HelixFrame f;
  f.axis = h.axis.normalized();
  f.e1 = (h.ref_dir - h.ref_dir.dot(f.axis) * f.axis).normalized();
  f.e2 = f.axis.cross(f.e1);
  if (!h.right_handed) f.e2 = -f.e2;
  f.angle = 2.0 * std::numbers::pi * h.turns;
  return f;
}

}  // namespace

Vec3 curve_point(const Curve& curve, double u) {
  if (const auto* l = std::get_if<LineCurve>(&curve)) return l->start + u * (l->end - l->start);
  const auto& h = std::get<HelixCurve>(curve);
  const HelixFrame f = helix_frame(h);
  const double th = u * f.angle;
  return h.base + h.radius * (std::cos(th) * f.e1 + std::sin(th) * f.e2) + (h.pitch * h.turns * u) * f.axis;
}

Vec3 curve_tangent(const Curve& curve, double u) {
  if (const auto* l = std::get_if<LineCurve>(&curve)) return (l->end - l->start).normalized();
  const auto& h = std::get<HelixCurve>(curve);
  const HelixFrame f = helix_frame(h);
  const double th = u * f.angle;
  const Vec3 d = h.radius * f.angle * (-std::sin(th) * f.e1 + std::cos(th) * f.e2) + (h.pitch * h.turns) * f.axis;
  return d.normalized();
}

double curve_length(const Curve& curve) {
  if (const auto* l = std::get_if<LineCurve>(&curve)) return (l->end - l->start).norm();
  const auto& h = std::get<HelixCurve>(curve);
  const double circ = 2.0 * std::numbers::pi * h.radius;
  return h.turns * std::sqrt(circ * circ + h.pitch * h.pitch);
}

SolidMesh build_solid_grid(int nx, int ny, int nz, const Vec3& dims, const Vec3& origin) {
  if (nx < 1 || ny < 1 || nz < 1) throw InputError("grid", "element counts must be >= 1");
  if (!(dims.minCoeff() > 0.0)) throw InputError("grid", "dimensions must be positive");
  SolidMesh mesh;
  mesh.nodes.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1) * (nz + 1));
  for (int k = 0; k <= nz; ++k) {
    for (int j = 0; j <= ny; ++j) {
      for (int i = 0; i <= nx; ++i) {
        mesh.nodes.emplace_back(origin.x() + dims.x() * i / nx, origin.y() + dims.y() * j / ny,
                                origin.z() + dims.z() * k / nz);
      }
    }
  }
  mesh.elements.reserve(static_cast<std::size_t>(nx) * ny * nz);
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        mesh.elements.push_back({grid_node(nx, ny, i, j, k), grid_node(nx, ny, i + 1, j, k),
                                 grid_node(nx, ny, i + 1, j + 1, k), grid_node(nx, ny, i, j + 1, k),
                                 grid_node(nx, ny, i, j, k + 1), grid_node(nx, ny, i + 1, j, k + 1),
                                 grid_node(nx, ny, i + 1, j + 1, k + 1), grid_node(nx, ny, i, j + 1, k + 1)});
      }
    }
  }
  return mesh;
}

BeamMesh discretize_fiber(const Curve& curve, int n_elements) {
  if (n_elements < 1) throw InputError("fiber", "n_elements must be >= 1");
  const double length = curve_length(curve);
  if (!(length > 0.0)) throw InputError("fiber", "zero-length curve");
  BeamMesh mesh;
  mesh.nodes.resize(n_elements + 1);
  for (int i = 0; i <= n_elements; ++i) {
    const double u = static_cast<double>(i) / n_elements;
    mesh.nodes[i].position = curve_point(curve, u);
    mesh.nodes[i].tangent = curve_tangent(curve, u);
  }
  const double l_ele = length / n_elements;
  for (int e = 0; e < n_elements; ++e) mesh.elements.push_back({{e, e + 1}, l_ele});
  return mesh;
}

std::vector<int> nodes_in_box(const SolidMesh& mesh, const Vec3& lo, const Vec3& hi, double tol) {
  std::vector<int> out;
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const Vec3& x = mesh.nodes[i];
    if ((x.array() >= lo.array() - tol).all() && (x.array() <= hi.array() + tol).all()) out.push_back(i);
  }
  return out;
}

}  // namespace fibergrid
