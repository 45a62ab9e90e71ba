#include "fibergrid/postprocess.hpp"

#include "fibergrid/beam.hpp"
#include "fibergrid/quadrature.hpp"
#include "fibergrid/solid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace fibergrid {

namespace {

ElementVector element_displacement(const SolidMesh& mesh, const Eigen::VectorXd& d, int e) {
  ElementVector u;
  for (int a = 0; a < 8; ++a) u.segment<3>(3 * a) = d.segment<3>(3 * mesh.elements[e][a]);
  return u;
}

BeamVector beam_element_displacement(const Problem& p, const Eigen::VectorXd& d, int fiber, int e) {
  const auto& el = p.fibers()[fiber].elements[e];
  BeamVector v;
  for (int n = 0; n < 2; ++n) {
    v.segment<6>(6 * n) = d.segment<6>(p.dofs().beam_position(fiber, el.nodes[n], 0));
  }
  return v;
}

Vec3 hermite_value(const BeamVector& q, double xi, double length) {
  const HermiteShape h = hermite_shape(xi, length);
  Vec3 r = Vec3::Zero();
  for (int k = 0; k < 4; ++k) r += h.value[k] * q.segment<3>(3 * k);
  return r;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << std::setprecision(17);
  return os;
}

void vtk_header(std::ostream& os, const char* title) {
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
}

void vtk_vector(std::ostream& os, const Vec3& v) { os << v.x() << ' ' << v.y() << ' ' << v.z() << '\n'; }

}  // namespace

std::optional<Vec3> solid_displacement_at(const Problem& problem, const Eigen::VectorXd& d, const Vec3& point) {
  const auto pr = project_to_solid(point, problem.locator(), std::nullopt, problem.model().coupling.tolerances);
  if (!pr) return std::nullopt;
  const Hex8Shape s = hex8_shape(pr->xi);
  const ElementVector u = element_displacement(problem.solid(), d, pr->element);
  Vec3 out = Vec3::Zero();
  for (int a = 0; a < 8; ++a) out += s.N[a] * u.segment<3>(3 * a);
  return out;
}

Vec3 beam_displacement_at(const Problem& problem, const Eigen::VectorXd& d, int fiber, double s) {
  const BeamMesh& beam = problem.fibers()[fiber];
  const auto starts = beam.element_offsets();
  const double total = beam.total_length();
  s = std::clamp(s, 0.0, total);
  auto it = std::upper_bound(starts.begin(), starts.end(), s);
  const int e = std::max(0, static_cast<int>(it - starts.begin()) - 1);
  const double len = beam.elements[e].length;
  const double xi = std::clamp(2.0 * (s - starts[e]) / len - 1.0, -1.0, 1.0);
  return hermite_value(beam_element_displacement(problem, d, fiber, e), xi, len);
}

ErrorReport l2_error(const Problem& problem, const Eigen::VectorXd& d, const Problem& ref,
                     const Eigen::VectorXd& d_ref) {
  ErrorReport out;
  const SolidMesh& mesh = problem.solid();
  const GaussRule& g3 = gauss_legendre(3);
  double volume = 0.0, solid_sq = 0.0, h_sum = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto x = mesh.element_coords(e);
    const ElementVector u = element_displacement(mesh, d, e);
    volume += solid_element_volume(x);
    h_sum += std::cbrt(solid_element_volume(x));
    for (int k = 0; k < 3; ++k) {
      for (int j = 0; j < 3; ++j) {
        for (int i = 0; i < 3; ++i) {
          const Vec3 xi(g3.points[i], g3.points[j], g3.points[k]);
          const Hex8Shape s = hex8_shape(xi);
          const double dv = g3.weights[i] * g3.weights[j] * g3.weights[k] * hex8_jacobian(x, s).determinant();
          Vec3 pos = Vec3::Zero(), uh = Vec3::Zero();
          for (int a = 0; a < 8; ++a) {
            pos += s.N[a] * x[a];
            uh += s.N[a] * u.segment<3>(3 * a);
          }
          const auto ur = solid_displacement_at(ref, d_ref, pos);
          if (!ur) throw Error("l2_error: solid quadrature point outside the reference mesh");
          solid_sq += dv * (uh - *ur).squaredNorm();
        }
      }
    }
  }
  out.solid = std::sqrt(solid_sq) / volume;
  out.h_solid = mesh.num_elements() > 0 ? h_sum / mesh.num_elements() : 0.0;

  if (ref.fibers().size() != problem.fibers().size()) throw Error("l2_error: fiber count differs from reference");
  const GaussRule& g6 = gauss_legendre(6);
  double length = 0.0, beam_sq = 0.0;
  for (std::size_t f = 0; f < problem.fibers().size(); ++f) {
    const BeamMesh& beam = problem.fibers()[f];
    const auto starts = beam.element_offsets();
    length += beam.total_length();
    for (int e = 0; e < beam.num_elements(); ++e) {
      const double len = beam.elements[e].length;
      const BeamVector q = beam_element_displacement(problem, d, static_cast<int>(f), e);
      for (int i = 0; i < g6.size(); ++i) {
        const double xi = g6.points[i];
        const double s = starts[e] + 0.5 * (xi + 1.0) * len;
        const Vec3 diff = hermite_value(q, xi, len) - beam_displacement_at(ref, d_ref, static_cast<int>(f), s);
        beam_sq += g6.weights[i] * 0.5 * len * diff.squaredNorm();
      }
    }
  }
  out.beam = length > 0.0 ? std::sqrt(beam_sq) / length : 0.0;
  out.total = out.solid + out.beam;
  return out;
}

double convergence_order(std::span<const std::pair<double, double>> h_e) {
  if (h_e.size() < 2) throw Error("convergence_order: need at least two (h, e) pairs");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < h_e.size(); ++i) {
    const auto [h, e] = h_e[i];
    if (!(h > 0.0) || !(e > 0.0)) throw Error("convergence_order: h and e must be positive");
    if (i > 0 && !(h < h_e[i - 1].first)) throw Error("convergence_order: h must be strictly decreasing");
    const double x = std::log(h), y = std::log(e);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(h_e.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

SolutionSummary summarize(const Problem& problem, const SolveResult& result) {
  SolutionSummary s;
  const DofMap& dofs = problem.dofs();
  const Eigen::VectorXd& d = result.d;
  const SolidMesh& mesh = problem.solid();
  s.load_factor = result.load_factor;
  s.cutbacks = result.cutbacks;
  for (const auto& r : result.log) s.iterations += r.iter > 0 ? 1 : 0;

  for (int k = 0; k < dofs.n_solid_nodes; ++k) {
    s.max_solid_displacement = std::max(s.max_solid_displacement, d.segment<3>(3 * k).norm());
  }
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Mat3 stress =
        solid_element_average_stress(mesh.element_coords(e), element_displacement(mesh, d, e), problem.model().solid.material);
    s.peak_stress = std::max(s.peak_stress, stress.norm());
  }
  for (std::size_t f = 0; f < problem.fibers().size(); ++f) {
    const BeamMesh& beam = problem.fibers()[f];
    const int fi = static_cast<int>(f);
    s.tip_displacement.push_back(d.segment<3>(dofs.beam_position(fi, beam.num_nodes() - 1, 0)));
    for (int e = 0; e < beam.num_elements(); ++e) {
      const BeamVector q = beam_reference_dofs(beam, e) + beam_element_displacement(problem, d, fi, e);
      const CenterlinePoint c = centerline_eval(q, beam.elements[e].length, 0.0);
      s.max_mid_curvature = std::max(s.max_mid_curvature, curvature_vector(c).norm());
    }
  }

  // Resultants of reactions and loads: forces on translational DOFs, and
  // generalized tangent forces f_t converted to moments t x f_t.
  const GlobalSystem sys = assemble_global(problem, d, result.load_factor, false);
  auto accumulate = [&](const Eigen::VectorXd& v, const std::vector<char>* mask, Vec3& force, Vec3& moment) {
    auto take = [&](int dof) { return mask == nullptr || (*mask)[dof]; };
    for (int k = 0; k < dofs.n_solid_nodes; ++k) {
      Vec3 f = Vec3::Zero();
      for (int c = 0; c < 3; ++c) {
        if (take(dofs.solid(k, c))) f[c] = v[dofs.solid(k, c)];
      }
      force += f;
      moment += (mesh.nodes[k] + d.segment<3>(3 * k)).cross(f);
    }
    for (std::size_t fb = 0; fb < problem.fibers().size(); ++fb) {
      const BeamMesh& beam = problem.fibers()[fb];
      for (int n = 0; n < beam.num_nodes(); ++n) {
        Vec3 f = Vec3::Zero(), ft = Vec3::Zero();
        const int p0 = dofs.beam_position(static_cast<int>(fb), n, 0);
        for (int c = 0; c < 3; ++c) {
          if (take(p0 + c)) f[c] = v[p0 + c];
          if (take(p0 + 3 + c)) ft[c] = v[p0 + 3 + c];
        }
        const Vec3 x = beam.nodes[n].position + d.segment<3>(p0);
        const Vec3 t = beam.nodes[n].tangent + d.segment<3>(p0 + 3);
        force += f;
        moment += x.cross(f) + t.cross(ft);
      }
    }
  };
  if (result.reactions.size() == dofs.size()) {
    accumulate(result.reactions, &dofs.fixed, s.reaction_force, s.reaction_moment);
  }
  accumulate(sys.f_ext, nullptr, s.load_force, s.load_moment);
  s.multipliers = recover_lagrange(problem.operators(), problem.model().coupling.penalty, d);
  return s;
}

void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRecord>& log) {
  const auto old = os.precision(17);
  os << "load_step,iter,residual_norm,increment_norm\n";
  for (const auto& r : log) os << r.load_step << ',' << r.iter << ',' << r.residual_norm << ',' << r.increment_norm << '\n';
  os.precision(old);
}

void write_summary_csv(std::ostream& os, const SolutionSummary& s) {
  const auto old = os.precision(17);
  os << "quantity,value\n";
  os << "load_factor," << s.load_factor << '\n';
  os << "newton_iterations," << s.iterations << '\n';
  os << "cutbacks," << s.cutbacks << '\n';
  os << "max_solid_displacement," << s.max_solid_displacement << '\n';
  os << "max_mid_curvature," << s.max_mid_curvature << '\n';
  os << "peak_stress," << s.peak_stress << '\n';
  const char* axes[3] = {"x", "y", "z"};
  for (std::size_t f = 0; f < s.tip_displacement.size(); ++f) {
    for (int c = 0; c < 3; ++c) os << "tip_displacement_" << f << '_' << axes[c] << ',' << s.tip_displacement[f][c] << '\n';
    os << "tip_displacement_" << f << "_magnitude," << s.tip_displacement[f].norm() << '\n';
  }
  for (int c = 0; c < 3; ++c) os << "reaction_force_" << axes[c] << ',' << s.reaction_force[c] << '\n';
  for (int c = 0; c < 3; ++c) os << "reaction_moment_" << axes[c] << ',' << s.reaction_moment[c] << '\n';
  for (int c = 0; c < 3; ++c) os << "load_force_" << axes[c] << ',' << s.load_force[c] << '\n';
  for (int c = 0; c < 3; ++c) os << "load_moment_" << axes[c] << ',' << s.load_moment[c] << '\n';
  os.precision(old);
}

void export_fields(const Problem& problem, const SolveResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const SolidMesh& mesh = problem.solid();
  const DofMap& dofs = problem.dofs();
  const Eigen::VectorXd& d = result.d;
  const SolutionSummary summary = summarize(problem, result);

  {
    auto os = open_out(dir / "solid.vtk");
    vtk_header(os, "fibergrid solid");
    os << "POINTS " << mesh.num_nodes() << " double\n";
    for (const auto& x : mesh.nodes) vtk_vector(os, x);
    os << "CELLS " << mesh.num_elements() << ' ' << 9 * mesh.num_elements() << '\n';
    for (const auto& el : mesh.elements) {
      os << 8;
      for (int n : el) os << ' ' << n;
      os << '\n';
    }
    os << "CELL_TYPES " << mesh.num_elements() << '\n';
    for (int e = 0; e < mesh.num_elements(); ++e) os << "12\n";
    os << "POINT_DATA " << mesh.num_nodes() << "\nVECTORS displacement double\n";
    for (int k = 0; k < mesh.num_nodes(); ++k) vtk_vector(os, d.segment<3>(3 * k));
    os << "CELL_DATA " << mesh.num_elements() << "\nTENSORS pk2_stress double\n";
    for (int e = 0; e < mesh.num_elements(); ++e) {
      const Mat3 s =
          solid_element_average_stress(mesh.element_coords(e), element_displacement(mesh, d, e), problem.model().solid.material);
      for (int r = 0; r < 3; ++r) vtk_vector(os, s.row(r).transpose());
    }
  }

  {
    auto os = open_out(dir / "beams.vtk");
    vtk_header(os, "fibergrid beams");
    int n_points = 0, n_cells = 0;
    for (const auto& b : problem.fibers()) {
      n_points += b.num_nodes();
      n_cells += b.num_elements();
    }
    os << "POINTS " << n_points << " double\n";
    for (const auto& b : problem.fibers()) {
      for (const auto& n : b.nodes) vtk_vector(os, n.position);
    }
    os << "CELLS " << n_cells << ' ' << 3 * n_cells << '\n';
    for (std::size_t f = 0; f < problem.fibers().size(); ++f) {
      const int off = dofs.fiber_offset[f];
      for (const auto& el : problem.fibers()[f].elements) os << "2 " << off + el.nodes[0] << ' ' << off + el.nodes[1] << '\n';
    }
    os << "CELL_TYPES " << n_cells << '\n';
    for (int c = 0; c < n_cells; ++c) os << "3\n";
    os << "POINT_DATA " << n_points << "\nVECTORS displacement double\n";
    for (std::size_t f = 0; f < problem.fibers().size(); ++f) {
      for (int n = 0; n < problem.fibers()[f].num_nodes(); ++n) {
        vtk_vector(os, d.segment<3>(dofs.beam_position(static_cast<int>(f), n, 0)));
      }
    }
    os << "VECTORS tangent_increment double\n";
    for (std::size_t f = 0; f < problem.fibers().size(); ++f) {
      for (int n = 0; n < problem.fibers()[f].num_nodes(); ++n) {
        vtk_vector(os, d.segment<3>(dofs.beam_tangent(static_cast<int>(f), n, 0)));
      }
    }
    os << "CELL_DATA " << n_cells << "\nVECTORS mid_curvature double\n";
    for (std::size_t f = 0; f < problem.fibers().size(); ++f) {
      const BeamMesh& beam = problem.fibers()[f];
      for (int e = 0; e < beam.num_elements(); ++e) {
        const BeamVector q = beam_reference_dofs(beam, e) + beam_element_displacement(problem, d, static_cast<int>(f), e);
        vtk_vector(os, curvature_vector(centerline_eval(q, beam.elements[e].length, 0.0)));
      }
    }
  }

  const MortarOperators& ops = problem.operators();
  {
    auto os = open_out(dir / "multipliers.vtk");
    vtk_header(os, "fibergrid coupling multipliers");
    const int n = ops.n_lambda();
    os << "POINTS " << n << " double\n";
    for (const auto& node : ops.nodes) vtk_vector(os, node.position);
    os << "CELLS " << n << ' ' << 2 * n << '\n';
    for (int j = 0; j < n; ++j) os << "1 " << j << '\n';
    os << "CELL_TYPES " << n << '\n';
    for (int j = 0; j < n; ++j) os << "1\n";
    os << "POINT_DATA " << n << "\nVECTORS lambda double\n";
    for (const auto& l : summary.multipliers) vtk_vector(os, l);
  }
  {
    auto os = open_out(dir / "multipliers.csv");
    os << "node,fiber,arc_length,x,y,z,kappa,active,lambda_x,lambda_y,lambda_z\n";
    for (int j = 0; j < ops.n_lambda(); ++j) {
      const auto& n = ops.nodes[j];
      const Vec3& l = summary.multipliers[j];
      os << j << ',' << n.fiber << ',' << n.arc_length << ',' << n.position.x() << ',' << n.position.y() << ','
         << n.position.z() << ',' << ops.kappa[j] << ',' << (n.active ? 1 : 0) << ',' << l.x() << ',' << l.y() << ','
         << l.z() << '\n';
    }
  }
  {
    auto os = open_out(dir / "segments.csv");
    write_segments_csv(os, problem.segments());
  }
  {
    auto os = open_out(dir / "convergence.csv");
    write_convergence_csv(os, result.log);
  }
  {
    auto os = open_out(dir / "summary.csv");
    write_summary_csv(os, summary);
  }
}

}  // namespace fibergrid
