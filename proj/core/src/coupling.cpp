#include "fibergrid/coupling.hpp"

#include "fibergrid/beam.hpp"
#include "fibergrid/quadrature.hpp"
#include "fibergrid/solid.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace fibergrid {

namespace {

using Triplet = Eigen::Triplet<double>;

// Multiplier nodes whose support integral is below this fraction of the mean
// element length carry no constraint.
constexpr double kZeroSupport = 1e-12;

SparseMatrix expand_identity(const SparseMatrix& a) {
  std::vector<Triplet> t;
  t.reserve(3 * a.nonZeros());
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
      for (int i = 0; i < 3; ++i) t.emplace_back(3 * it.row() + i, 3 * it.col() + i, it.value());
    }
  }
  SparseMatrix out(3 * a.rows(), 3 * a.cols());
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

double box_diameter(const ElementCoords& x) {
  Vec3 lo = x[0], hi = x[0];
  for (const auto& p : x) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).norm();
}

Vec3 reference_point(const BeamMesh& beam, int e, double xi) {
  return centerline_eval(beam_reference_dofs(beam, e), beam.elements[e].length, xi).r;
}

int host_at(const BeamMesh& beam, int e, double xi, const SolidLocator& locator, const ProjectionTolerances& tol) {
  const auto pr = project_to_solid(reference_point(beam, e, xi), locator, std::nullopt, tol);
  return pr ? pr->element : -1;
}

struct Transition {
  double xi;
  int host;
};

void refine(const BeamMesh& beam, int e, const SolidLocator& locator, const CouplingConfig& cfg, double a, int ha,
            double b, int hb, std::vector<Transition>& out) {
  if (b - a < cfg.tol_segment) {
    out.push_back({0.5 * (a + b), hb});
    return;
  }
  const double m = 0.5 * (a + b);
  const int hm = host_at(beam, e, m, locator, cfg.tolerances);
  if (hm != ha) refine(beam, e, locator, cfg, a, ha, m, hm, out);
  if (hm != hb) refine(beam, e, locator, cfg, m, hm, b, hb, out);
}

Vec3 host_parameters(const SolidMesh& mesh, int host, const Vec3& p, const ProjectionTolerances& tol) {
  const auto pr = project_to_element(mesh, host, p, tol);
  if (!pr) throw Error("coupling: projection into host element " + std::to_string(host) + " failed");
  return pr->xi;
}

}  // namespace

void CouplingConfig::validate() const {
  if (scheme == CouplingScheme::Mortar && (mortar_order < 1 || mortar_order > 3)) {
    throw InputError("coupling.scheme", "mortar order must be 1, 2 or 3");
  }
  if (n_gauss < 1) throw InputError("coupling.integration.gauss_points", "must be >= 1");
  if (!(penalty > 0.0)) throw InputError("coupling.penalty", "penalty parameter must be positive");
  if (n_sample < 2) throw InputError("coupling.n_sample", "must be >= 2");
  if (!(tol_segment > 0.0)) throw InputError("coupling.tol_segment", "must be positive");
}

std::string CouplingConfig::scheme_name() const {
  if (scheme == CouplingScheme::Gpts) return "gpts";
  switch (mortar_order) {
    case 1: return "mortar-linear";
    case 2: return "mortar-quadratic";
    case 3: return "mortar-cubic";
    default: return "mortar-" + std::to_string(mortar_order);
  }
}

void CouplingConfig::set_scheme(const std::string& name) {
  if (name == "gpts") {
    scheme = CouplingScheme::Gpts;
  } else if (name == "mortar-linear") {
    scheme = CouplingScheme::Mortar;
    mortar_order = 1;
  } else if (name == "mortar-quadratic") {
    scheme = CouplingScheme::Mortar;
    mortar_order = 2;
  } else if (name == "mortar-cubic") {
    scheme = CouplingScheme::Mortar;
    mortar_order = 3;
  } else {
    throw InputError("coupling.scheme", "unknown scheme \"" + name + "\"");
  }
}

SolidLocator::SolidLocator(const SolidMesh& mesh) : mesh_(&mesh) {
  const int ne = mesh.num_elements();
  box_lo_.resize(ne);
  box_hi_.resize(ne);
  if (ne == 0) return;
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
  Vec3 hi = -lo;
  Vec3 mean_size = Vec3::Zero();
  for (int e = 0; e < ne; ++e) {
    const auto x = mesh.element_coords(e);
    Vec3 a = x[0], b = x[0];
    for (const auto& p : x) {
      a = a.cwiseMin(p);
      b = b.cwiseMax(p);
    }
    const double pad = 1e-8 * (b - a).norm();
    box_lo_[e] = a.array() - pad;
    box_hi_[e] = b.array() + pad;
    lo = lo.cwiseMin(box_lo_[e]);
    hi = hi.cwiseMax(box_hi_[e]);
    mean_size += b - a;
  }
  mean_size /= ne;
  origin_ = lo;
  for (int d = 0; d < 3; ++d) {
    const double extent = hi[d] - lo[d];
    const double h = mean_size[d] > 0.0 ? mean_size[d] : extent;
    dims_[d] = std::clamp(static_cast<int>(std::ceil(extent / h)), 1, 512);
    cell_[d] = extent > 0.0 ? extent / dims_[d] : 1.0;
  }
  bins_.resize(static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2]);
  auto bin_index = [&](double v, int d) {
    return std::clamp(static_cast<int>(std::floor((v - origin_[d]) / cell_[d])), 0, dims_[d] - 1);
  };
  for (int e = 0; e < ne; ++e) {
    std::array<int, 3> b0{}, b1{};
    for (int d = 0; d < 3; ++d) {
      b0[d] = bin_index(box_lo_[e][d], d);
      b1[d] = bin_index(box_hi_[e][d], d);
    }
    for (int k = b0[2]; k <= b1[2]; ++k) {
      for (int j = b0[1]; j <= b1[1]; ++j) {
        for (int i = b0[0]; i <= b1[0]; ++i) bins_[i + dims_[0] * (j + dims_[1] * k)].push_back(e);
      }
    }
  }
}

std::vector<int> SolidLocator::candidates(const Vec3& p) const {
  std::vector<int> out;
  if (bins_.empty()) return out;
  std::array<int, 3> b{};
  for (int d = 0; d < 3; ++d) {
    const double t = std::floor((p[d] - origin_[d]) / cell_[d]);
    if (t < -1.0 || t > dims_[d]) return out;
    b[d] = std::clamp(static_cast<int>(t), 0, dims_[d] - 1);
  }
  for (int e : bins_[b[0] + dims_[0] * (b[1] + dims_[1] * b[2])]) {
    if ((p.array() >= box_lo_[e].array()).all() && (p.array() <= box_hi_[e].array()).all()) out.push_back(e);
  }
  return out;
}

std::optional<ProjectionResult> project_to_element(const SolidMesh& mesh, int e, const Vec3& p,
                                                   const ProjectionTolerances& tol) {
  const auto x = mesh.element_coords(e);
  const double target = tol.projection * box_diameter(x);
  Vec3 xi = Vec3::Zero();
  double best = std::numeric_limits<double>::max();
  Vec3 best_xi = xi;
  for (int it = 0; it < 50; ++it) {
    const Hex8Shape s = hex8_shape(xi);
    Vec3 pos = Vec3::Zero();
    for (int a = 0; a < 8; ++a) pos += s.N[a] * x[a];
    const Vec3 r = p - pos;
    const double rn = r.norm();
    if (rn < best) {
      best = rn;
      best_xi = xi;
    }
    if (rn <= target) break;
    const Vec3 dxi = hex8_jacobian(x, s).partialPivLu().solve(r);
    if (!dxi.allFinite()) return std::nullopt;
    xi += dxi;
    if (xi.cwiseAbs().maxCoeff() > 1e3) return std::nullopt;
  }
  // Accept round-off stagnation slightly above the target.
  if (!(best <= 1e3 * target)) return std::nullopt;
  ProjectionResult out;
  out.element = e;
  out.xi = best_xi;
  out.inside = best_xi.cwiseAbs().maxCoeff() <= 1.0 + tol.inside;
  return out;
}

std::optional<ProjectionResult> project_to_solid(const Vec3& p, const SolidLocator& locator, std::optional<int> hint,
                                                 const ProjectionTolerances& tol) {
  const SolidMesh& mesh = locator.mesh();
  if (hint && *hint >= 0 && *hint < mesh.num_elements()) {
    const auto pr = project_to_element(mesh, *hint, p, tol);
    if (pr && pr->inside) return pr;
  }
  for (int e : locator.candidates(p)) {
    if (hint && e == *hint) continue;
    const auto pr = project_to_element(mesh, e, p, tol);
    if (pr && pr->inside) return pr;
  }
  return std::nullopt;
}

std::optional<ProjectionResult> project_to_solid(const Vec3& p, const SolidMesh& mesh, std::optional<int> hint,
                                                 const ProjectionTolerances& tol) {
  const SolidLocator locator(mesh);
  return project_to_solid(p, locator, hint, tol);
}

std::vector<Segment> segment_beam_element(const BeamMesh& beam, int e, const SolidLocator& locator,
                                          const CouplingConfig& cfg) {
  const int n = std::max(2, cfg.n_sample);
  std::vector<Transition> transitions;
  double xa = -1.0;
  const int h0 = host_at(beam, e, xa, locator, cfg.tolerances);
  int ha = h0;
  for (int i = 1; i < n; ++i) {
    const double xb = -1.0 + 2.0 * i / (n - 1);
    const int hb = host_at(beam, e, xb, locator, cfg.tolerances);
    if (hb != ha) refine(beam, e, locator, cfg, xa, ha, xb, hb, transitions);
    xa = xb;
    ha = hb;
  }
  std::vector<Segment> out;
  Segment cur{e, -1.0, 1.0, h0};
  for (const auto& t : transitions) {
    if (t.host == cur.host) continue;
    cur.xi_b = t.xi;
    if (cur.xi_b > cur.xi_a) out.push_back(cur);
    cur = Segment{e, t.xi, 1.0, t.host};
  }
  cur.xi_b = 1.0;
  if (cur.xi_b > cur.xi_a) out.push_back(cur);
  return out;
}

FiberSegments segment_fibers(std::span<const BeamMesh> fibers, const SolidLocator& locator,
                             const CouplingConfig& cfg) {
  FiberSegments out(fibers.size());
  for (std::size_t f = 0; f < fibers.size(); ++f) {
    for (int e = 0; e < fibers[f].num_elements(); ++e) {
      out[f].push_back(segment_beam_element(fibers[f], e, locator, cfg));
    }
  }
  return out;
}

std::vector<double> lagrange_shape(int order, double xi) {
  if (order < 1) throw Error("lagrange_shape: order must be >= 1");
  std::vector<double> phi(order + 1, 1.0);
  for (int i = 0; i <= order; ++i) {
    const double xi_i = -1.0 + 2.0 * i / order;
    for (int j = 0; j <= order; ++j) {
      if (j == i) continue;
      const double xi_j = -1.0 + 2.0 * j / order;
      phi[i] *= (xi - xi_j) / (xi_i - xi_j);
    }
  }
  return phi;
}

std::vector<CouplingPoint> coupling_points(std::span<const BeamMesh> fibers, const SolidMesh& mesh,
                                           const FiberSegments& segments, const CouplingConfig& cfg) {
  const GaussRule& g = gauss_legendre(cfg.n_gauss);
  std::vector<CouplingPoint> out;
  for (std::size_t f = 0; f < fibers.size(); ++f) {
    const BeamMesh& beam = fibers[f];
    for (int e = 0; e < beam.num_elements(); ++e) {
      const BeamVector q = beam_reference_dofs(beam, e);
      const double len = beam.elements[e].length;
      const auto& segs = segments[f][e];
      auto emit = [&](double a, double b, auto&& host_of) {
        for (int i = 0; i < g.size(); ++i) {
          CouplingPoint cp;
          cp.fiber = static_cast<int>(f);
          cp.beam_element = e;
          cp.xi = 0.5 * (a + b) + 0.5 * (b - a) * g.points[i];
          cp.weight = g.weights[i] * 0.5 * (b - a) * 0.5 * len;
          cp.host = host_of(cp.xi);
          cp.position = centerline_eval(q, len, cp.xi).r;
          cp.host_xi = host_parameters(mesh, cp.host, cp.position, cfg.tolerances);
          out.push_back(cp);
        }
      };
      if (cfg.integration == IntegrationType::SegmentBased) {
        for (const auto& s : segs) {
          if (s.hosted()) emit(s.xi_a, s.xi_b, [&](double) { return s.host; });
        }
        continue;
      }
      std::size_t i = 0;
      while (i < segs.size()) {
        if (!segs[i].hosted()) {
          ++i;
          continue;
        }
        std::size_t j = i;
        while (j + 1 < segs.size() && segs[j + 1].hosted()) ++j;
        emit(segs[i].xi_a, segs[j].xi_b, [&](double xi) {
          for (std::size_t k = i; k < j; ++k) {
            if (xi <= segs[k].xi_b) return segs[k].host;
          }
          return segs[j].host;
        });
        i = j + 1;
      }
    }
  }
  return out;
}

SparseMatrix MortarOperators::D_expanded() const { return expand_identity(D); }
SparseMatrix MortarOperators::M_expanded() const { return expand_identity(M); }

SparseMatrix MortarOperators::constraint_matrix() const {
  std::vector<Triplet> t;
  t.reserve(M.nonZeros() + D.nonZeros());
  for (int k = 0; k < M.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(M, k); it; ++it) t.emplace_back(it.row(), it.col(), -it.value());
  }
  for (int k = 0; k < D.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(D, k); it; ++it) t.emplace_back(it.row(), n_solid_nodes + it.col(), it.value());
  }
  SparseMatrix g(n_lambda(), n_solid_nodes + 2 * n_beam_nodes);
  g.setFromTriplets(t.begin(), t.end());
  return expand_identity(g);
}

std::vector<int> fiber_node_offsets(std::span<const BeamMesh> fibers) {
  std::vector<int> off(fibers.size() + 1, 0);
  for (std::size_t f = 0; f < fibers.size(); ++f) off[f + 1] = off[f] + fibers[f].num_nodes();
  return off;
}

namespace {

/// Accumulates rows of D, M and kappa from coupling points.
struct OperatorBuilder {
  std::vector<Triplet> d, m;
  std::vector<double> kappa;

  void add(int row, double scale, const CouplingPoint& cp,
           const BeamMesh& beam, int node_offset, const SolidMesh& mesh) {
    const auto& el = beam.elements[cp.beam_element];
    const HermiteShape h = hermite_shape(cp.xi, el.length);
    const double w = cp.weight * scale;
    for (int n = 0; n < 2; ++n) {
      const int l = node_offset + el.nodes[n];
      d.emplace_back(row, 2 * l, w * h.value[2 * n]);
      d.emplace_back(row, 2 * l + 1, w * h.value[2 * n + 1]);
    }
    const Hex8Shape s = hex8_shape(cp.host_xi);
    const auto& conn = mesh.elements[cp.host];
    for (int a = 0; a < 8; ++a) m.emplace_back(row, conn[a], w * s.N[a]);
    kappa[row] += w;
  }

  MortarOperators finish(int n_solid, int n_beam) {
    MortarOperators ops;
    ops.n_solid_nodes = n_solid;
    ops.n_beam_nodes = n_beam;
    const int nl = static_cast<int>(kappa.size());
    ops.D.resize(nl, 2 * n_beam);
    ops.D.setFromTriplets(d.begin(), d.end());
    ops.M.resize(nl, n_solid);
    ops.M.setFromTriplets(m.begin(), m.end());
    ops.kappa = Eigen::Map<Eigen::VectorXd>(kappa.data(), nl);
    return ops;
  }
};

}  // namespace

MortarOperators assemble_mortar(std::span<const BeamMesh> fibers, const SolidMesh& mesh,
                                const FiberSegments& segments, const CouplingConfig& cfg) {
  const int p = cfg.mortar_order;
  const auto offsets = fiber_node_offsets(fibers);
  std::vector<MultiplierNode> nodes;
  std::vector<int> lambda_offset(fibers.size());
  std::vector<double> mean_length(fibers.size());
  for (std::size_t f = 0; f < fibers.size(); ++f) {
    const BeamMesh& beam = fibers[f];
    lambda_offset[f] = static_cast<int>(nodes.size());
    mean_length[f] = beam.total_length() / std::max(1, beam.num_elements());
    const auto starts = beam.element_offsets();
    for (int e = 0; e < beam.num_elements(); ++e) {
      const BeamVector q = beam_reference_dofs(beam, e);
      const double len = beam.elements[e].length;
      for (int i = (e == 0 ? 0 : 1); i <= p; ++i) {
        MultiplierNode n;
        n.fiber = static_cast<int>(f);
        n.beam_element = e;
        n.xi = -1.0 + 2.0 * i / p;
        n.arc_length = starts[e] + 0.5 * (n.xi + 1.0) * len;
        n.position = centerline_eval(q, len, n.xi).r;
        nodes.push_back(n);
      }
    }
  }

  OperatorBuilder b;
  b.kappa.assign(nodes.size(), 0.0);
  for (const auto& cp : coupling_points(fibers, mesh, segments, cfg)) {
    const int base = lambda_offset[cp.fiber] + cp.beam_element * p;
    const auto phi = lagrange_shape(p, cp.xi);
    for (int i = 0; i <= p; ++i) {
      b.add(base + i, phi[i], cp, fibers[cp.fiber], offsets[cp.fiber], mesh);
    }
  }
  MortarOperators ops = b.finish(mesh.num_nodes(), offsets.back());
  ops.nodes = std::move(nodes);
  for (int j = 0; j < ops.n_lambda(); ++j) {
    if (ops.kappa[j] <= kZeroSupport * mean_length[ops.nodes[j].fiber]) {
      ops.nodes[j].active = false;
      ops.eliminated.push_back(j);
    }
  }
  if (!ops.eliminated.empty()) {
    const auto keep = [&](Eigen::Index r, Eigen::Index, double) { return ops.nodes[r].active; };
    ops.D.prune(keep);
    ops.M.prune(keep);
  }
  return ops;
}

MortarOperators assemble_mortar(std::span<const BeamMesh> fibers, const SolidMesh& mesh, const CouplingConfig& cfg) {
  const SolidLocator locator(mesh);
  return assemble_mortar(fibers, mesh, segment_fibers(fibers, locator, cfg), cfg);
}

GptsConstraintSet assemble_gpts(std::span<const BeamMesh> fibers, const SolidMesh& mesh,
                                const FiberSegments& segments, const CouplingConfig& cfg) {
  GptsConstraintSet out;
  out.points = coupling_points(fibers, mesh, segments, cfg);
  const auto offsets = fiber_node_offsets(fibers);
  std::vector<std::vector<double>> starts;
  for (const auto& f : fibers) starts.push_back(f.element_offsets());
  OperatorBuilder b;
  b.kappa.assign(out.points.size(), 0.0);
  std::vector<MultiplierNode> nodes;
  for (std::size_t j = 0; j < out.points.size(); ++j) {
    const auto& cp = out.points[j];
    b.add(static_cast<int>(j), 1.0, cp, fibers[cp.fiber], offsets[cp.fiber], mesh);
    MultiplierNode n;
    n.fiber = cp.fiber;
    n.beam_element = cp.beam_element;
    n.xi = cp.xi;
    n.arc_length = starts[cp.fiber][cp.beam_element] + 0.5 * (cp.xi + 1.0) * fibers[cp.fiber].elements[cp.beam_element].length;
    n.position = cp.position;
    nodes.push_back(n);
  }
  out.operators = b.finish(mesh.num_nodes(), offsets.back());
  out.operators.nodes = std::move(nodes);
  return out;
}

GptsConstraintSet assemble_gpts(std::span<const BeamMesh> fibers, const SolidMesh& mesh, const CouplingConfig& cfg) {
  const SolidLocator locator(mesh);
  return assemble_gpts(fibers, mesh, segment_fibers(fibers, locator, cfg), cfg);
}

namespace {

Eigen::VectorXd inverse_kappa(const MortarOperators& ops) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(3 * ops.n_lambda());
  for (int j = 0; j < ops.n_lambda(); ++j) {
    if (j < static_cast<int>(ops.nodes.size()) && !ops.nodes[j].active) continue;
    w.segment<3>(3 * j).setConstant(1.0 / ops.kappa[j]);
  }
  return w;
}

}  // namespace

SparseMatrix coupling_stiffness(const MortarOperators& ops, double penalty) {
  const SparseMatrix g = ops.constraint_matrix();
  const Eigen::VectorXd w = penalty * inverse_kappa(ops);
  const SparseMatrix wg = w.asDiagonal() * g;
  SparseMatrix k = SparseMatrix(g.transpose()) * wg;
  k.prune(0.0);
  return k;
}

CouplingForces coupling_force_stiffness(const MortarOperators& ops, double penalty, const Eigen::VectorXd& d_solid,
                                        const Eigen::VectorXd& d_beam) {
  const int ns = 3 * ops.n_solid_nodes;
  const int nb = 6 * ops.n_beam_nodes;
  if (d_solid.size() != ns || d_beam.size() != nb) throw Error("coupling: displacement size mismatch");
  Eigen::VectorXd d(ns + nb);
  d << d_solid, d_beam;
  const SparseMatrix g = ops.constraint_matrix();
  CouplingForces out;
  out.gap = g * d;
  const Eigen::VectorXd w = penalty * inverse_kappa(ops);
  const Eigen::VectorXd f = g.transpose() * w.cwiseProduct(out.gap);
  out.solid = f.head(ns);
  out.beam = f.tail(nb);
  const SparseMatrix k = coupling_stiffness(ops, penalty);
  out.k_ss = k.topLeftCorner(ns, ns);
  out.k_sb = k.topRightCorner(ns, nb);
  out.k_bs = k.bottomLeftCorner(nb, ns);
  out.k_bb = k.bottomRightCorner(nb, nb);
  return out;
}

std::vector<Vec3> recover_lagrange(const MortarOperators& ops, double penalty, const Eigen::VectorXd& d) {
  const Eigen::VectorXd gap = ops.constraint_matrix() * d;
  const Eigen::VectorXd w = penalty * inverse_kappa(ops);
  std::vector<Vec3> out(ops.n_lambda());
  for (int j = 0; j < ops.n_lambda(); ++j) out[j] = w.segment<3>(3 * j).cwiseProduct(gap.segment<3>(3 * j));
  return out;
}

void write_segments_csv(std::ostream& os, const FiberSegments& segments) {
  const auto old_prec = os.precision(17);
  os << "beam_elem,xi_a,xi_b,host_elem\n";
  int offset = 0;
  for (const auto& fiber : segments) {
    for (const auto& element : fiber) {
      for (const auto& s : element) os << offset + s.beam_element << ',' << s.xi_a << ',' << s.xi_b << ',' << s.host << '\n';
    }
    offset += static_cast<int>(fiber.size());
  }
  os.precision(old_prec);
}

}  // namespace fibergrid
