#pragma once

// Error norms, convergence rates, solution summaries and field export.

#include "fibergrid/solver.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

namespace fibergrid {

struct ErrorReport {
  double total = 0.0;  // solid + beam
  double solid = 0.0;  // (1/V0) sqrt(int |du|^2 dV)
  double beam = 0.0;   // (1/L) sqrt(int |du|^2 ds)
  double h_solid = 0.0;
};

/// Solid displacement at a reference point (nullopt outside the mesh).
std::optional<Vec3> solid_displacement_at(const Problem& problem, const Eigen::VectorXd& d, const Vec3& point);

/// Centerline displacement of a fiber at arc-length coordinate s.
Vec3 beam_displacement_at(const Problem& problem, const Eigen::VectorXd& d, int fiber, double s);

/// L2 displacement error of (problem, d) against (ref, d_ref). Solid part:
/// 3x3x3 Gauss per element; beam part: 6 Gauss points per element, matched by
/// arc length on the fiber with the same index. Throws Error if a quadrature
/// point cannot be located in the reference mesh.
ErrorReport l2_error(const Problem& problem, const Eigen::VectorXd& d, const Problem& ref,
                     const Eigen::VectorXd& d_ref);

/// Least-squares slope of log(e) over log(h).
double convergence_order(std::span<const std::pair<double, double>> h_e);

struct SolutionSummary {
  double load_factor = 0.0;
  int iterations = 0;
  int cutbacks = 0;
  double max_solid_displacement = 0.0;  // max nodal |u^S|
  std::vector<Vec3> tip_displacement;   // last node of each fiber
  double max_mid_curvature = 0.0;       // max |kappa| at element centers
  double peak_stress = 0.0;             // max element-averaged |S| (Frobenius)
  Vec3 reaction_force = Vec3::Zero();
  Vec3 reaction_moment = Vec3::Zero();  // about the origin, current positions
  Vec3 load_force = Vec3::Zero();       // resultant of the external loads
  Vec3 load_moment = Vec3::Zero();
  std::vector<Vec3> multipliers;        // lambda per multiplier node (N/m)
};

SolutionSummary summarize(const Problem& problem, const SolveResult& result);

/// Writes solid.vtk, beams.vtk, multipliers.vtk, summary.csv,
/// convergence.csv, segments.csv and multipliers.csv into `dir`.
void export_fields(const Problem& problem, const SolveResult& result, const std::filesystem::path& dir);

void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRecord>& log);
void write_summary_csv(std::ostream& os, const SolutionSummary& s);

}  // namespace fibergrid
