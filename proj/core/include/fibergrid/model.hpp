#pragma once

// Problem definition: geometry, materials, loads, boundary conditions,
// coupling and solver settings, plus the JSON deck reader/writer.

#include "fibergrid/coupling.hpp"
#include "fibergrid/mesh.hpp"
#include "fibergrid/solid.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fibergrid {

struct GridSpec {
  std::array<int, 3> n{1, 1, 1};
  Vec3 dims = Vec3::Ones();
  Vec3 origin = Vec3::Zero();
};

/// Node set given either as an explicit list or as a closed box.
struct NodeSetSpec {
  std::optional<std::pair<Vec3, Vec3>> box;
  std::vector<int> nodes;
};

struct SolidInput {
  std::optional<GridSpec> grid;  // when absent, mesh nodes/elements are explicit
  SolidMesh mesh;                // node_sets resolved from node_set_specs
  SolidMaterial material;
  std::map<std::string, NodeSetSpec> node_set_specs;
};

struct NodalMoment {
  int node = 0;  // node index within the fiber
  Vec3 moment = Vec3::Zero();
};

/// Loads of one fiber at load factor 1.
struct FiberLoads {
  Vec3 line_load = Vec3::Zero();  // N/m, constant along the fiber
  bool in_solid_only = false;
  double scale = 1.0;
  std::vector<NodalMoment> moments;
};

struct BeamDirichlet {
  int node = 0;
  std::array<bool, 3> position{false, false, false};
  std::array<bool, 3> tangent{false, false, false};
};

struct FiberInput {
  std::optional<Curve> curve;  // when absent, mesh nodes/elements are explicit
  int n_elements = 1;
  double youngs_modulus = 0.0;
  double radius = 0.0;
  BeamMesh mesh;
  FiberLoads loads;
  std::vector<BeamDirichlet> dirichlet;
};

struct SolverSettings {
  int n_load_steps = 1;
  double newton_tol = 1e-8;
  int newton_max_iter = 20;
  int max_cutbacks = 4;
};

struct Model {
  SolidInput solid;
  std::vector<FiberInput> beams;
  CouplingConfig coupling;
  SolverSettings solver;

  std::vector<BeamMesh> fiber_meshes() const;
  /// Checks every invariant; throws InputError.
  void validate() const;
};

/// Builds meshes from generators (grid, curves) and resolves node sets.
/// Called by parse_deck; needed again only after editing a Model by hand.
void finalize_model(Model& model);

/// Parses a JSON deck. Errors carry a line number (syntax) or a JSON path
/// (structure and invariants).
Model parse_deck(std::string_view text);
Model load_deck(const std::filesystem::path& path);

/// Deck text that parse_deck maps back to an identical model.
std::string write_deck(const Model& model);

}  // namespace fibergrid
