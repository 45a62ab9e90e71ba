#include "fibergrid/model.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace fibergrid {

namespace {

using Json = nlohmann::ordered_json;

/// A JSON value together with its path, for error messages.
class Field {
 public:
  Field(const Json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const Json& raw() const { return *j_; }

  [[noreturn]] void fail(const std::string& what) const { throw InputError(path_, what); }

  bool has(const char* key) const { return j_->is_object() && j_->contains(key); }

  Field at(const char* key) const {
    expect_object();
    const auto it = j_->find(key);
    if (it == j_->end()) throw InputError(child_path(key), "missing required field");
    return Field(*it, child_path(key));
  }

  std::optional<Field> opt(const char* key) const {
    expect_object();
    const auto it = j_->find(key);
    if (it == j_->end()) return std::nullopt;
    return Field(*it, child_path(key));
  }

  Field operator[](std::size_t i) const { return Field((*j_)[i], path_ + "[" + std::to_string(i) + "]"); }

  std::size_t size() const {
    if (!j_->is_array()) fail("expected an array");
    return j_->size();
  }

  void expect_object() const {
    if (!j_->is_object()) fail("expected an object");
  }

  /// Rejects keys outside `allowed` (catches misspelled fields).
  void allow_only(std::initializer_list<const char*> allowed) const {
    expect_object();
    for (const auto& [key, value] : j_->items()) {
      const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
      if (!ok) throw InputError(child_path(key.c_str()), "unknown field");
    }
  }

  double number() const {
    if (!j_->is_number()) fail("expected a number");
    return j_->get<double>();
  }

  int integer() const {
    if (!j_->is_number_integer()) fail("expected an integer");
    return j_->get<int>();
  }

  bool boolean() const {
    if (!j_->is_boolean()) fail("expected true or false");
    return j_->get<bool>();
  }

  std::string string() const {
    if (!j_->is_string()) fail("expected a string");
    return j_->get<std::string>();
  }

  Vec3 vec3() const {
    if (!j_->is_array() || j_->size() != 3) fail("expected an array of 3 numbers");
    Vec3 v;
    for (int i = 0; i < 3; ++i) v[i] = (*this)[i].number();
    return v;
  }

  std::array<bool, 3> bool3() const {
    if (!j_->is_array() || j_->size() != 3) fail("expected an array of 3 booleans");
    return {(*this)[0].boolean(), (*this)[1].boolean(), (*this)[2].boolean()};
  }

  std::vector<int> int_list() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back((*this)[i].integer());
    return out;
  }

 private:
  std::string child_path(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const Json* j_;
  std::string path_;
};

double number_or(const Field& f, const char* key, double fallback) {
  const auto v = f.opt(key);
  return v ? v->number() : fallback;
}

int integer_or(const Field& f, const char* key, int fallback) {
  const auto v = f.opt(key);
  return v ? v->integer() : fallback;
}

Curve parse_curve(const Field& f) {
  const std::string type = f.at("type").string();
  if (type == "line") {
    f.allow_only({"type", "start", "end"});
    return LineCurve{f.at("start").vec3(), f.at("end").vec3()};
  }
  if (type == "helix") {
    f.allow_only({"type", "base", "axis", "ref_dir", "radius", "pitch", "turns", "handedness"});
    HelixCurve h;
    h.base = f.at("base").vec3();
    h.axis = f.at("axis").vec3();
    h.ref_dir = f.at("ref_dir").vec3();
    h.radius = f.at("radius").number();
    h.pitch = f.at("pitch").number();
    h.turns = f.at("turns").number();
    if (const auto hand = f.opt("handedness")) {
      const std::string s = hand->string();
      if (s != "right" && s != "left") hand->fail("expected \"right\" or \"left\"");
      h.right_handed = s == "right";
    }
    if (!(h.radius > 0.0)) f.at("radius").fail("must be positive");
    if (!(h.axis.norm() > 0.0)) f.at("axis").fail("must be non-zero");
    if (!(h.ref_dir.cross(h.axis).norm() > 0.0)) f.at("ref_dir").fail("must not be parallel to the axis");
    return h;
  }
  f.at("type").fail("unknown curve type \"" + type + "\"");
}

int parse_beam_node_ref(const Field& f, int n_nodes) {
  int node = 0;
  if (f.raw().is_string()) {
    const std::string s = f.string();
    if (s == "start") {
      node = 0;
    } else if (s == "end") {
      node = n_nodes - 1;
    } else {
      f.fail("expected a node index, \"start\" or \"end\"");
    }
  } else {
    node = f.integer();
  }
  if (node < 0 || node >= n_nodes) f.fail("beam node index out of range");
  return node;
}

SolidInput parse_solid(const Field& f) {
  f.allow_only({"grid", "nodes", "elements", "material", "node_sets", "dirichlet", "neumann"});
  SolidInput s;
  if (const auto g = f.opt("grid")) {
    g->allow_only({"n", "dims", "origin"});
    GridSpec spec;
    const Field n = g->at("n");
    if (n.size() != 3) n.fail("expected 3 element counts");
    for (int i = 0; i < 3; ++i) {
      spec.n[i] = n[i].integer();
      if (spec.n[i] < 1) n[i].fail("element count must be >= 1");
    }
    spec.dims = g->at("dims").vec3();
    if (!(spec.dims.minCoeff() > 0.0)) g->at("dims").fail("dimensions must be positive");
    if (const auto o = g->opt("origin")) spec.origin = o->vec3();
    if (f.has("nodes") || f.has("elements")) f.fail("give either grid or nodes/elements, not both");
    s.grid = spec;
  } else {
    const Field nodes = f.at("nodes");
    for (std::size_t i = 0; i < nodes.size(); ++i) s.mesh.nodes.push_back(nodes[i].vec3());
    const Field elements = f.at("elements");
    for (std::size_t e = 0; e < elements.size(); ++e) {
      const auto conn = elements[e].int_list();
      if (conn.size() != 8) elements[e].fail("hex8 element needs 8 node indices");
      std::array<int, 8> c{};
      std::copy(conn.begin(), conn.end(), c.begin());
      s.mesh.elements.push_back(c);
    }
  }

  const Field mat = f.at("material");
  mat.allow_only({"model", "E", "nu"});
  const std::string model = mat.at("model").string();
  if (model == "svk") {
    s.material.model = SolidModel::SaintVenantKirchhoff;
  } else if (model == "neohooke") {
    s.material.model = SolidModel::NeoHooke;
  } else {
    mat.at("model").fail("expected \"svk\" or \"neohooke\"");
  }
  s.material.youngs_modulus = mat.at("E").number();
  s.material.poisson_ratio = mat.at("nu").number();

  if (const auto sets = f.opt("node_sets")) {
    sets->expect_object();
    for (const auto& [name, value] : sets->raw().items()) {
      const Field set(value, sets->path() + "." + name);
      set.allow_only({"box", "nodes"});
      NodeSetSpec spec;
      if (const auto box = set.opt("box")) {
        if (box->size() != 2) box->fail("expected [[lo], [hi]]");
        spec.box = std::make_pair((*box)[0].vec3(), (*box)[1].vec3());
      }
      if (const auto nodes = set.opt("nodes")) spec.nodes = nodes->int_list();
      if (!spec.box && !set.has("nodes")) set.fail("node set needs \"box\" or \"nodes\"");
      s.node_set_specs[name] = spec;
    }
  }

  if (const auto dir = f.opt("dirichlet")) {
    for (std::size_t i = 0; i < dir->size(); ++i) {
      const Field d = (*dir)[i];
      d.allow_only({"set", "dofs", "values"});
      SolidDirichlet bc;
      bc.set = d.at("set").string();
      if (const auto dofs = d.opt("dofs")) bc.fixed = dofs->bool3();
      if (const auto values = d.opt("values")) bc.value = values->vec3();
      if (!s.node_set_specs.contains(bc.set)) d.at("set").fail("undefined node set \"" + bc.set + "\"");
      s.mesh.dirichlet.push_back(bc);
    }
  }

  if (const auto neu = f.opt("neumann")) {
    for (std::size_t i = 0; i < neu->size(); ++i) {
      const Field n = (*neu)[i];
      n.allow_only({"elements", "face", "traction"});
      SolidNeumann bc;
      bc.elements = n.at("elements").int_list();
      bc.face = n.at("face").integer();
      bc.traction = n.at("traction").vec3();
      s.mesh.neumann.push_back(bc);
    }
  }
  return s;
}

FiberInput parse_beam(const Field& f) {
  f.allow_only({"curve", "n_elements", "nodes", "elements", "E", "radius", "loads", "dirichlet"});
  FiberInput b;
  if (const auto c = f.opt("curve")) {
    if (f.has("nodes") || f.has("elements")) f.fail("give either curve or nodes/elements, not both");
    b.curve = parse_curve(*c);
    b.n_elements = f.at("n_elements").integer();
    if (b.n_elements < 1) f.at("n_elements").fail("must be >= 1");
  } else {
    const Field nodes = f.at("nodes");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      nodes[i].allow_only({"position", "tangent"});
      b.mesh.nodes.push_back({nodes[i].at("position").vec3(), nodes[i].at("tangent").vec3()});
    }
    const Field elements = f.at("elements");
    for (std::size_t e = 0; e < elements.size(); ++e) {
      elements[e].allow_only({"nodes", "length"});
      const auto conn = elements[e].at("nodes").int_list();
      if (conn.size() != 2) elements[e].at("nodes").fail("beam element needs 2 node indices");
      b.mesh.elements.push_back({{conn[0], conn[1]}, elements[e].at("length").number()});
    }
    b.n_elements = static_cast<int>(b.mesh.elements.size());
  }
  b.youngs_modulus = f.at("E").number();
  b.radius = f.at("radius").number();
  if (!(b.radius > 0.0)) f.at("radius").fail("must be positive");
  const int n_nodes = b.curve ? b.n_elements + 1 : static_cast<int>(b.mesh.nodes.size());

  if (const auto l = f.opt("loads")) {
    l->allow_only({"line_load", "in_solid_only", "scale", "nodal_moments"});
    if (const auto v = l->opt("line_load")) b.loads.line_load = v->vec3();
    if (const auto v = l->opt("in_solid_only")) b.loads.in_solid_only = v->boolean();
    b.loads.scale = number_or(*l, "scale", 1.0);
    if (const auto m = l->opt("nodal_moments")) {
      for (std::size_t i = 0; i < m->size(); ++i) {
        const Field mi = (*m)[i];
        mi.allow_only({"node", "moment"});
        b.loads.moments.push_back({parse_beam_node_ref(mi.at("node"), n_nodes), mi.at("moment").vec3()});
      }
    }
  }

  if (const auto d = f.opt("dirichlet")) {
    for (std::size_t i = 0; i < d->size(); ++i) {
      const Field di = (*d)[i];
      di.allow_only({"node", "position", "tangent"});
      BeamDirichlet bc;
      bc.node = parse_beam_node_ref(di.at("node"), n_nodes);
      if (const auto p = di.opt("position")) bc.position = p->bool3();
      if (const auto t = di.opt("tangent")) bc.tangent = t->bool3();
      b.dirichlet.push_back(bc);
    }
  }
  return b;
}

CouplingConfig parse_coupling(const Field& f) {
  f.allow_only({"scheme", "integration", "penalty", "n_sample"});
  CouplingConfig c;
  try {
    c.set_scheme(f.at("scheme").string());
  } catch (const InputError&) {
    f.at("scheme").fail("unknown scheme \"" + f.at("scheme").string() + "\"");
  }
  if (const auto i = f.opt("integration")) {
    i->allow_only({"type", "gauss_points"});
    if (const auto t = i->opt("type")) {
      const std::string s = t->string();
      if (s == "segment") {
        c.integration = IntegrationType::SegmentBased;
      } else if (s == "element") {
        c.integration = IntegrationType::ElementBased;
      } else {
        t->fail("expected \"segment\" or \"element\"");
      }
    }
    c.n_gauss = integer_or(*i, "gauss_points", c.n_gauss);
  }
  c.penalty = f.at("penalty").number();
  c.n_sample = integer_or(f, "n_sample", c.n_sample);
  return c;
}

SolverSettings parse_solver(const Field& f) {
  f.allow_only({"n_load_steps", "newton_tol", "newton_max_iter", "max_cutbacks"});
  SolverSettings s;
  s.n_load_steps = integer_or(f, "n_load_steps", s.n_load_steps);
  s.newton_tol = number_or(f, "newton_tol", s.newton_tol);
  s.newton_max_iter = integer_or(f, "newton_max_iter", s.newton_max_iter);
  s.max_cutbacks = integer_or(f, "max_cutbacks", s.max_cutbacks);
  return s;
}

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }
Json bool3_json(const std::array<bool, 3>& b) { return Json::array({b[0], b[1], b[2]}); }

Json curve_json(const Curve& curve) {
  if (const auto* l = std::get_if<LineCurve>(&curve)) {
    return Json{{"type", "line"}, {"start", vec_json(l->start)}, {"end", vec_json(l->end)}};
  }
  const auto& h = std::get<HelixCurve>(curve);
  return Json{{"type", "helix"},        {"base", vec_json(h.base)}, {"axis", vec_json(h.axis)},
              {"ref_dir", vec_json(h.ref_dir)}, {"radius", h.radius},        {"pitch", h.pitch},
              {"turns", h.turns},       {"handedness", h.right_handed ? "right" : "left"}};
}

}  // namespace

std::vector<BeamMesh> Model::fiber_meshes() const {
  std::vector<BeamMesh> out;
  out.reserve(beams.size());
  for (const auto& b : beams) out.push_back(b.mesh);
  return out;
}

void Model::validate() const {
  solid.material.validate();
  solid.mesh.validate();
  if (solid.mesh.num_elements() == 0) throw InputError("solid", "mesh has no elements");
  for (std::size_t f = 0; f < beams.size(); ++f) {
    const std::string where = "beams[" + std::to_string(f) + "]";
    try {
      beams[f].mesh.validate();
    } catch (const InputError& e) {
      throw InputError(where, e.what());
    }
    const int n = beams[f].mesh.num_nodes();
    for (const auto& m : beams[f].loads.moments) {
      if (m.node < 0 || m.node >= n) throw InputError(where + ".loads.nodal_moments", "node index out of range");
    }
    for (const auto& d : beams[f].dirichlet) {
      if (d.node < 0 || d.node >= n) throw InputError(where + ".dirichlet", "node index out of range");
    }
  }
  coupling.validate();
  if (solver.n_load_steps < 1) throw InputError("solver.n_load_steps", "must be >= 1");
  if (!(solver.newton_tol > 0.0)) throw InputError("solver.newton_tol", "must be positive");
  if (solver.newton_max_iter < 1) throw InputError("solver.newton_max_iter", "must be >= 1");
  if (solver.max_cutbacks < 0) throw InputError("solver.max_cutbacks", "must be >= 0");
}

void finalize_model(Model& model) {
  SolidInput& s = model.solid;
  if (s.grid) {
    SolidMesh grid = build_solid_grid(s.grid->n[0], s.grid->n[1], s.grid->n[2], s.grid->dims, s.grid->origin);
    s.mesh.nodes = std::move(grid.nodes);
    s.mesh.elements = std::move(grid.elements);
  }
  s.mesh.node_sets.clear();
  for (const auto& [name, spec] : s.node_set_specs) {
    std::set<int> nodes(spec.nodes.begin(), spec.nodes.end());
    if (spec.box) {
      for (int n : nodes_in_box(s.mesh, spec.box->first, spec.box->second)) nodes.insert(n);
    }
    s.mesh.node_sets[name] = std::vector<int>(nodes.begin(), nodes.end());
  }
  for (std::size_t f = 0; f < model.beams.size(); ++f) {
    FiberInput& b = model.beams[f];
    if (b.curve) {
      try {
        b.mesh = discretize_fiber(*b.curve, b.n_elements);
      } catch (const InputError& e) {
        throw InputError("beams[" + std::to_string(f) + "].curve", e.what());
      }
    }
    b.mesh.section = CrossSection::circular(b.radius);
    b.mesh.youngs_modulus = b.youngs_modulus;
  }
}

Model parse_deck(std::string_view text) {
  Json root;
  try {
    root = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    std::string msg = e.what();
    const auto pos = msg.find("syntax error");
    if (pos != std::string::npos) msg = msg.substr(pos);
    throw InputError("line " + std::to_string(line), msg);
  }
  const Field top(root, "");
  top.allow_only({"solid", "beams", "coupling", "solver"});
  Model model;
  model.solid = parse_solid(top.at("solid"));
  if (const auto beams = top.opt("beams")) {
    for (std::size_t i = 0; i < beams->size(); ++i) model.beams.push_back(parse_beam((*beams)[i]));
  }
  model.coupling = parse_coupling(top.at("coupling"));
  if (const auto s = top.opt("solver")) model.solver = parse_solver(*s);
  finalize_model(model);
  model.validate();
  return model;
}

Model load_deck(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string(), "cannot open deck");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_deck(ss.str());
}

std::string write_deck(const Model& model) {
  Json root;
  const SolidInput& s = model.solid;
  Json solid;
  if (s.grid) {
    solid["grid"] = Json{{"n", Json::array({s.grid->n[0], s.grid->n[1], s.grid->n[2]})},
                         {"dims", vec_json(s.grid->dims)},
                         {"origin", vec_json(s.grid->origin)}};
  } else {
    Json nodes = Json::array();
    for (const auto& x : s.mesh.nodes) nodes.push_back(vec_json(x));
    Json elements = Json::array();
    for (const auto& e : s.mesh.elements) elements.push_back(Json(std::vector<int>(e.begin(), e.end())));
    solid["nodes"] = std::move(nodes);
    solid["elements"] = std::move(elements);
  }
  solid["material"] = Json{{"model", s.material.model == SolidModel::NeoHooke ? "neohooke" : "svk"},
                           {"E", s.material.youngs_modulus},
                           {"nu", s.material.poisson_ratio}};
  Json sets = Json::object();
  for (const auto& [name, spec] : s.node_set_specs) {
    Json j = Json::object();
    if (spec.box) j["box"] = Json::array({vec_json(spec.box->first), vec_json(spec.box->second)});
    if (!spec.nodes.empty() || !spec.box) j["nodes"] = spec.nodes;
    sets[name] = std::move(j);
  }
  solid["node_sets"] = std::move(sets);
  Json dir = Json::array();
  for (const auto& d : s.mesh.dirichlet) {
    dir.push_back(Json{{"set", d.set}, {"dofs", bool3_json(d.fixed)}, {"values", vec_json(d.value)}});
  }
  solid["dirichlet"] = std::move(dir);
  Json neu = Json::array();
  for (const auto& n : s.mesh.neumann) {
    neu.push_back(Json{{"elements", n.elements}, {"face", n.face}, {"traction", vec_json(n.traction)}});
  }
  solid["neumann"] = std::move(neu);
  root["solid"] = std::move(solid);

  Json beams = Json::array();
  for (const auto& b : model.beams) {
    Json j;
    if (b.curve) {
      j["curve"] = curve_json(*b.curve);
      j["n_elements"] = b.n_elements;
    } else {
      Json nodes = Json::array();
      for (const auto& n : b.mesh.nodes) nodes.push_back(Json{{"position", vec_json(n.position)}, {"tangent", vec_json(n.tangent)}});
      Json elements = Json::array();
      for (const auto& e : b.mesh.elements) {
        elements.push_back(Json{{"nodes", Json::array({e.nodes[0], e.nodes[1]})}, {"length", e.length}});
      }
      j["nodes"] = std::move(nodes);
      j["elements"] = std::move(elements);
    }
    j["E"] = b.youngs_modulus;
    j["radius"] = b.radius;
    Json moments = Json::array();
    for (const auto& m : b.loads.moments) moments.push_back(Json{{"node", m.node}, {"moment", vec_json(m.moment)}});
    j["loads"] = Json{{"line_load", vec_json(b.loads.line_load)},
                      {"in_solid_only", b.loads.in_solid_only},
                      {"scale", b.loads.scale},
                      {"nodal_moments", std::move(moments)}};
    Json bcs = Json::array();
    for (const auto& d : b.dirichlet) {
      bcs.push_back(Json{{"node", d.node}, {"position", bool3_json(d.position)}, {"tangent", bool3_json(d.tangent)}});
    }
    j["dirichlet"] = std::move(bcs);
    beams.push_back(std::move(j));
  }
  root["beams"] = std::move(beams);

  const CouplingConfig& c = model.coupling;
  root["coupling"] = Json{{"scheme", c.scheme_name()},
                          {"integration",
                           Json{{"type", c.integration == IntegrationType::SegmentBased ? "segment" : "element"},
                                {"gauss_points", c.n_gauss}}},
                          {"penalty", c.penalty},
                          {"n_sample", c.n_sample}};
  root["solver"] = Json{{"n_load_steps", model.solver.n_load_steps},
                        {"newton_tol", model.solver.newton_tol},
                        {"newton_max_iter", model.solver.newton_max_iter},
                        {"max_cutbacks", model.solver.max_cutbacks}};
  return root.dump(2) + "\n";
}

}  // namespace fibergrid
