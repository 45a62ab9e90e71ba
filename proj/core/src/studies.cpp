#include "fibergrid/studies.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace fibergrid {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

double parse_number(const std::string& key, const std::string& text) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (pos == text.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw InputError(key, "expected a number, got \"" + text + "\"");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

IntegrationType parse_integration(const std::string& s) {
  if (s == "segment") return IntegrationType::SegmentBased;
  if (s == "element") return IntegrationType::ElementBased;
  throw InputError("integration", "expected \"segment\" or \"element\", got \"" + s + "\"");
}

const char* integration_name(IntegrationType t) {
  return t == IntegrationType::SegmentBased ? "segment" : "element";
}

CaseResult run_case(const Model& model, const std::string& name, const fs::path& out) {
  const fs::path deck = out / "decks" / (name + ".json");
  fs::create_directories(deck.parent_path());
  {
    std::ofstream os(deck, std::ios::binary);
    if (!os) throw Error("cannot write " + deck.string());
    os << write_deck(model);
  }
  return run_deck_file(deck, out / "cases" / name);
}

NodeSetSpec box_set(const Vec3& lo, const Vec3& hi) {
  NodeSetSpec s;
  s.box = std::make_pair(lo, hi);
  return s;
}

void set_coupling(Model& m, const std::string& scheme, IntegrationType it, int n_gauss, double penalty) {
  m.coupling.set_scheme(scheme);
  m.coupling.integration = it;
  m.coupling.n_gauss = n_gauss;
  m.coupling.penalty = penalty;
}

// Largest nodal deviation of a fiber from the uniform translation load/eps;
// tangent increments must vanish for such a state.
double translation_deviation(const Problem& p, const SolveResult& r) {
  double dev = 0.0;
  const double eps = p.model().coupling.penalty;
  for (std::size_t f = 0; f < p.fibers().size(); ++f) {
    const FiberLoads& loads = p.model().beams[f].loads;
    const Vec3 expected = loads.scale * loads.line_load / eps;
    for (int n = 0; n < p.fibers()[f].num_nodes(); ++n) {
      const int fi = static_cast<int>(f);
      dev = std::max(dev, (r.d.segment<3>(p.dofs().beam_position(fi, n, 0)) - expected).cwiseAbs().maxCoeff());
      dev = std::max(dev, r.d.segment<3>(p.dofs().beam_tangent(fi, n, 0)).cwiseAbs().maxCoeff());
    }
  }
  return dev;
}

double hosted_length(const Problem& p) {
  double len = 0.0;
  for (std::size_t f = 0; f < p.segments().size(); ++f) {
    for (std::size_t e = 0; e < p.segments()[f].size(); ++e) {
      for (const Segment& s : p.segments()[f][e]) {
        if (s.hosted()) len += 0.5 * (s.xi_b - s.xi_a) * p.fibers()[f].elements[e].length;
      }
    }
  }
  return len;
}

// ---------------------------------------------------------------- patch tests

StudyParams patch_defaults(bool helix) {
  std::map<std::string, std::string> v{{"solid_E", "10"},
                                       {"solid_nu", "0.3"},
                                       {"grid", "4,4,7"},
                                       {"beam_E", "100"},
                                       {"beam_radius", "0.05"},
                                       {"line_load", "5"},
                                       {"penalty", "1e4"},
                                       {"gauss_points", "6"},
                                       {"scheme", "mortar-linear"},
                                       {"n_load_steps", "1"}};
  if (helix) {
    v["elements"] = "23,31";
    v["b2_scale"] = "0.999318";
    v["helix_radius"] = "0.45";
    v["helix_rise"] = "1.8";
    v["helix_turns"] = "3";
    v["helix_start_z"] = "0.1";
  } else {
    v["elements"] = "5,7";
    v["b2_scale"] = "1";
    v["beam_length"] = num(0.7 * std::sqrt(5.0));
  }
  return StudyParams(std::move(v));
}

Model patch_model(const StudyParams& p, bool helix, IntegrationType it) {
  Model m;
  const auto g = p.list("grid");
  if (g.size() != 3) throw InputError("grid", "expected three element counts");
  m.solid.grid = GridSpec{{static_cast<int>(g[0]), static_cast<int>(g[1]), static_cast<int>(g[2])},
                          Vec3(1.0, 1.0, 2.0), Vec3::Zero()};
  m.solid.material = SolidMaterial{SolidModel::NeoHooke, p.number("solid_E"), p.number("solid_nu")};
  // Statically determinate 3-2-1 support.
  m.solid.node_set_specs["origin"] = box_set(Vec3(0, 0, 0), Vec3(0, 0, 0));
  m.solid.node_set_specs["corner_x"] = box_set(Vec3(1, 0, 0), Vec3(1, 0, 0));
  m.solid.node_set_specs["corner_y"] = box_set(Vec3(0, 1, 0), Vec3(0, 1, 0));
  m.solid.mesh.dirichlet = {{"origin", {true, true, true}, Vec3::Zero()},
                            {"corner_x", {false, true, true}, Vec3::Zero()},
                            {"corner_y", {false, false, true}, Vec3::Zero()}};

  Curve curve;
  if (helix) {
    HelixCurve h;
    h.base = Vec3(0.5, 0.5, p.number("helix_start_z"));
    h.axis = Vec3::UnitZ();
    h.ref_dir = Vec3::UnitX();
    h.radius = p.number("helix_radius");
    h.turns = p.number("helix_turns");
    h.pitch = p.number("helix_rise") / h.turns;
    curve = h;
  } else {
    const Vec3 center(0.5, 0.5, 1.0);
    const Vec3 dir = Vec3(1.0, 1.0, 2.0).normalized();
    const double half = 0.5 * p.number("beam_length");
    curve = LineCurve{center - half * dir, center + half * dir};
  }
  const auto elements = p.list("elements");
  if (elements.size() != 2) throw InputError("elements", "expected two element counts");
  const double q = p.number("line_load");
  for (int b = 0; b < 2; ++b) {
    FiberInput f;
    f.curve = curve;
    f.n_elements = static_cast<int>(elements[b]);
    f.youngs_modulus = p.number("beam_E");
    f.radius = p.number("beam_radius");
    f.loads.line_load = Vec3(0.0, 0.0, b == 0 ? -q : q);
    f.loads.scale = b == 0 ? 1.0 : p.number("b2_scale");
    m.beams.push_back(std::move(f));
  }
  set_coupling(m, p.text("scheme"), it, p.integer("gauss_points"), p.number("penalty"));
  m.solver.n_load_steps = p.integer("n_load_steps");
  return m;
}

StudyResult patch_study(const std::string& name, bool helix, const StudyParams& p, const fs::path& out) {
  StudyResult res;
  res.name = name;
  res.columns = {"case",        "integration",           "converged",          "newton_iterations",
                 "max_solid_displacement", "beam_translation_deviation", "max_mid_curvature", "peak_stress",
                 "reaction_force_norm",    "runtime_s"};
  const std::string prefix = helix ? "helix" : "patch";
  for (IntegrationType it : {IntegrationType::ElementBased, IntegrationType::SegmentBased}) {
    const std::string label = integration_name(it);
    const CaseResult c = run_case(patch_model(p, helix, it), prefix + "_" + label, out);
    if (!c.converged) {
      res.failures.push_back(c.name);
      res.rows.push_back({c.name, label, "0", "", "nan", "nan", "nan", "nan", "nan", num(c.runtime)});
      continue;
    }
    const SolutionSummary& s = c.summary;
    const double dev = translation_deviation(*c.problem, c.solution);
    res.rows.push_back({c.name, label, "1", std::to_string(s.iterations), num(s.max_solid_displacement), num(dev),
                        num(s.max_mid_curvature), num(s.peak_stress), num(s.reaction_force.norm()), num(c.runtime)});
    res.metrics.emplace_back(label + "_max_solid_displacement", s.max_solid_displacement);
    res.metrics.emplace_back(label + "_beam_translation_deviation", dev);
    res.metrics.emplace_back(label + "_max_mid_curvature", s.max_mid_curvature);
    res.metrics.emplace_back(label + "_peak_stress", s.peak_stress);
    res.metrics.emplace_back(label + "_runtime", c.runtime);
  }
  if (res.failures.empty()) {
    res.metrics.emplace_back("peak_stress_ratio", res.metric("element_peak_stress") / res.metric("segment_peak_stress"));
  }
  return res;
}

// ------------------------------------------------------ strong discontinuity

StudyParams discontinuity_defaults() {
  return StudyParams({{"solid_E", "10"},
                      {"solid_nu", "0.3"},
                      {"beam_E", "100"},
                      {"beam_radius", "0.05"},
                      {"line_load", "1"},
                      {"penalty", "1e4"},
                      {"gauss_points", "6"},
                      {"schemes", "mortar-linear,gpts"},
                      {"variants", "face,edge"}});
}

Model discontinuity_model(const StudyParams& p, const std::string& variant, const std::string& scheme) {
  Model m;
  m.solid.grid = GridSpec{};
  m.solid.material = SolidMaterial{SolidModel::SaintVenantKirchhoff, p.number("solid_E"), p.number("solid_nu")};
  m.solid.node_set_specs["all"] = box_set(Vec3::Zero(), Vec3::Ones());
  m.solid.mesh.dirichlet = {{"all", {true, true, true}, Vec3::Zero()}};
  FiberInput f;
  if (variant == "face") {
    f.curve = LineCurve{Vec3(0.4, 0.5, 0.3), Vec3(1.6, 0.5, 0.7)};
  } else if (variant == "edge") {
    f.curve = LineCurve{Vec3(0.4, 0.4, 0.3), Vec3(1.6, 1.6, 0.7)};
  } else {
    throw InputError("variants", "unknown variant \"" + variant + "\" (expected face or edge)");
  }
  f.n_elements = 1;
  f.youngs_modulus = p.number("beam_E");
  f.radius = p.number("beam_radius");
  f.loads.line_load = Vec3(0.0, 0.0, -p.number("line_load"));
  f.loads.in_solid_only = true;
  m.beams.push_back(std::move(f));
  set_coupling(m, scheme, IntegrationType::SegmentBased, p.integer("gauss_points"), p.number("penalty"));
  return m;
}

StudyResult discontinuity_study(const StudyParams& p, const fs::path& out) {
  StudyResult res;
  res.name = "patch-discontinuity";
  res.columns = {"case",          "variant",       "scheme",        "converged",           "active_nodes",
                 "traction_deviation", "resultant_x", "resultant_y", "resultant_z", "expected_resultant_z",
                 "resultant_deviation", "runtime_s"};
  double max_traction_dev = 0.0, max_resultant_dev = 0.0;
  for (const std::string& variant : split(p.text("variants"), ',')) {
    for (const std::string& scheme : split(p.text("schemes"), ',')) {
      const CaseResult c = run_case(discontinuity_model(p, variant, scheme), "discontinuity_" + variant + "_" + scheme, out);
      if (!c.converged) {
        res.failures.push_back(c.name);
        res.rows.push_back({c.name, variant, scheme, "0", "", "nan", "nan", "nan", "nan", "nan", "nan", num(c.runtime)});
        continue;
      }
      const MortarOperators& ops = c.problem->operators();
      // Interface traction is the negative multiplier.
      const Vec3 traction = -c.problem->model().beams[0].loads.line_load;
      const Vec3 expected = traction * hosted_length(*c.problem);
      Vec3 resultant = Vec3::Zero();
      double dev = 0.0;
      int active = 0;
      for (int j = 0; j < ops.n_lambda(); ++j) {
        if (!ops.nodes[j].active) continue;
        ++active;
        const Vec3 t = -c.summary.multipliers[j];
        resultant += ops.kappa[j] * t;
        dev = std::max(dev, (t - traction).cwiseAbs().maxCoeff());
      }
      const double rdev = (resultant - expected).cwiseAbs().maxCoeff();
      if (scheme != "gpts") max_traction_dev = std::max(max_traction_dev, dev);
      max_resultant_dev = std::max(max_resultant_dev, rdev);
      res.rows.push_back({c.name, variant, scheme, "1", std::to_string(active), num(dev), num(resultant.x()),
                          num(resultant.y()), num(resultant.z()), num(expected.z()), num(rdev), num(c.runtime)});
      res.metrics.emplace_back(variant + "_" + scheme + "_traction_deviation", dev);
      res.metrics.emplace_back(variant + "_" + scheme + "_resultant_deviation", rdev);
    }
  }
  res.metrics.emplace_back("max_mortar_traction_deviation", max_traction_dev);
  res.metrics.emplace_back("max_resultant_deviation", max_resultant_dev);
  return res;
}

// ------------------------------------------- block with a tip-loaded fiber

std::map<std::string, std::string> block_defaults() {
  return {{"length", "5"},        {"solid_E", "10"},         {"solid_nu", "0"},     {"beam_E", "4346"},
          {"beam_radius", "0.125"}, {"moment", "0.025"},     {"gauss_points", "6"}, {"n_load_steps", "10"},
          {"integration", "segment"}};
}

Model block_model(const StudyParams& p, int n, int beam_elements, const std::string& scheme, double penalty) {
  const double length = p.number("length");
  const int nx = static_cast<int>(std::lround(length * n));
  Model m;
  m.solid.grid = GridSpec{{nx, n, n}, Vec3(length, 1.0, 1.0), Vec3::Zero()};
  m.solid.material = SolidMaterial{SolidModel::SaintVenantKirchhoff, p.number("solid_E"), p.number("solid_nu")};
  m.solid.node_set_specs["clamped_face"] = box_set(Vec3(0, 0, 0), Vec3(0, 1, 1));
  m.solid.mesh.dirichlet = {{"clamped_face", {true, true, true}, Vec3::Zero()}};
  FiberInput f;
  f.curve = LineCurve{Vec3(0.0, 0.5, 0.5), Vec3(length, 0.5, 0.5)};
  f.n_elements = beam_elements;
  f.youngs_modulus = p.number("beam_E");
  f.radius = p.number("beam_radius");
  f.loads.moments.push_back({beam_elements, Vec3(0.0, -p.number("moment"), 0.0)});
  BeamDirichlet clamp;
  clamp.node = 0;
  clamp.position = {true, true, true};
  clamp.tangent = {true, true, true};
  f.dirichlet.push_back(clamp);
  m.beams.push_back(std::move(f));
  set_coupling(m, scheme, parse_integration(p.text("integration")), p.integer("gauss_points"), penalty);
  m.solver.n_load_steps = p.integer("n_load_steps");
  return m;
}

int beam_elements_for(const StudyParams& p, int n, double ratio) {
  // h_beam = ratio * h_solid with h_solid = 1/n.
  return std::max(1, static_cast<int>(std::lround(p.number("length") * n / ratio)));
}

StudyParams convergence_defaults() {
  auto v = block_defaults();
  v["penalty"] = "100";
  v["ratio"] = "2.5";
  v["meshes"] = "2,3,4,6,8,12,16";
  v["reference"] = "8";
  v["scheme"] = "mortar-linear";
  return StudyParams(std::move(v));
}

StudyResult convergence_study(const StudyParams& p, const fs::path& out) {
  StudyResult res;
  res.name = "convergence";
  res.columns = {"case",  "n",     "h_solid",   "beam_elements", "converged", "newton_iterations", "tip_x",
                 "tip_y", "tip_z", "tip_magnitude", "e_total", "e_solid", "e_beam", "runtime_s"};
  const double ratio = p.number("ratio");
  const int n_ref = p.integer("reference");
  auto meshes = p.list("meshes");
  std::sort(meshes.begin(), meshes.end());
  auto make = [&](int n) {
    return block_model(p, n, beam_elements_for(p, n, ratio), p.text("scheme"), p.number("penalty"));
  };
  const CaseResult ref = run_case(make(n_ref), "convergence_n" + std::to_string(n_ref), out);
  if (!ref.converged) throw NonConvergence("convergence reference case failed: " + ref.message);
  const double ref_tip = ref.summary.tip_displacement.at(0).norm();
  res.metrics.emplace_back("reference_h_solid", 1.0 / n_ref);
  res.metrics.emplace_back("reference_tip_magnitude", ref_tip);

  std::vector<std::pair<double, double>> prekink, full;
  for (double nd : meshes) {
    const int n = static_cast<int>(nd);
    const std::string name = "convergence_n" + std::to_string(n);
    const int nb = beam_elements_for(p, n, ratio);
    if (n == n_ref) {
      const Vec3 tip = ref.summary.tip_displacement[0];
      res.rows.push_back({name, std::to_string(n), num(1.0 / n), std::to_string(nb), "1",
                          std::to_string(ref.summary.iterations), num(tip.x()), num(tip.y()), num(tip.z()),
                          num(tip.norm()), "0", "0", "0", num(ref.runtime)});
      continue;
    }
    const CaseResult c = run_case(make(n), name, out);
    if (!c.converged) {
      res.failures.push_back(c.name);
      res.rows.push_back({name, std::to_string(n), num(1.0 / n), std::to_string(nb), "0", "", "nan", "nan", "nan",
                          "nan", "nan", "nan", "nan", num(c.runtime)});
      continue;
    }
    const ErrorReport e = l2_error(*c.problem, c.solution.d, *ref.problem, ref.solution.d);
    const Vec3 tip = c.summary.tip_displacement[0];
    res.rows.push_back({name, std::to_string(n), num(1.0 / n), std::to_string(nb), "1",
                        std::to_string(c.summary.iterations), num(tip.x()), num(tip.y()), num(tip.z()),
                        num(tip.norm()), num(e.total), num(e.solid), num(e.beam), num(c.runtime)});
    res.metrics.emplace_back("e_n" + std::to_string(n), e.total);
    full.emplace_back(1.0 / n, e.total);
    if (n < n_ref) prekink.emplace_back(1.0 / n, e.total);
  }
  // Fits expect decreasing h.
  std::sort(prekink.begin(), prekink.end(), [](auto a, auto b) { return a.first > b.first; });
  std::sort(full.begin(), full.end(), [](auto a, auto b) { return a.first > b.first; });
  if (prekink.size() >= 2) {
    const double s_pre = convergence_order(prekink);
    res.metrics.emplace_back("slope_prekink", s_pre);
    if (full.size() > prekink.size()) {
      const double s_full = convergence_order(full);
      res.metrics.emplace_back("slope_full", s_full);
      res.metrics.emplace_back("kink_drop", s_pre - s_full);
    }
  }
  return res;
}

StudyParams sweep_defaults() {
  auto v = block_defaults();
  v["n_solid"] = "4";
  v["penalties"] = "1e1,1e2,1e3,1e4,1e5,1e6";
  v["ratios"] = "10,5,2.5,1.25";
  v["schemes"] = "mortar-linear,gpts";
  v["reference"] = "8";
  v["reference_ratio"] = "2.5";
  v["reference_penalty"] = "100";
  v["reference_scheme"] = "mortar-linear";
  v["growth_from"] = "1e3";
  return StudyParams(std::move(v));
}

StudyResult sweep_study(const StudyParams& p, const fs::path& out) {
  StudyResult res;
  res.name = "penalty-sweep";
  res.columns = {"case",          "scheme",  "ratio",   "penalty", "beam_elements", "converged",
                 "tip_magnitude", "e_total", "e_solid", "e_beam",  "runtime_s"};
  const int n_ref = p.integer("reference");
  const CaseResult ref =
      run_case(block_model(p, n_ref, beam_elements_for(p, n_ref, p.number("reference_ratio")), p.text("reference_scheme"),
                           p.number("reference_penalty")),
               "sweep_reference", out);
  if (!ref.converged) throw NonConvergence("penalty-sweep reference case failed: " + ref.message);

  const int n = p.integer("n_solid");
  const auto penalty_labels = split(p.text("penalties"), ',');
  const double growth_from = p.number("growth_from");
  for (const std::string& scheme : split(p.text("schemes"), ',')) {
    for (const std::string& ratio_label : split(p.text("ratios"), ',')) {
      const double ratio = parse_number("ratios", ratio_label);
      const int nb = beam_elements_for(p, n, ratio);
      std::vector<std::pair<double, double>> eps_err;
      for (const std::string& eps_label : penalty_labels) {
        const double eps = parse_number("penalties", eps_label);
        const std::string name = "sweep_" + scheme + "_ratio" + ratio_label + "_eps" + eps_label;
        const CaseResult c = run_case(block_model(p, n, nb, scheme, eps), name, out);
        if (!c.converged) {
          res.failures.push_back(name);
          res.rows.push_back({name, scheme, ratio_label, eps_label, std::to_string(nb), "0", "nan", "nan", "nan", "nan",
                              num(c.runtime)});
          continue;
        }
        const ErrorReport e = l2_error(*c.problem, c.solution.d, *ref.problem, ref.solution.d);
        res.rows.push_back({name, scheme, ratio_label, eps_label, std::to_string(nb), "1",
                            num(c.summary.tip_displacement[0].norm()), num(e.total), num(e.solid), num(e.beam),
                            num(c.runtime)});
        eps_err.emplace_back(eps, e.total);
      }
      // Relative spread over eps >= growth_from and growth from growth_from to
      // the largest penalty.
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0, e_from = -1.0, e_last = -1.0, eps_last = 0.0;
      for (const auto& [eps, err] : eps_err) {
        if (eps < growth_from * (1.0 - 1e-12)) continue;
        lo = std::min(lo, err);
        hi = std::max(hi, err);
        if (std::abs(eps - growth_from) <= 1e-12 * growth_from) e_from = err;
        if (eps >= eps_last) {
          eps_last = eps;
          e_last = err;
        }
      }
      const std::string key = scheme + "_ratio" + ratio_label;
      if (hi > 0.0) res.metrics.emplace_back(key + "_variation", (hi - lo) / lo);
      if (e_from > 0.0 && e_last > 0.0) res.metrics.emplace_back(key + "_growth", e_last / e_from);
    }
  }
  return res;
}

}  // namespace

// ------------------------------------------------------------------ public

void StudyParams::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) {
    std::string known;
    for (const auto& [k, v] : values_) known += (known.empty() ? "" : ", ") + k;
    throw InputError("--override " + key, "unknown parameter (known: " + known + ")");
  }
  it->second = value;
}

void StudyParams::apply(const std::vector<std::string>& overrides) {
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw InputError("--override " + o, "expected key=value");
    set(o.substr(0, eq), o.substr(eq + 1));
  }
}

const std::string& StudyParams::text(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw InputError(key, "unknown study parameter");
  return it->second;
}

double StudyParams::number(const std::string& key) const { return parse_number(key, text(key)); }

int StudyParams::integer(const std::string& key) const {
  const double v = number(key);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw InputError(key, "expected an integer, got \"" + text(key) + "\"");
  return static_cast<int>(v);
}

std::vector<double> StudyParams::list(const std::string& key) const {
  std::vector<double> out;
  for (const std::string& item : split(text(key), ',')) out.push_back(parse_number(key, item));
  if (out.empty()) throw InputError(key, "expected a comma-separated list");
  return out;
}

CaseResult run_deck_file(const fs::path& deck, const fs::path& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  CaseResult r;
  r.name = deck.stem().string();
  auto problem = std::make_shared<Problem>(load_deck(deck));
  r.problem = problem;
  fs::create_directories(out_dir);
  try {
    r.solution = newton_solve(*problem);
    r.converged = true;
  } catch (const SolveFailure& e) {
    r.message = e.what();
    r.solution.log = e.log();
  } catch (const NonConvergence& e) {
    r.message = e.what();
  } catch (const SingularSystem& e) {
    r.message = e.what();
  }
  if (r.converged) {
    export_fields(*problem, r.solution, out_dir);
    r.summary = summarize(*problem, r.solution);
  } else {
    std::ofstream os(out_dir / "convergence.csv");
    write_convergence_csv(os, r.solution.log);
  }
  r.runtime = seconds_since(t0);
  return r;
}

double StudyResult::metric(const std::string& key) const {
  for (const auto& [k, v] : metrics) {
    if (k == key) return v;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

void StudyResult::write_csv(const fs::path& path) const {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
}

void StudyResult::write_metrics_csv(const fs::path& path) const {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << "quantity,value\n";
  for (const auto& [k, v] : metrics) os << k << ',' << num(v) << '\n';
}

const std::vector<std::string>& study_names() {
  static const std::vector<std::string> names{"patch", "patch-helix", "patch-discontinuity", "convergence",
                                              "penalty-sweep"};
  return names;
}

StudyParams study_defaults(const std::string& name) {
  if (name == "patch") return patch_defaults(false);
  if (name == "patch-helix") return patch_defaults(true);
  if (name == "patch-discontinuity") return discontinuity_defaults();
  if (name == "convergence") return convergence_defaults();
  if (name == "penalty-sweep") return sweep_defaults();
  throw InputError("study", "unknown study \"" + name + "\"");
}

StudyResult run_study(const std::string& name, const StudyParams& params, const fs::path& out) {
  fs::create_directories(out);
  StudyResult res;
  if (name == "patch") {
    res = patch_study(name, false, params, out);
  } else if (name == "patch-helix") {
    res = patch_study(name, true, params, out);
  } else if (name == "patch-discontinuity") {
    res = discontinuity_study(params, out);
  } else if (name == "convergence") {
    res = convergence_study(params, out);
  } else if (name == "penalty-sweep") {
    res = sweep_study(params, out);
  } else {
    throw InputError("study", "unknown study \"" + name + "\"");
  }
  res.write_csv(out / (name + ".csv"));
  res.write_metrics_csv(out / (name + "_metrics.csv"));
  return res;
}

}  // namespace fibergrid
