#include "fibergrid/studies.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;

namespace {

void print_notes(const fibergrid::Problem& problem) {
  for (const auto& note : problem.notes()) std::cerr << "note: " << note << '\n';
}

int cmd_run(const fs::path& deck, const fs::path& out) {
  const fibergrid::CaseResult r = fibergrid::run_deck_file(deck, out);
  print_notes(*r.problem);
  if (!r.converged) {
    std::cerr << "error: " << r.message << '\n';
    return 2;
  }
  const auto& s = r.summary;
  std::cout << "converged: load factor " << s.load_factor << ", " << s.iterations << " Newton iterations, "
            << s.cutbacks << " cutbacks\n";
  for (std::size_t f = 0; f < s.tip_displacement.size(); ++f) {
    std::cout << "fiber " << f << " tip displacement |u| = " << s.tip_displacement[f].norm() << " m\n";
  }
  std::cout << "max solid displacement " << s.max_solid_displacement << " m\n";
  std::cout << "results written to " << out.string() << '\n';
  return 0;
}

int cmd_study(const std::string& name, const fs::path& out, const std::vector<std::string>& overrides) {
  fibergrid::StudyParams params = fibergrid::study_defaults(name);
  params.apply(overrides);
  const fibergrid::StudyResult res = fibergrid::run_study(name, params, out);
  for (const auto& [key, value] : res.metrics) std::cout << key << " = " << value << '\n';
  std::cout << "table written to " << (out / (name + ".csv")).string() << '\n';
  for (const auto& f : res.failures) std::cerr << "case did not converge: " << f << '\n';
  return res.failures.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fibergrid: beams embedded in hyperelastic solids"};
  app.require_subcommand(1);

  fs::path deck, run_out;
  auto* run = app.add_subcommand("run", "Solve a JSON deck");
  run->add_option("deck", deck, "Deck file")->required();
  run->add_option("--out", run_out, "Output directory")->required();

  std::string study_name;
  fs::path study_out;
  std::vector<std::string> overrides;
  auto* study = app.add_subcommand("study", "Run a built-in study");
  study->add_option("name", study_name, "Study name")
      ->required()
      ->check(CLI::IsMember(fibergrid::study_names()));
  study->add_option("--out", study_out, "Output directory")->required();
  study->add_option("--override", overrides, "Parameter override key=value")->allow_extra_args(false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(deck, run_out);
    return cmd_study(study_name, study_out, overrides);
  } catch (const fibergrid::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 1;
  } catch (const fibergrid::NonConvergence& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const fibergrid::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
