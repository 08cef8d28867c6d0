#include "layertess/cli.hpp"
#include "layertess/error.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

namespace {

struct FlagSpec
{
  const char* key;
  const char* help;
};

constexpr FlagSpec value_flags[] = {
  {"mesh", "Input mesh file (.obj or .off)"},
  {"gen", "Generated input: grid:NX,NY or sphere:SUBDIV"},
  {"laplacian", "Laplacian weights: uniform or cotan"},
  {"seeds", "Number of random seeds"},
  {"rng", "Random seed for seeding and sampling"},
  {"seed-file", "File listing seed vertex ids"},
  {"w", "Coupling w"},
  {"a", "Coupling a"},
  {"e", "Coupling e between cells"},
  {"e-base", "Coupling e between a cell and the base layer"},
  {"mu", "Mobility"},
  {"dt", "Time step"},
  {"tol", "Convergence tolerance on the per-entry change"},
  {"max-steps", "Step limit per field evolution"},
  {"iters", "Lloyd iterations"},
  {"out", "Output directory"},
  {"threads", "Worker thread cap (0 = default)"},
  {"dump-every", "Write labels every K steps (tessellate) or iterations (lloyd)"},
  {"threshold", "Adjacency threshold for dual extraction"},
  {"field", "Field snapshot read by dual (default OUT/field.txt)"},
  {"oracle", "compare oracle: planar, sphere or auto"},
  {"samples", "Surface samples per direction for the distance metric"},
  {"labels", "Write label CSVs (true/false)"},
  {"snapshot", "Write the field snapshot (true/false)"},
  {"timings", "Write per-step phase timings (true/false)"},
};

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Layered-field surface tessellation"};
  app.require_subcommand(1);

  std::string config_file;
  bool print_config = false;
  std::map<std::string, std::string> values;

  const char* commands[][2] = {
    {"tessellate", "Evolve the layered field to convergence and export labels"},
    {"lloyd", "Run Lloyd-like relaxation of the seeds"},
    {"dual", "Extract the dual triangle mesh from a field snapshot"},
    {"compare", "Compare the converged labels with a Voronoi oracle"},
    {"gen", "Write a generated mesh as OBJ"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_file, "Flat key = value config file; flags override it");
    sub->add_flag("--print-config", print_config, "Print the effective configuration and exit");
    for (const FlagSpec& f : value_flags)
      sub->add_option(std::string("--") + f.key, values[f.key], f.help);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int status = app.exit(ex);
    return status == 0 ? 0 : 3;
  }

  layertess::RunConfig cfg;
  cfg.command = app.get_subcommands().front()->get_name();
  try {
    if (!config_file.empty())
      layertess::apply_config_file(cfg, config_file);
    CLI::App* sub = app.get_subcommands().front();
    for (const FlagSpec& f : value_flags)
      if (sub->count(std::string("--") + f.key) > 0)
        layertess::apply_setting(cfg, f.key, values[f.key]);
  } catch (const layertess::Error& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return layertess::exit_code_for(ex.code());
  }

  if (print_config) {
    std::cout << layertess::config_text(cfg);
    return 0;
  }
  return layertess::run_command(cfg, std::cout, std::cerr);
}
