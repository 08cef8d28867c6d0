#pragma once

#include "layertess/field.hpp"
#include "layertess/mesh.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace layertess {

/// Everything a command needs. Settings come from defaults, then an optional
/// key = value config file, then command-line flags.
struct RunConfig
{
  std::string command;

  // Input mesh: a file path or a generator spec (grid:NX,NY or sphere:SUBDIV).
  std::string mesh_path;
  std::string gen;
  std::string laplacian = "uniform";

  // Seeds: a count drawn with `rng`, or an explicit vertex list file.
  std::size_t n_seeds = 0;
  std::uint64_t rng = 1;
  std::string seed_file;

  CouplingParams params;
  StopCriteria stop;

  std::size_t iters = 10;
  std::size_t dump_every = 0;
  double threshold = 0.2;
  std::string field_path;
  std::string oracle = "auto";
  std::size_t samples = 2000;

  std::string out_dir = "out";
  int threads = 0;

  // Export toggles.
  bool write_labels = true;
  bool write_snapshot = true;
  bool write_timings = false;
};

/// Applies one setting by key (flag name without dashes). Throws Error("config")
/// for unknown keys or malformed values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Reads `key = value` lines; '#' starts a comment.
void apply_config_file(RunConfig& cfg, const std::string& path);

/// Every setting as `key = value`, one per line, in a fixed order.
std::string config_text(const RunConfig& cfg);

/// Hex FNV-1a hash of the settings that influence artifact content.
std::string config_hash(const RunConfig& cfg);

/// Process exit status for an error code: 2 input, 3 config, 4 extraction,
/// 5 numerical, 1 otherwise.
int exit_code_for(const std::string& error_code);

TriMesh load_input_mesh(const RunConfig& cfg);

/// Seed vertices from the seed file, or `n_seeds` distinct vertices drawn by
/// sampling faces proportionally to area and snapping to the nearest corner.
std::vector<Index> choose_seeds(const TriMesh& mesh, const RunConfig& cfg);
std::vector<Index> random_seeds(const TriMesh& mesh, std::size_t count, std::uint64_t rng_seed);
std::vector<Index> read_seed_file(const std::string& path);

/// Runs cfg.command and returns the exit status; errors are reported on `err`.
int run_command(const RunConfig& cfg, std::ostream& out, std::ostream& err);

// Individual commands; they throw layertess::Error on failure.
void cmd_tessellate(const RunConfig& cfg, std::ostream& out);
void cmd_lloyd(const RunConfig& cfg, std::ostream& out);
void cmd_dual(const RunConfig& cfg, std::ostream& out);
void cmd_compare(const RunConfig& cfg, std::ostream& out);
void cmd_gen(const RunConfig& cfg, std::ostream& out);

} // namespace layertess
