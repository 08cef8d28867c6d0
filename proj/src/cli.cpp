#include "layertess/cli.hpp"

#include "layertess/analysis.hpp"
#include "layertess/dual.hpp"
#include "layertess/error.hpp"
#include "layertess/lloyd.hpp"
#include "layertess/parallel.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

namespace layertess {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(const std::string& s)
{
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value)
{
  T out{};
  const char* begin = value.data();
  const char* end = begin + value.size();
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end || value.empty())
    throw Error("config", "invalid value '" + value + "' for '" + key + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value)
{
  if (value == "1" || value == "true" || value == "on" || value == "yes")
    return true;
  if (value == "0" || value == "false" || value == "off" || value == "no")
    return false;
  throw Error("config", "invalid boolean '" + value + "' for '" + key + "'");
}

std::string format_double(double x)
{
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

LaplacianScheme parse_laplacian(const std::string& name)
{
  if (name == "uniform")
    return LaplacianScheme::uniform;
  if (name == "cotan")
    return LaplacianScheme::cotan_clamped;
  throw Error("config", "unknown laplacian '" + name + "' (expected uniform or cotan)");
}

struct GenSpec
{
  enum Kind { grid, sphere } kind = grid;
  Index nx = 0;
  Index ny = 0;
  int subdiv = 0;
};

GenSpec parse_gen(const std::string& spec)
{
  GenSpec g;
  const auto colon = spec.find(':');
  if (colon == std::string::npos)
    throw Error("config", "generator spec '" + spec + "' must be grid:NX,NY or sphere:SUBDIV");
  const std::string kind = spec.substr(0, colon);
  const std::string args = spec.substr(colon + 1);
  if (kind == "grid") {
    const auto comma = args.find(',');
    if (comma == std::string::npos)
      throw Error("config", "grid spec needs NX,NY: '" + spec + "'");
    g.kind = GenSpec::grid;
    g.nx = parse_number<Index>("gen", args.substr(0, comma));
    g.ny = parse_number<Index>("gen", args.substr(comma + 1));
  } else if (kind == "sphere") {
    g.kind = GenSpec::sphere;
    g.subdiv = parse_number<int>("gen", args);
    if (g.subdiv < 0 || g.subdiv > 8)
      throw Error("config", "sphere subdivision must be in [0, 8]");
  } else {
    throw Error("config", "unknown generator '" + kind + "'");
  }
  return g;
}

std::string fnv1a_hex(const std::string& text)
{
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

/// Fields every artifact header carries.
json header_json(const RunConfig& cfg)
{
  return {{"config_hash", config_hash(cfg)},
          {"rng", cfg.rng},
          {"command", cfg.command},
          {"mesh", cfg.mesh_path.empty() ? "gen:" + cfg.gen : cfg.mesh_path},
          {"laplacian", cfg.laplacian}};
}

std::string header_comment(const RunConfig& cfg)
{
  return "config_hash=" + config_hash(cfg) + " rng=" + std::to_string(cfg.rng);
}

fs::path prepare_out_dir(const RunConfig& cfg)
{
  const fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw Error("io", "cannot create output directory '" + cfg.out_dir + "': " + ec.message());
  return dir;
}

std::ofstream open_out(const fs::path& path)
{
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw Error("io", "cannot write '" + path.string() + "'");
  return os;
}

std::string padded(std::size_t k)
{
  std::ostringstream os;
  os << std::setw(4) << std::setfill('0') << k;
  return os.str();
}

void write_labels_file(const fs::path& path, const LayeredField& field, const RunConfig& cfg)
{
  auto os = open_out(path);
  write_labels_csv(os, sharp_labels(field), header_comment(cfg));
}

void write_field_file(const fs::path& path, const LayeredField& field, const RunConfig& cfg)
{
  auto os = open_out(path);
  write_field_snapshot(os, field, cfg.params, header_json(cfg).dump());
}

struct Prepared
{
  TriMesh mesh;
  Laplacian lap;
  std::vector<Index> seeds;
};

Prepared prepare(const RunConfig& cfg)
{
  cfg.params.validate();
  Prepared p;
  p.mesh = load_input_mesh(cfg);
  p.lap = build_laplacian(p.mesh, parse_laplacian(cfg.laplacian));
  p.seeds = choose_seeds(p.mesh, cfg);
  return p;
}

} // namespace

void apply_setting(RunConfig& cfg, const std::string& raw_key, const std::string& raw_value)
{
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  if (key == "mesh")
    cfg.mesh_path = value;
  else if (key == "gen")
    cfg.gen = value;
  else if (key == "laplacian")
    cfg.laplacian = value;
  else if (key == "seeds")
    cfg.n_seeds = parse_number<std::size_t>(key, value);
  else if (key == "rng")
    cfg.rng = parse_number<std::uint64_t>(key, value);
  else if (key == "seed-file")
    cfg.seed_file = value;
  else if (key == "w")
    cfg.params.w = parse_number<double>(key, value);
  else if (key == "a")
    cfg.params.a = parse_number<double>(key, value);
  else if (key == "e")
    cfg.params.e = parse_number<double>(key, value);
  else if (key == "e-base")
    cfg.params.e_base = parse_number<double>(key, value);
  else if (key == "mu")
    cfg.params.mu = parse_number<double>(key, value);
  else if (key == "dt")
    cfg.params.dt = parse_number<double>(key, value);
  else if (key == "tol")
    cfg.stop.tol = parse_number<double>(key, value);
  else if (key == "max-steps")
    cfg.stop.max_steps = parse_number<std::size_t>(key, value);
  else if (key == "iters")
    cfg.iters = parse_number<std::size_t>(key, value);
  else if (key == "dump-every")
    cfg.dump_every = parse_number<std::size_t>(key, value);
  else if (key == "threshold")
    cfg.threshold = parse_number<double>(key, value);
  else if (key == "field")
    cfg.field_path = value;
  else if (key == "oracle")
    cfg.oracle = value;
  else if (key == "samples")
    cfg.samples = parse_number<std::size_t>(key, value);
  else if (key == "out")
    cfg.out_dir = value;
  else if (key == "threads")
    cfg.threads = parse_number<int>(key, value);
  else if (key == "labels")
    cfg.write_labels = parse_bool(key, value);
  else if (key == "snapshot")
    cfg.write_snapshot = parse_bool(key, value);
  else if (key == "timings")
    cfg.write_timings = parse_bool(key, value);
  else
    throw Error("config", "unknown setting '" + key + "'");
}

void apply_config_file(RunConfig& cfg, const std::string& path)
{
  std::ifstream is(path);
  if (!is)
    throw Error("io", "cannot open config file '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    if (trim(line).empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("config", path + ":" + std::to_string(line_no) + ": expected key = value");
    apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
}

namespace {

std::string content_settings(const RunConfig& cfg)
{
  std::ostringstream os;
  os << "mesh = " << cfg.mesh_path << '\n'
     << "gen = " << cfg.gen << '\n'
     << "laplacian = " << cfg.laplacian << '\n'
     << "seeds = " << cfg.n_seeds << '\n'
     << "rng = " << cfg.rng << '\n'
     << "seed-file = " << cfg.seed_file << '\n'
     << "w = " << format_double(cfg.params.w) << '\n'
     << "a = " << format_double(cfg.params.a) << '\n'
     << "e = " << format_double(cfg.params.e) << '\n'
     << "e-base = " << format_double(cfg.params.e_base) << '\n'
     << "mu = " << format_double(cfg.params.mu) << '\n'
     << "dt = " << format_double(cfg.params.dt) << '\n'
     << "tol = " << format_double(cfg.stop.tol) << '\n'
     << "max-steps = " << cfg.stop.max_steps << '\n'
     << "iters = " << cfg.iters << '\n'
     << "dump-every = " << cfg.dump_every << '\n'
     << "threshold = " << format_double(cfg.threshold) << '\n'
     << "field = " << cfg.field_path << '\n'
     << "oracle = " << cfg.oracle << '\n'
     << "samples = " << cfg.samples << '\n'
     << "labels = " << (cfg.write_labels ? "true" : "false") << '\n'
     << "snapshot = " << (cfg.write_snapshot ? "true" : "false") << '\n'
     << "timings = " << (cfg.write_timings ? "true" : "false") << '\n';
  return os.str();
}

} // namespace

std::string config_text(const RunConfig& cfg)
{
  return content_settings(cfg) + "out = " + cfg.out_dir + "\nthreads = " + std::to_string(cfg.threads) + '\n';
}

std::string config_hash(const RunConfig& cfg)
{
  return fnv1a_hex(content_settings(cfg));
}

int exit_code_for(const std::string& code)
{
  if (code == "io" || code == "parse" || code == "non-triangular" || code == "degenerate-face" ||
      code == "non-spherical" || code == "input" || code == "empty-mesh" || code == "isolated-vertex")
    return 2;
  if (code == "config" || code == "invalid-seed" || code == "duplicate-seed" || code == "size")
    return 3;
  if (code == "non-manifold-residual" || code == "non-orientable" || code == "vanished-cell")
    return 4;
  if (code == "numerical-blowup" || code == "negative-field")
    return 5;
  return 1;
}

TriMesh load_input_mesh(const RunConfig& cfg)
{
  if (!cfg.mesh_path.empty() && !cfg.gen.empty())
    throw Error("config", "give either a mesh file or a generator spec, not both");
  if (!cfg.mesh_path.empty())
    return load_mesh(cfg.mesh_path);
  if (cfg.gen.empty())
    throw Error("config", "no input mesh: use --mesh or --gen");
  const GenSpec g = parse_gen(cfg.gen);
  if (g.kind == GenSpec::grid)
    return gen_periodic_grid(g.nx, g.ny);
  return gen_icosphere(g.subdiv);
}

std::vector<Index> read_seed_file(const std::string& path)
{
  std::ifstream is(path);
  if (!is)
    throw Error("io", "cannot open seed file '" + path + "'");
  std::vector<Index> seeds;
  std::string line;
  while (std::getline(is, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    std::istringstream ls(line);
    std::string token;
    while (ls >> token) {
      for (char& c : token)
        if (c == ',')
          c = ' ';
      std::istringstream ts(token);
      std::string piece;
      while (ts >> piece) {
        try {
          seeds.push_back(parse_number<Index>("seed-file", piece));
        } catch (const Error&) {
          throw Error("parse", "bad vertex id '" + piece + "' in seed file '" + path + "'");
        }
      }
    }
  }
  if (seeds.empty())
    throw Error("input", "seed file '" + path + "' lists no vertices");
  return seeds;
}

std::vector<Index> random_seeds(const TriMesh& mesh, std::size_t count, std::uint64_t rng_seed)
{
  if (mesh.n_faces() == 0)
    throw Error("empty-mesh", "cannot draw seeds on an empty mesh");
  if (count == 0 || count > static_cast<std::size_t>(mesh.n_vertices()))
    throw Error("config", "seed count must be in [1, " + std::to_string(mesh.n_vertices()) + "]");
  std::mt19937_64 gen(rng_seed);
  std::discrete_distribution<std::size_t> pick_face(mesh.face_area.begin(), mesh.face_area.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<char> used(mesh.n_vertices(), 0);
  std::vector<Index> seeds;
  seeds.reserve(count);
  const std::size_t max_draws = 1000 * count + 10000;
  for (std::size_t draw = 0; seeds.size() < count; ++draw) {
    if (draw == max_draws)
      throw Error("config", "could not draw " + std::to_string(count) + " distinct seeds");
    const Index f = static_cast<Index>(pick_face(gen));
    const double r1 = std::sqrt(unit(gen));
    const double r2 = unit(gen);
    const double b0 = 1.0 - r1;
    const double b1 = r1 * (1.0 - r2);
    const double b2 = r1 * r2;
    const std::array<double, 3> bary{b0, b1, b2};
    // The nearest corner of a sample point has the largest barycentric weight.
    int best = 0;
    for (int k = 1; k < 3; ++k)
      if (bary[k] > bary[best])
        best = k;
    const Index v = mesh.faces[f][best];
    if (used[v])
      continue;
    used[v] = 1;
    seeds.push_back(v);
  }
  return seeds;
}

std::vector<Index> choose_seeds(const TriMesh& mesh, const RunConfig& cfg)
{
  const bool from_file = !cfg.seed_file.empty();
  const bool from_count = cfg.n_seeds > 0;
  if (from_file == from_count)
    throw Error("config", "give exactly one of --seeds N or --seed-file F");
  if (from_file)
    return read_seed_file(cfg.seed_file);
  return random_seeds(mesh, cfg.n_seeds, cfg.rng);
}

void cmd_tessellate(const RunConfig& cfg, std::ostream& out)
{
  Prepared p = prepare(cfg);
  LayeredField field = init_field(p.mesh, p.seeds);
  const fs::path dir = prepare_out_dir(cfg);

  StepObserver observer;
  if (cfg.dump_every > 0 && cfg.write_labels) {
    observer = [&](const LayeredField& f, const StepStats&) {
      if (f.step_count % cfg.dump_every == 0)
        write_labels_file(dir / ("labels_step_" + padded(f.step_count) + ".csv"), f, cfg);
    };
  }
  const EvolveResult result = evolve(field, p.lap, cfg.params, cfg.stop, observer);

  {
    auto os = open_out(dir / "steps.csv");
    os << "# " << header_comment(cfg) << '\n' << "step,max_delta,nnz_phi,base_mass\n";
    os << std::setprecision(17);
    for (std::size_t s = 0; s < result.trace.size(); ++s) {
      const StepStats& st = result.trace[s];
      os << s + 1 << ',' << st.max_delta << ',' << st.nnz_phi << ',' << st.base_mass << '\n';
    }
  }
  if (cfg.write_timings) {
    auto os = open_out(dir / "timings.csv");
    os << "# " << header_comment(cfg) << '\n'
       << "step,spgemm_s,skeleton_s,expand_s,update_s,normalize_s,total_s,spgemm_share,reallocations\n";
    for (std::size_t s = 0; s < result.trace.size(); ++s) {
      const StepStats& st = result.trace[s];
      const double total = st.total_time();
      os << s + 1 << ',' << st.spgemm_time << ',' << st.skeleton_time << ',' << st.expand_time << ','
         << st.update_time << ',' << st.normalize_time << ',' << total << ','
         << (total > 0.0 ? st.spgemm_time / total : 0.0) << ',' << st.reallocations << '\n';
    }
  }
  if (cfg.write_snapshot)
    write_field_file(dir / "field.txt", field, cfg);
  if (cfg.write_labels)
    write_labels_file(dir / "labels.csv", field, cfg);

  json summary;
  summary["header"] = header_json(cfg);
  summary["vertices"] = p.mesh.n_vertices();
  summary["faces"] = p.mesh.n_faces();
  summary["cells"] = field.n_cells();
  summary["seeds"] = field.seeds;
  summary["steps"] = field.step_count;
  summary["converged"] = result.converged;
  summary["base_mass"] = field.base_mass();
  summary["band_fraction"] = band_fraction(field);
  summary["nnz_phi"] = field.phi.nnz();
  {
    auto os = open_out(dir / "summary.json");
    os << summary.dump(2) << '\n';
  }
  out << "tessellate: " << field.n_cells() << " cells, " << field.step_count << " steps, "
      << (result.converged ? "converged" : "not converged") << ", base mass " << field.base_mass() << '\n';
}

void cmd_lloyd(const RunConfig& cfg, std::ostream& out)
{
  if (cfg.iters < 1)
    throw Error("config", "lloyd needs --iters >= 1");
  Prepared p = prepare(cfg);
  const fs::path dir = prepare_out_dir(cfg);

  auto write_iteration = [&](const LloydState& state) {
    const LloydRecord& rec = state.history.back();
    const std::string tag = padded(rec.iteration);
    {
      auto os = open_out(dir / ("area_hist_iter_" + tag + ".csv"));
      write_histogram_csv(os, area_histogram(rec.cell_areas), header_comment(cfg));
    }
    if (cfg.write_labels && cfg.dump_every > 0 && rec.iteration % cfg.dump_every == 0)
      write_labels_file(dir / ("labels_iter_" + tag + ".csv"), state.field, cfg);
  };

  LloydState state = lloyd_start(p.mesh, p.lap, cfg.params, p.seeds, cfg.stop);
  write_iteration(state);
  for (std::size_t it = 0; it < cfg.iters; ++it) {
    lloyd_iterate(state, p.mesh, p.lap, cfg.params, 1, cfg.stop);
    write_iteration(state);
  }

  {
    auto os = open_out(dir / "history.json");
    os << history_json(state, header_json(cfg).dump()) << '\n';
  }
  if (cfg.write_snapshot)
    write_field_file(dir / "field.txt", state.field, cfg);
  if (cfg.write_labels)
    write_labels_file(dir / "labels.csv", state.field, cfg);

  const LloydRecord& first = state.history.front();
  const LloydRecord& last = state.history.back();
  out << "lloyd: " << state.iteration << " iterations, area variance " << first.area_variance << " -> "
      << last.area_variance << ", " << last.moved << " seeds moved in the last iteration\n";
}

void cmd_dual(const RunConfig& cfg, std::ostream& out)
{
  const std::string field_path = cfg.field_path.empty() ? (fs::path(cfg.out_dir) / "field.txt").string()
                                                        : cfg.field_path;
  std::ifstream fs_in(field_path);
  if (!fs_in)
    throw Error("io", "cannot open field artifact '" + field_path + "'");
  std::string header_text;
  CouplingParams params;
  LayeredField field = read_field_snapshot(fs_in, &params, &header_text);

  // The mesh defaults to the one recorded in the snapshot header.
  RunConfig mesh_cfg = cfg;
  if (cfg.mesh_path.empty() && cfg.gen.empty()) {
    const json header = json::parse(header_text);
    const std::string source = header.value("mesh", "");
    if (source.empty())
      throw Error("input", "field artifact '" + field_path + "' does not name its mesh; pass --mesh or --gen");
    if (source.rfind("gen:", 0) == 0)
      mesh_cfg.gen = source.substr(4);
    else
      mesh_cfg.mesh_path = source;
  }
  const TriMesh mesh = load_input_mesh(mesh_cfg);
  if (mesh.n_vertices() != field.n_vertices())
    throw Error("input", "field artifact has " + std::to_string(field.n_vertices()) +
                             " vertices but the mesh has " + std::to_string(mesh.n_vertices()));

  const AdjacencyMatrix adjacency = curated_adjacency(field, mesh, cfg.threshold);
  const fs::path dir = prepare_out_dir(cfg);
  {
    auto os = open_out(dir / "adjacency.txt");
    os << "# " << header_comment(mesh_cfg) << '\n';
    write_triplets(os, adjacency.A);
  }

  const DualMesh dual = build_dual(adjacency, field, mesh);
  const DualCheck check = check_dual(dual, &adjacency);
  const json header = header_json(mesh_cfg);
  {
    auto os = open_out(dir / "dual.obj");
    write_dual_obj(os, dual, header_comment(mesh_cfg));
  }
  {
    json diag = json::parse(dual_diagnostics_json(adjacency, dual, header.dump()));
    diag["euler_characteristic"] = check.euler_characteristic;
    diag["edge_manifold"] = check.edge_manifold;
    diag["consistently_oriented"] = check.consistently_oriented;
    diag["cliques_adjacent"] = check.cliques_adjacent;
    auto os = open_out(dir / "dual_diagnostics.json");
    os << diag.dump(2) << '\n';
  }

  QualityReport report;
  report.quality = triangle_quality(dual);
  if (!dual.periodic && !dual.triangles.empty()) {
    const std::size_t samples = std::max<std::size_t>(cfg.samples, 1000);
    report.distance = hausdorff(mesh, dual_to_mesh(dual), samples, cfg.rng);
  }
  const std::vector<double> areas = cell_areas(field, mesh);
  report.cell_areas = area_histogram(areas);
  {
    auto os = open_out(dir / "quality.json");
    os << quality_report_json(report, header.dump()) << '\n';
  }

  out << "dual: " << dual.n_vertices() << " vertices, " << dual.n_edges() << " edges, " << dual.triangles.size()
      << " triangles, euler characteristic " << check.euler_characteristic << ", mean quality "
      << report.quality.mean_quality << '\n';
}

void cmd_compare(const RunConfig& cfg, std::ostream& out)
{
  if (cfg.gen.empty())
    throw Error("input", "compare needs a generator mesh (--gen)");
  const GenSpec g = parse_gen(cfg.gen);
  std::string oracle = cfg.oracle;
  if (oracle == "auto")
    oracle = g.kind == GenSpec::grid ? "planar" : "sphere";
  if (oracle != "planar" && oracle != "sphere")
    throw Error("config", "unknown oracle '" + oracle + "' (expected planar, sphere or auto)");
  if ((oracle == "planar") != (g.kind == GenSpec::grid))
    throw Error("input", "oracle '" + oracle + "' does not match generator '" + cfg.gen + "'");

  Prepared p = prepare(cfg);
  LayeredField field = init_field(p.mesh, p.seeds);
  const EvolveResult result = evolve(field, p.lap, cfg.params, cfg.stop);
  const std::vector<Index> engine = sharp_labels(field);

  std::vector<Vec3> seed_pos;
  seed_pos.reserve(p.seeds.size());
  for (const Index s : p.seeds)
    seed_pos.push_back(p.mesh.positions[s]);
  const std::vector<Index> reference = oracle == "planar" ? euclidean_voronoi_labels(p.mesh, seed_pos)
                                                          : sphere_voronoi_labels(p.mesh, p.seeds);
  const double margin = 2.0 * p.mesh.mean_edge_length();
  const std::vector<char> mask =
    margin_mask(p.mesh, seed_pos, margin, oracle == "planar" ? Metric::euclidean : Metric::great_circle);
  std::size_t masked = 0;
  for (const char m : mask)
    masked += m != 0;

  const double agree_all = label_agreement(engine, reference);
  const double agree_masked = label_agreement(engine, reference, mask);

  const fs::path dir = prepare_out_dir(cfg);
  json report;
  report["header"] = header_json(cfg);
  report["oracle"] = oracle;
  report["steps"] = field.step_count;
  report["converged"] = result.converged;
  report["margin"] = margin;
  report["masked_vertices"] = masked;
  report["vertices"] = p.mesh.n_vertices();
  report["agreement_masked"] = agree_masked;
  report["agreement_all"] = agree_all;
  {
    auto os = open_out(dir / "compare.json");
    os << report.dump(2) << '\n';
  }
  if (cfg.write_labels) {
    auto a = open_out(dir / "labels_engine.csv");
    write_labels_csv(a, engine, header_comment(cfg));
    auto b = open_out(dir / "labels_oracle.csv");
    write_labels_csv(b, reference, header_comment(cfg));
  }
  out << "compare: agreement " << agree_masked << " on " << masked << " masked vertices (" << agree_all
      << " overall)\n";
}

void cmd_gen(const RunConfig& cfg, std::ostream& out)
{
  if (cfg.gen.empty())
    throw Error("config", "gen needs --gen grid:NX,NY or sphere:SUBDIV");
  RunConfig gen_cfg = cfg;
  gen_cfg.mesh_path.clear();
  const TriMesh mesh = load_input_mesh(gen_cfg);
  const fs::path dir = prepare_out_dir(cfg);
  auto os = open_out(dir / "mesh.obj");
  write_obj(os, mesh, header_comment(cfg) + " gen=" + cfg.gen);
  out << "gen: " << mesh.n_vertices() << " vertices, " << mesh.n_faces() << " faces\n";
}

int run_command(const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
  try {
    set_num_threads(cfg.threads);
    if (cfg.command == "tessellate")
      cmd_tessellate(cfg, out);
    else if (cfg.command == "lloyd")
      cmd_lloyd(cfg, out);
    else if (cfg.command == "dual")
      cmd_dual(cfg, out);
    else if (cfg.command == "compare")
      cmd_compare(cfg, out);
    else if (cfg.command == "gen")
      cmd_gen(cfg, out);
    else
      throw Error("config", "unknown command '" + cfg.command + "'");
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return exit_code_for(ex.code());
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}

} // namespace layertess
