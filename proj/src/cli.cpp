#include "mn/cli.hpp"

#include "mn/baseline_mc.hpp"
#include "mn/marching_neurons.hpp"
#include "mn/metrics.hpp"
#include "mn/tessellation.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace mn::cli {

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << '\n';
}

/// Loads the network; a positional encoding is swapped for its surrogate when
/// `knots` is set.
Network load(const std::string& path, std::optional<int> knots) {
  Network net = parse_network(read_json(path));
  if (net.encoding && knots) net = with_pwl_encoding(net, *knots);
  return net;
}

nlohmann::json stats_json(const TraversalStats& s) {
  return {{"cells_created", s.cells_created}, {"cells_pruned", s.cells_pruned},
          {"cells_split", s.cells_split},     {"cells_emitted", s.cells_emitted},
          {"peak_live_cells", s.peak_live_cells}, {"steps", s.steps},
          {"prune_s", s.prune_s},             {"split_s", s.split_s},
          {"collapse_s", s.collapse_s},       {"extract_s", s.extract_s},
          {"total_s", s.total_s}};
}

std::string layer_summary(const Network& net) {
  std::ostringstream os;
  os << "input_dim " << net.input_dim << ", layers [";
  for (int i = 0; i < net.depth(); ++i) os << (i ? "→" : "") << net.layers[static_cast<std::size_t>(i)].outputs();
  os << "], params " << net.parameter_count();
  if (net.encoding) os << ", positional encoding with " << net.encoding->freqs.size() << " frequencies";
  return os.str();
}

/// "fixture" or "mc:R" with R >= 2.
std::string check_ref_source(const std::string& s) {
  if (s == "fixture") return {};
  if (s.rfind("mc:", 0) == 0) {
    try {
      std::size_t used = 0;
      const int r = std::stoi(s.substr(3), &used);
      if (used == s.size() - 3 && r >= 2) return {};
    } catch (const std::exception&) {
    }
  }
  return "expected 'fixture' or 'mc:R' with R >= 2, got '" + s + "'";
}

TriMesh triangles_of(const Mesh& mesh) {
  for (const auto& f : mesh.faces)
    if (f.size() != 3) return tessellate(mesh, Tessellation::fan0, 1e-6);
  return as_trimesh(mesh);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact zero level sets of ReLU networks", "mneurons"};
  app.require_subcommand(1);

  const std::vector<std::string> strategies{"fan0", "centroid", "strip"};

  // extract
  auto* ex = app.add_subcommand("extract", "Analytic extraction of the zero level set");
  std::string ex_net, ex_out, ex_stats;
  std::string ex_strategy;
  bool ex_no_prune = false;
  std::size_t ex_batch = EngineConfig{}.batch_size;
  int ex_knots = 6;
  int ex_threads = 0;
  ex->add_option("--net", ex_net, "Network JSON")->required()->check(CLI::ExistingFile);
  ex->add_option("--out", ex_out, "Output OBJ")->required();
  ex->add_option("--strategy", ex_strategy, "Triangulate faces: fan0, centroid or strip")
      ->check(CLI::IsMember(strategies));
  ex->add_flag("--no-prune", ex_no_prune, "Disable range-analysis pruning");
  ex->add_option("--batch", ex_batch, "Cells per engine step")->check(CLI::PositiveNumber);
  ex->add_option("--stats", ex_stats, "Write traversal statistics JSON");
  ex->add_option("--pe-knots", ex_knots, "Surrogate knots per period for positional encodings")
      ->check(CLI::Range(3, 1 << 16));
  ex->add_option("--threads", ex_threads, "Worker threads (0: all)")->check(CLI::NonNegativeNumber);

  // mc
  auto* mc = app.add_subcommand("mc", "Marching Cubes baseline");
  std::string mc_net, mc_out;
  int mc_res = 64;
  mc->add_option("--net", mc_net, "Network JSON")->required()->check(CLI::ExistingFile);
  mc->add_option("--res", mc_res, "Cubes per axis")->required()->check(CLI::Range(2, 4096));
  mc->add_option("--out", mc_out, "Output OBJ")->required();

  // metrics
  auto* me = app.add_subcommand("metrics", "Soft precision, soft recall and triangle quality");
  std::string me_net, me_mesh, me_ref, me_out;
  std::size_t me_samples = std::size_t{1} << 20, me_ref_points = std::size_t{1} << 14;
  std::uint64_t me_seed = 0;
  std::optional<int> me_knots;
  me->add_option("--net", me_net, "Network JSON")->required()->check(CLI::ExistingFile);
  me->add_option("--mesh", me_mesh, "Mesh OBJ")->required()->check(CLI::ExistingFile);
  me->add_option("--ref-source", me_ref, "Reference points: fixture or mc:R")
      ->required()
      ->check(CLI::Validator(check_ref_source, "fixture|mc:R"));
  me->add_option("--out", me_out, "Report JSON")->required();
  me->add_option("--samples", me_samples, "Surface samples for soft precision")->check(CLI::PositiveNumber);
  me->add_option("--ref-points", me_ref_points, "Reference points for soft recall")->check(CLI::PositiveNumber);
  me->add_option("--seed", me_seed, "Sampling seed");
  me->add_option("--pe-knots", me_knots, "Evaluate the surrogate of a positional encoding")
      ->check(CLI::Range(3, 1 << 16));

  // tessellate
  auto* te = app.add_subcommand("tessellate", "Triangulate polygon faces");
  std::string te_in, te_out;
  std::string te_strategy;
  te->add_option("--in", te_in, "Input OBJ")->required()->check(CLI::ExistingFile);
  te->add_option("--strategy", te_strategy, "fan0, centroid or strip")
      ->required()
      ->check(CLI::IsMember(strategies));
  te->add_option("--out", te_out, "Output OBJ")->required();

  // info
  auto* in = app.add_subcommand("info", "Print layer shapes and parameter count");
  std::string in_net;
  in->add_option("--net", in_net, "Network JSON")->required()->check(CLI::ExistingFile);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*ex) {
      const Network net = load(ex_net, ex_knots);
      EngineConfig cfg;
      cfg.batch_size = ex_batch;
      cfg.disable_pruning = ex_no_prune;
      cfg.threads = ex_threads;
      const ExtractResult res = extract(net, cfg);
      Mesh mesh = weld(res.patches, res.dim, cfg.tol);
      if (mesh.empty()) err << "warning: no surface in domain\n";
      if (!ex_strategy.empty() && !mesh.empty()) {
        if (mesh.dim != 3) throw ShapeError("tessellation needs a 3D mesh");
        mesh = as_mesh(tessellate(mesh, *parse_tessellation(ex_strategy)));
      }
      write_obj(ex_out, mesh);
      if (!ex_stats.empty()) write_json(ex_stats, stats_json(res.stats));
      out << mesh.vertices.size() << " vertices, " << mesh.faces.size() << " faces\n";
    } else if (*mc) {
      const Network net = load(mc_net, std::nullopt);
      const Mesh mesh = marching_cubes(net, mc_res);
      if (mesh.empty()) err << "warning: no surface in domain\n";
      write_obj(mc_out, mesh);
      out << mesh.vertices.size() << " vertices, " << mesh.faces.size() << " triangles\n";
    } else if (*me) {
      const auto t0 = std::chrono::steady_clock::now();
      const nlohmann::json file = read_json(me_net);
      const Network net = load(me_net, me_knots);
      const Mesh mesh = read_obj(me_mesh);
      if (mesh.empty()) throw Error("mesh " + me_mesh + " is empty");

      std::vector<Vec3> refs;
      if (me_ref == "fixture") {
        const auto shape = shape_from_metadata(file);
        if (!shape) throw Error(me_net + " has no metadata.shape for --ref-source fixture");
        refs = sample_shape(*shape, me_ref_points, me_seed + 1);
      } else {
        const Mesh ref_mesh = marching_cubes(net, std::stoi(me_ref.substr(3)));
        if (ref_mesh.empty()) throw Error("reference Marching Cubes mesh is empty");
        refs = sample_surface(as_trimesh(ref_mesh), me_ref_points, me_seed + 1);
      }

      MetricReport report;
      report.soft_precision = soft_precision(net, mesh, me_samples, me_seed);
      const RecallResult recall = soft_recall(net, mesh, refs);
      report.soft_recall = recall.value;
      report.recall_points = recall.used;
      report.recall_dropped = recall.dropped;
      if (recall.dropped > 0) err << "warning: " << recall.dropped << " reference points diverged\n";
      if (mesh.dim == 3) {
        const TriMesh tris = triangles_of(mesh);
        report.tri_quality = triangle_quality(tris);
        report.triangle_count = tris.triangles.size();
      }
      report.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      write_json(me_out, to_json(report));
      out << format_table({{me_mesh, report}});
    } else if (*te) {
      const Mesh mesh = read_obj(te_in);
      if (mesh.dim != 3) throw ShapeError("tessellation needs a 3D mesh");
      write_obj(te_out, as_mesh(tessellate(mesh, *parse_tessellation(te_strategy))));
    } else if (*in) {
      const Network net = load(in_net, std::nullopt);
      out << layer_summary(net) << '\n';
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace mn::cli
