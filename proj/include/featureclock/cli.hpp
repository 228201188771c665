#pragma once

// Command-line frontend: global, local, intergroup, demo and pca
// subcommands. Exit codes: 0 success, 2 input errors, 3 computation errors.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "featureclock/clockcore.hpp"
#include "featureclock/dataset.hpp"
#include "featureclock/grouping.hpp"
#include "featureclock/ingest.hpp"
#include "featureclock/intergroup.hpp"
#include "featureclock/iris.hpp"
#include "featureclock/render.hpp"
#include "featureclock/report.hpp"

namespace featureclock::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitComputation = 3;

struct Artifacts {
  std::string svg;
  report::Json json;
  std::vector<std::string> warnings;
};

struct CommandInput {
  std::string x_path;
  std::string y_path;
  std::optional<std::string> labels_path;
  std::string out_dir = ".";
  RawOptions raw;
};

inline render::RenderOptions render_options(const RunConfig& c, std::string title) {
  render::RenderOptions o;
  o.width = c.canvas_width;
  o.height = c.canvas_height;
  o.clock_scale = c.clock_scale;
  o.title = std::move(title);
  return o;
}

inline render::Scene draw_clock(render::Scene scene, const Clock& clock,
                                const render::RenderOptions& ro) {
  return clock.circles ? render::render_circles(std::move(scene), clock, ro)
                       : render::render_clock(std::move(scene), clock, ro);
}

inline Artifacts make_global(const Dataset& ds, const RunConfig& config) {
  Artifacts out;
  const Clock clock = build_global_clock(ds, config.clock_options());
  out.warnings = clock.warnings;

  auto ro = render_options(config, "Global Feature Clock");
  ro.extents.push_back({clock.anchor, clock.scale * config.clock_scale});
  auto scene = render::render_scatter(ds, nullptr, ro);
  scene = draw_clock(std::move(scene), clock, ro);
  out.svg = render::to_svg(scene);

  out.json = report::envelope("global", config, ds);
  out.json["clocks"].push_back(report::clock_json(clock));
  out.json["warnings"] = out.warnings;
  return out;
}

// Grouping from the labels file or the configured clustering.
inline GroupingResult resolve_grouping(const Dataset& ds, const RunConfig& config) {
  if (ds.labels && config.cluster.method != ClusterMethod::none) {
    throw InputError("give either --labels or --cluster, not both");
  }
  if (ds.labels) return from_labels(*ds.labels, ds.y);
  if (config.cluster.method == ClusterMethod::none) {
    throw InputError("a grouping is required: pass --labels FILE or --cluster kmeans:k|dbscan:eps,min_pts");
  }
  Matrix space;
  if (config.cluster.space == ClusterSpace::y) {
    space = ds.y;
  } else {
    space = config.standardize_x ? numstats::standardize_columns(ds.x).values
                                 : numstats::center_columns(ds.x);
  }
  if (config.cluster.method == ClusterMethod::kmeans) {
    return kmeans(space, ds.y, config.cluster.k, config.seed);
  }
  return dbscan(space, ds.y, config.cluster.eps, config.cluster.min_pts);
}

inline Artifacts make_local(const Dataset& ds, const GroupingResult& grouping,
                            const RunConfig& config) {
  if (grouping.groups.empty()) {
    throw ComputationError("no usable groups: every point is noise");
  }
  Artifacts out;
  const LocalClocks local = build_local_clocks(ds, grouping, config.clock_options());
  out.warnings = local.warnings;
  for (const auto& c : local.clocks) {
    out.warnings.insert(out.warnings.end(), c.warnings.begin(), c.warnings.end());
  }

  auto ro = render_options(config, "Local Feature Clocks");
  for (const auto& c : local.clocks) ro.extents.push_back({c.anchor, c.scale * config.clock_scale});
  auto scene = render::render_scatter(ds, &grouping, ro);
  for (const auto& c : local.clocks) scene = draw_clock(std::move(scene), c, ro);
  out.svg = render::to_svg(scene);

  out.json = report::envelope("local", config, ds);
  out.json["grouping"] = report::grouping_json(grouping);
  for (const auto& c : local.clocks) out.json["clocks"].push_back(report::clock_json(c));
  out.json["warnings"] = out.warnings;
  return out;
}

inline Artifacts make_intergroup(const Dataset& ds, const GroupingResult& grouping,
                                 const RunConfig& config) {
  if (grouping.groups.size() < 2) {
    throw ComputationError("inter-group clocks need at least 2 groups, found " +
                           std::to_string(grouping.groups.size()));
  }
  Artifacts out;
  const MstEdges mst = mst_over_centers(grouping);
  const IntergroupClocks result =
      build_intergroup_clocks(ds, grouping, mst, config.intergroup_options());
  out.warnings = result.warnings;

  const auto ro = render_options(config, "Inter-group Feature Clocks");
  auto scene = render::render_scatter(ds, &grouping, ro);
  scene = render::render_intergroup(std::move(scene), result.clocks, ro);
  out.svg = render::to_svg(scene);

  out.json = report::envelope("intergroup", config, ds);
  out.json["grouping"] = report::grouping_json(grouping);
  out.json["mst"] = report::mst_json(grouping, mst);
  for (const auto& c : result.clocks) out.json["clocks"].push_back(report::intergroup_json(c));
  out.json["warnings"] = out.warnings;
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write file: " + path.string());
  f << text;
  if (!f) throw InputError("failed writing file: " + path.string());
}

inline void write_artifacts(const std::string& out_dir, const std::string& stem,
                            const Artifacts& a) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw InputError("cannot create output directory " + out_dir + ": " + ec.message());
  write_text(std::filesystem::path(out_dir) / (stem + ".svg"), a.svg);
  write_text(std::filesystem::path(out_dir) / (stem + ".json"), report::serialize(a.json));
}

inline void emit_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

inline void prepend_warnings(Artifacts& a, const std::vector<std::string>& extra) {
  if (extra.empty()) return;
  std::vector<std::string> merged(extra);
  merged.insert(merged.end(), a.warnings.begin(), a.warnings.end());
  a.json["warnings"] = merged;
}

// Runs `body` and maps library exceptions onto exit codes.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    body();
    return kExitOk;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const ComputationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitComputation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitComputation;
  }
}

inline int run_global(const CommandInput& in, std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    auto vc = validate_config(in.raw);
    emit_warnings(vc.warnings, err);
    const Dataset ds = load_dataset(in.x_path, in.y_path, in.labels_path);
    auto a = make_global(ds, vc.config);
    prepend_warnings(a, vc.warnings);
    write_artifacts(in.out_dir, "clock", a);
    emit_warnings(a.warnings, err);
  });
}

inline int run_local(const CommandInput& in, std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    auto vc = validate_config(in.raw);
    emit_warnings(vc.warnings, err);
    const Dataset ds = load_dataset(in.x_path, in.y_path, in.labels_path);
    const GroupingResult grouping = resolve_grouping(ds, vc.config);
    auto a = make_local(ds, grouping, vc.config);
    prepend_warnings(a, vc.warnings);
    write_artifacts(in.out_dir, "local", a);
    emit_warnings(a.warnings, err);
  });
}

inline int run_intergroup(const CommandInput& in, std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    auto vc = validate_config(in.raw);
    emit_warnings(vc.warnings, err);
    const Dataset ds = load_dataset(in.x_path, in.y_path, in.labels_path);
    const GroupingResult grouping = resolve_grouping(ds, vc.config);
    auto a = make_intergroup(ds, grouping, vc.config);
    prepend_warnings(a, vc.warnings);
    write_artifacts(in.out_dir, "intergroup", a);
    emit_warnings(a.warnings, err);
  });
}

// Iris with species labels and its standardized PCA scores as the embedding.
inline Dataset iris_dataset() {
  Dataset ds;
  for (auto name : iris::kFeatureNames) ds.feature_names.emplace_back(name);
  ds.x.resize(static_cast<Index>(iris::kRows.size()), 4);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < iris::kRows.size(); ++i) {
    const auto& r = iris::kRows[i];
    const auto ii = static_cast<Index>(i);
    ds.x(ii, 0) = r.sepal_length;
    ds.x(ii, 1) = r.sepal_width;
    ds.x(ii, 2) = r.petal_length;
    ds.x(ii, 3) = r.petal_width;
    labels.emplace_back(iris::kSpecies[static_cast<std::size_t>(r.species)]);
  }
  const Matrix xs = numstats::standardize_columns(ds.x).values;
  ds.y = numstats::pca_2d(xs).scores(xs);
  ds.labels = std::move(labels);
  ds.provenance.x_path = "builtin:iris";
  ds.provenance.y_path = "builtin:iris-pca";
  ds.provenance.labels_path = "builtin:iris-species";
  ds.provenance.rows = ds.rows();
  validate_dataset(ds);
  return ds;
}

inline int run_demo(const std::string& out_dir, std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    const Dataset ds = iris_dataset();
    const RunConfig config = validate_config({}).config;
    const GroupingResult species = from_labels(*ds.labels, ds.y);
    const auto global = make_global(ds, config);
    const auto local = make_local(ds, species, config);
    const auto inter = make_intergroup(ds, species, config);
    write_artifacts(out_dir, "clock", global);
    write_artifacts(out_dir, "local", local);
    write_artifacts(out_dir, "intergroup", inter);
    emit_warnings(global.warnings, err);
    emit_warnings(local.warnings, err);
    emit_warnings(inter.warnings, err);
  });
}

// Writes the two-component PCA scores of X as an embedding CSV (header x,y).
inline int run_pca(const std::string& x_path, const std::string& out_path, bool standardize,
                   std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    const CsvTable table = read_csv(x_path);
    const Matrix x = table_to_matrix(table, x_path);
    const Matrix xs = standardize ? numstats::standardize_columns(x).values
                                  : numstats::center_columns(x);
    write_matrix_csv(out_path, {"x", "y"}, numstats::pca_2d(xs).scores(xs));
  });
}

inline void add_common_flags(CLI::App& cmd, CommandInput& in) {
  cmd.add_option("--x", in.x_path, "CSV of high-dimensional features (header = names)")
      ->required();
  cmd.add_option("--y", in.y_path, "CSV of the 2D embedding (header x,y)")->required();
  cmd.add_option("--labels", in.labels_path, "CSV with a single 'label' column");
  cmd.add_option("--cluster", in.raw.cluster, "kmeans:k or dbscan:eps[,min_pts]");
  cmd.add_option("--cluster-space", in.raw.cluster_space, "cluster on 'x' (default) or 'y'");
  cmd.add_option("--alpha", in.raw.alpha, "significance level (default 0.05)");
  cmd.add_option("--top-k", in.raw.top_k, "show only the k strongest features");
  cmd.add_option("--theta-step", in.raw.theta_step_deg,
                 "circles sweep step in degrees (default 5)");
  cmd.add_flag("--no-standardize-x", in.raw.no_standardize_x, "only center X");
  cmd.add_flag("--no-center-y", in.raw.no_center_y, "use the raw embedding as target");
  cmd.add_flag("--standardize-betas", in.raw.standardize_betas,
               "divide coefficients by their pooled standard deviation");
  cmd.add_option("--significance-rule", in.raw.significance_rule,
                 "'or' (either axis fit) or 'and' (both)");
  cmd.add_flag("--circles", in.raw.circles, "draw every projection's coefficients");
  cmd.add_option("--scale", in.raw.clock_scale, "clock radius multiplier (default 1)");
  cmd.add_option("--out-dir", in.out_dir, "output directory (default .)");
  cmd.add_option("--seed", in.raw.seed, "random seed for clustering (default 0)");
  cmd.add_option("--canvas", in.raw.canvas, "canvas size WxH in px (default 900x600)");
}

inline int run_cli(int argc, const char* const* argv, std::ostream& err = std::cerr) {
  CLI::App app{"Feature Clocks: explain 2D embeddings with high-dimensional features"};
  app.set_version_flag("--version", std::string(report::kToolVersion));
  app.require_subcommand(1);

  CommandInput global_in, local_in, inter_in;
  auto* global = app.add_subcommand("global", "one clock over all points");
  add_common_flags(*global, global_in);
  auto* local = app.add_subcommand("local", "one clock per group");
  add_common_flags(*local, local_in);
  auto* inter = app.add_subcommand("intergroup", "logistic clocks along the MST of group centers");
  add_common_flags(*inter, inter_in);

  std::string demo_out = "demo_out";
  auto* demo = app.add_subcommand("demo", "run all clocks on the bundled Iris data");
  demo->add_option("--out-dir", demo_out, "output directory (default ./demo_out)");

  std::string pca_x, pca_out;
  bool pca_raw = false;
  auto* pca = app.add_subcommand("pca", "write a 2D PCA embedding CSV for an X file");
  pca->add_option("--x", pca_x, "CSV of features")->required();
  pca->add_option("--out", pca_out, "output CSV (header x,y)")->required();
  pca->add_flag("--no-standardize-x", pca_raw, "only center X before PCA");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cout, err);
    return kExitInput;
  }

  if (global->parsed()) return run_global(global_in, err);
  if (local->parsed()) return run_local(local_in, err);
  if (inter->parsed()) return run_intergroup(inter_in, err);
  if (demo->parsed()) return run_demo(demo_out, err);
  if (pca->parsed()) return run_pca(pca_x, pca_out, !pca_raw, err);
  return kExitInput;
}

}  // namespace featureclock::cli
