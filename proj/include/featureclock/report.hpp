#pragma once

// Machine-readable clock report. Objects are key-sorted and every real is
// rounded to 12 significant digits so reruns serialize identically.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "featureclock/clockcore.hpp"
#include "featureclock/dataset.hpp"
#include "featureclock/grouping.hpp"
#include "featureclock/ingest.hpp"
#include "featureclock/intergroup.hpp"

namespace featureclock::report {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kToolName = "featureclock";
inline constexpr std::string_view kToolVersion = "1.0.0";

inline Json real(double v) {
  if (!std::isfinite(v)) return nullptr;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  const double r = std::strtod(buf, nullptr);
  return r == 0.0 ? 0.0 : r;
}

inline Json point(Point2 p) { return Json::array({real(p.x), real(p.y)}); }

inline Json config_json(const RunConfig& c) {
  Json j;
  j["alpha"] = real(c.alpha);
  j["top_k"] = c.top_k ? Json(*c.top_k) : Json(nullptr);
  j["theta_step_deg"] = real(c.theta_step_deg);
  j["projections"] = c.projections;
  j["standardize_x"] = c.standardize_x;
  j["center_y"] = c.center_y;
  j["standardize_betas"] = c.standardize_betas;
  j["clock_scale"] = real(c.clock_scale);
  j["significance_rule"] = c.significance_rule == SignificanceRule::any_axis ? "or" : "and";
  j["circles"] = c.circles;
  j["seed"] = c.seed;
  j["canvas"] = Json::array({c.canvas_width, c.canvas_height});
  Json cl;
  switch (c.cluster.method) {
    case ClusterMethod::none: cl["method"] = nullptr; break;
    case ClusterMethod::kmeans:
      cl["method"] = "kmeans";
      cl["k"] = c.cluster.k;
      break;
    case ClusterMethod::dbscan:
      cl["method"] = "dbscan";
      cl["eps"] = real(c.cluster.eps);
      cl["min_pts"] = c.cluster.min_pts;
      break;
  }
  cl["space"] = c.cluster.space == ClusterSpace::x ? "x" : "y";
  j["cluster"] = std::move(cl);
  return j;
}

inline Json arrow_json(const ClockArrow& a) {
  return Json{{"feature", a.feature},
              {"feature_index", a.feature_index},
              {"angle_deg", real(a.angle_deg)},
              {"magnitude", real(a.magnitude)},
              {"beta0", real(a.beta0)},
              {"beta90", real(a.beta90)},
              {"p0", real(a.p0)},
              {"p90", real(a.p90)},
              {"significant", a.significant}};
}

inline Json clock_json(const Clock& c) {
  Json j;
  j["variant"] = std::string(to_string(c.variant));
  j["group"] = c.group;
  j["member_count"] = c.members.size();
  j["anchor"] = point(c.anchor);
  j["scale"] = real(c.scale);
  j["arrows"] = Json::array();
  for (const auto& a : c.arrows) j["arrows"].push_back(arrow_json(a));
  j["features"] = Json::array();
  for (const auto& a : c.features) j["features"].push_back(arrow_json(a));
  if (c.circles) {
    Json circles = Json::array();
    for (const auto& fc : *c.circles) {
      Json samples = Json::array();
      for (const auto& s : fc.samples) {
        samples.push_back(Json::array({real(s.angle_deg), real(s.coefficient)}));
      }
      circles.push_back(Json{{"feature", fc.feature},
                             {"feature_index", fc.feature_index},
                             {"samples", std::move(samples)}});
    }
    j["circles"] = std::move(circles);
  }
  j["warnings"] = c.warnings;
  return j;
}

inline Json intergroup_json(const IntergroupClock& c) {
  Json j;
  j["variant"] = "intergroup";
  j["edge"] = Json{{"from", c.name_a}, {"to", c.name_b}, {"from_id", c.group_a},
                   {"to_id", c.group_b}};
  j["anchor"] = point(c.anchor);
  j["axis_angle_deg"] = real(c.axis_angle_deg);
  j["scale"] = real(c.scale);
  j["member_count"] = c.members;
  j["converged"] = c.converged;
  j["separated"] = c.separated;
  j["iterations"] = c.iterations;
  const auto with_coefficient = [&c](const ClockArrow& a) {
    Json r = arrow_json(a);
    r["coefficient"] = real(c.coefficients[a.feature_index]);
    r["p_value"] = real(a.p0);
    return r;
  };
  j["arrows"] = Json::array();
  for (const auto& a : c.arrows) j["arrows"].push_back(with_coefficient(a));
  j["features"] = Json::array();
  for (const auto& a : c.features) j["features"].push_back(with_coefficient(a));
  return j;
}

inline Json dataset_json(const Dataset& ds) {
  return Json{{"rows", ds.rows()},
              {"features", ds.features()},
              {"feature_names", ds.feature_names},
              {"x_path", ds.provenance.x_path},
              {"y_path", ds.provenance.y_path},
              {"labels_path", ds.provenance.labels_path}};
}

inline Json grouping_json(const GroupingResult& g) {
  Json groups = Json::array();
  for (const auto& grp : g.groups) {
    groups.push_back(Json{{"id", grp.id},
                          {"name", grp.name},
                          {"size", grp.members.size()},
                          {"center", point(grp.center)}});
  }
  return Json{{"source", std::string(to_string(g.source))},
              {"groups", std::move(groups)},
              {"noise", g.noise_count()}};
}

inline Json mst_json(const GroupingResult& g, const MstEdges& edges) {
  Json out = Json::array();
  for (const auto& e : edges) {
    out.push_back(Json{{"from_id", e.a},
                       {"to_id", e.b},
                       {"from", g.groups[static_cast<std::size_t>(e.a)].name},
                       {"to", g.groups[static_cast<std::size_t>(e.b)].name},
                       {"length", real(e.length)}});
  }
  return out;
}

inline Json envelope(std::string_view command, const RunConfig& config, const Dataset& ds) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["tool"] = Json{{"name", std::string(kToolName)}, {"version", std::string(kToolVersion)}};
  j["command"] = std::string(command);
  j["config"] = config_json(config);
  j["dataset"] = dataset_json(ds);
  j["clocks"] = Json::array();
  j["warnings"] = Json::array();
  return j;
}

inline std::string serialize(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace featureclock::report
