#pragma once

// Deterministic SVG output: scatter of the embedding with clock glyphs.
// Every coordinate is written with two decimals so identical inputs give
// identical bytes.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "featureclock/clockcore.hpp"
#include "featureclock/dataset.hpp"
#include "featureclock/grouping.hpp"
#include "featureclock/intergroup.hpp"

namespace featureclock::render {

inline constexpr std::array<std::string_view, 10> kFeaturePalette = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
inline constexpr std::array<std::string_view, 10> kGroupPalette = {
    "#aec7e8", "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5",
    "#c49c94", "#f7b6d2", "#c7c7c7", "#dbdb8d", "#9edae5"};
// Features past the palette size reuse colors with these dash patterns.
inline constexpr std::array<std::string_view, 4> kDashPatterns = {"", "6,3", "2,2",
                                                                  "8,3,2,3"};
inline constexpr std::string_view kNoiseColor = "#9e9e9e";
inline constexpr std::string_view kSingleColor = "#4c72b0";

inline constexpr double kLabelNudgeDeg = 12.0;
inline constexpr double kLabelOffsetPx = 14.0;
inline constexpr double kArrowHeadLength = 9.0;
inline constexpr double kArrowHeadHalfWidth = 4.0;
inline constexpr double kMarkerRadius = 3.0;
inline constexpr double kLegendWidth = 190.0;
inline constexpr double kMargin = 20.0;
inline constexpr double kTitleBand = 30.0;
inline constexpr double kLabelBand = 40.0;

struct Style {
  std::string stroke = "none";
  std::string fill = "none";
  double stroke_width = 1.0;
  std::string dash;
  double opacity = 1.0;
};

struct CircleShape {
  Point2 center;
  double radius = 0.0;
  Style style;
  std::string role;
};

struct LineShape {
  Point2 from;
  Point2 to;
  Style style;
  std::string role;
};

// Closed polygon or open polyline.
struct PathShape {
  std::vector<Point2> points;
  bool closed = true;
  Style style;
  std::string role;
};

struct TextShape {
  Point2 at;
  std::string text;
  double size = 11.0;
  std::string anchor = "middle";
  std::string fill = "#222222";
  std::string role;
};

using Shape = std::variant<CircleShape, LineShape, PathShape, TextShape>;

struct LegendEntry {
  std::size_t order = 0;
  std::string label;
  std::string color;
  std::string dash;
};

// Data -> pixel map with a uniform scale and a flipped y axis.
struct ViewTransform {
  double scale = 1.0;
  double origin_x = 0.0;
  double origin_y = 0.0;

  Point2 to_px(Point2 p) const { return {origin_x + scale * p.x, origin_y - scale * p.y}; }
  Point2 to_data(Point2 q) const {
    return {(q.x - origin_x) / scale, (origin_y - q.y) / scale};
  }
};

struct Scene {
  int width = 900;
  int height = 600;
  ViewTransform transform;
  std::string title;
  std::vector<Shape> scatter;
  std::vector<Shape> glyphs;
  std::vector<Shape> annotations;
  std::vector<LegendEntry> feature_legend;
  std::vector<LegendEntry> group_legend;
};

struct RenderOptions {
  int width = 900;
  int height = 600;
  double clock_scale = 1.0;
  std::string title;
  // Circles (center, data-unit radius) that must fit inside the plot area.
  std::vector<std::pair<Point2, double>> extents;
};

inline std::string feature_color(std::size_t feature_index) {
  return std::string(kFeaturePalette[feature_index % kFeaturePalette.size()]);
}

inline std::string feature_dash(std::size_t feature_index) {
  return std::string(
      kDashPatterns[(feature_index / kFeaturePalette.size()) % kDashPatterns.size()]);
}

inline std::string group_color(int group_id) {
  if (group_id < 0) return std::string(kNoiseColor);
  return std::string(kGroupPalette[static_cast<std::size_t>(group_id) % kGroupPalette.size()]);
}

// Fixed two-decimal formatting; never emits "-0.00".
inline std::string fmt2(double v) {
  const double r = std::round(v * 100.0) / 100.0;
  char buf[64];
  const auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), r == 0.0 ? 0.0 : r, std::chars_format::fixed, 2);
  return std::string(buf, ptr);
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += ch;
    }
  }
  return out;
}

namespace detail {

inline double angular_distance(double a, double b) {
  double d = std::fmod(std::abs(a - b), 360.0);
  return d > 180.0 ? 360.0 - d : d;
}

inline void add_feature_legend(Scene& scene, std::size_t feature_index,
                               const std::string& name) {
  for (const auto& e : scene.feature_legend) {
    if (e.order == feature_index) return;
  }
  scene.feature_legend.push_back(
      {feature_index, name, feature_color(feature_index), feature_dash(feature_index)});
  std::stable_sort(scene.feature_legend.begin(), scene.feature_legend.end(),
                   [](const LegendEntry& l, const LegendEntry& r) { return l.order < r.order; });
}

inline Point2 polar(Point2 origin_px, double length, double angle_deg) {
  const auto [c, s] = cos_sin_deg(angle_deg);
  return {origin_px.x + length * c, origin_px.y - length * s};
}

// Line from `from` to `tip` with a filled head whose point sits on `tip`.
inline void add_arrow(std::vector<Shape>& out, Point2 from, Point2 tip,
                      const std::string& color, const std::string& dash,
                      const std::string& role) {
  Style line;
  line.stroke = color;
  line.stroke_width = 2.0;
  line.dash = dash;
  out.push_back(LineShape{from, tip, line, role});
  const double dx = tip.x - from.x;
  const double dy = tip.y - from.y;
  const double len = std::hypot(dx, dy);
  if (len <= 0.0) return;
  const double ux = dx / len, uy = dy / len;
  const double head = std::min(kArrowHeadLength, len);
  const double half = kArrowHeadHalfWidth * head / kArrowHeadLength;
  const Point2 base{tip.x - head * ux, tip.y - head * uy};
  Style fill;
  fill.fill = color;
  out.push_back(PathShape{{tip, {base.x - half * uy, base.y + half * ux},
                           {base.x + half * uy, base.y - half * ux}},
                          true, fill, role + "-head"});
}

}  // namespace detail

// Label angles for annotations placed in scan order: an angle within the
// nudge distance of an already placed label moves forward by the nudge.
inline std::vector<double> place_labels(const std::vector<double>& angles_deg) {
  std::vector<double> placed;
  for (double a : angles_deg) {
    double cur = a;
    for (int guard = 0; guard < 30; ++guard) {
      const bool clash = std::any_of(placed.begin(), placed.end(), [&](double p) {
        return detail::angular_distance(p, cur) < kLabelNudgeDeg - 1e-9;
      });
      if (!clash) break;
      cur = std::fmod(cur + kLabelNudgeDeg, 360.0);
    }
    placed.push_back(cur);
  }
  return placed;
}

// Frames the embedding (plus requested extents) and draws one marker per point.
inline Scene render_scatter(const Dataset& ds, const GroupingResult* grouping,
                            const RenderOptions& options = {}) {
  Scene scene;
  scene.width = options.width;
  scene.height = options.height;
  scene.title = options.title;

  double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
  double min_y = min_x, max_y = -min_x;
  const auto grow = [&](double x0, double x1, double y0, double y1) {
    min_x = std::min(min_x, x0);
    max_x = std::max(max_x, x1);
    min_y = std::min(min_y, y0);
    max_y = std::max(max_y, y1);
  };
  for (Index i = 0; i < ds.y.rows(); ++i) {
    grow(ds.y(i, 0), ds.y(i, 0), ds.y(i, 1), ds.y(i, 1));
  }
  for (const auto& [c, r] : options.extents) {
    grow(c.x - r, c.x + r, c.y - r, c.y + r);
  }
  double span_x = max_x - min_x;
  double span_y = max_y - min_y;
  if (!(span_x > 0.0)) span_x = 1.0;
  if (!(span_y > 0.0)) span_y = 1.0;

  const double left = kMargin + kLabelBand;
  const double right = options.width - kLegendWidth - kLabelBand;
  const double top = kTitleBand + kLabelBand;
  const double bottom = options.height - kMargin - kLabelBand;
  const double avail_w = std::max(10.0, right - left);
  const double avail_h = std::max(10.0, bottom - top);
  const double s = std::min(avail_w / span_x, avail_h / span_y);
  const double cx = 0.5 * (min_x + max_x);
  const double cy = 0.5 * (min_y + max_y);
  scene.transform.scale = s;
  scene.transform.origin_x = 0.5 * (left + right) - s * cx;
  scene.transform.origin_y = 0.5 * (top + bottom) + s * cy;

  for (Index i = 0; i < ds.y.rows(); ++i) {
    Style st;
    st.opacity = 0.8;
    if (grouping) {
      st.fill = group_color(grouping->labels[static_cast<std::size_t>(i)]);
    } else {
      st.fill = std::string(kSingleColor);
    }
    const bool noise = grouping && grouping->labels[static_cast<std::size_t>(i)] == kNoise;
    scene.scatter.push_back(CircleShape{scene.transform.to_px({ds.y(i, 0), ds.y(i, 1)}),
                                        kMarkerRadius, st, noise ? "point noise" : "point"});
  }
  if (grouping) {
    for (const auto& g : grouping->groups) {
      scene.group_legend.push_back({static_cast<std::size_t>(g.id), g.name, group_color(g.id), ""});
    }
    if (grouping->noise_count() > 0) {
      scene.group_legend.push_back({grouping->groups.size(), "noise", std::string(kNoiseColor), ""});
    }
  }
  return scene;
}

namespace detail {

inline void add_annotations(Scene& scene, Point2 anchor_px, double radius_px,
                            const std::vector<ClockArrow>& arrows) {
  std::vector<double> angles;
  for (const auto& a : arrows) angles.push_back(a.angle_deg);
  const auto placed = place_labels(angles);
  for (std::size_t i = 0; i < arrows.size(); ++i) {
    const Point2 at = polar(anchor_px, radius_px + kLabelOffsetPx, placed[i]);
    TextShape t;
    t.at = {at.x, at.y + 4.0};
    t.text = fmt2(arrows[i].magnitude);
    t.fill = feature_color(arrows[i].feature_index);
    t.role = "annotation";
    scene.annotations.push_back(std::move(t));
  }
}

inline void add_rim(Scene& scene, Point2 anchor_px, double radius_px) {
  Style rim;
  rim.stroke = "#444444";
  rim.fill = "#ffffff";
  rim.opacity = 0.55;
  rim.stroke_width = 1.2;
  scene.glyphs.push_back(CircleShape{anchor_px, radius_px, rim, "clock"});
}

inline void add_empty_caption(Scene& scene, Point2 anchor_px, double radius_px) {
  TextShape t;
  t.at = {anchor_px.x, anchor_px.y + radius_px + kLabelOffsetPx + 4.0};
  t.text = "no significant features";
  t.fill = "#555555";
  t.role = "caption";
  scene.annotations.push_back(std::move(t));
}

inline double max_magnitude(const std::vector<ClockArrow>& arrows) {
  double m = 0.0;
  for (const auto& a : arrows) m = std::max(m, a.magnitude);
  return m;
}

}  // namespace detail

// Circle of radius clock.scale * clock_scale at the anchor; arrows scaled so
// the largest magnitude reaches the rim.
inline Scene render_clock(Scene scene, const Clock& clock, const RenderOptions& options = {}) {
  const Point2 anchor_px = scene.transform.to_px(clock.anchor);
  const double radius_px = clock.scale * options.clock_scale * scene.transform.scale;
  detail::add_rim(scene, anchor_px, radius_px);
  if (clock.arrows.empty()) {
    detail::add_empty_caption(scene, anchor_px, radius_px);
    return scene;
  }
  const double top = detail::max_magnitude(clock.arrows);
  for (const auto& a : clock.arrows) {
    const double len = top > 0.0 ? a.magnitude / top * radius_px : 0.0;
    const Point2 tip = detail::polar(anchor_px, len, a.angle_deg);
    detail::add_arrow(scene.glyphs, anchor_px, tip, feature_color(a.feature_index),
                      feature_dash(a.feature_index), "arrow");
    detail::add_feature_legend(scene, a.feature_index, a.feature);
  }
  detail::add_annotations(scene, anchor_px, radius_px, clock.arrows);
  return scene;
}

// Center-to-center segment per edge with signed arrows along it, anchored at
// the midpoint; the longest arrow spans half the segment.
inline Scene render_intergroup(Scene scene, const std::vector<IntergroupClock>& clocks,
                               const RenderOptions& options = {}) {
  for (const auto& clock : clocks) {
    Style seg;
    seg.stroke = "#333333";
    seg.stroke_width = 1.5;
    seg.dash = "4,3";
    const Point2 a_px = scene.transform.to_px(clock.center_a);
    const Point2 b_px = scene.transform.to_px(clock.center_b);
    scene.glyphs.push_back(LineShape{a_px, b_px, seg, "segment"});
    Style dot;
    dot.fill = "#333333";
    scene.glyphs.push_back(CircleShape{a_px, 4.0, dot, "center"});
    scene.glyphs.push_back(CircleShape{b_px, 4.0, dot, "center"});

    const Point2 anchor_px = scene.transform.to_px(clock.anchor);
    const double radius_px = clock.scale * options.clock_scale * scene.transform.scale;
    const double top = detail::max_magnitude(clock.arrows);
    for (const auto& a : clock.arrows) {
      const double len = top > 0.0 ? a.magnitude / top * radius_px : 0.0;
      const Point2 tip = detail::polar(anchor_px, len, a.angle_deg);
      detail::add_arrow(scene.glyphs, anchor_px, tip, feature_color(a.feature_index),
                        feature_dash(a.feature_index), "arrow");
      detail::add_feature_legend(scene, a.feature_index, a.feature);
    }
    detail::add_annotations(scene, anchor_px, radius_px, clock.arrows);
  }
  return scene;
}

// Sweep samples (b_t cos t, b_t sin t) in data units, closed back to the
// first sample when there are at least three.
inline std::vector<Point2> circle_trace(const FeatureCircle& circle) {
  std::vector<Point2> pts;
  pts.reserve(circle.samples.size() + 1);
  for (const auto& s : circle.samples) {
    const auto [c, sn] = cos_sin_deg(s.angle_deg);
    pts.push_back({s.coefficient * c, s.coefficient * sn});
  }
  if (pts.size() >= 3) pts.push_back(pts.front());
  return pts;
}

inline Scene render_circles(Scene scene, const Clock& clock, const RenderOptions& options = {}) {
  const Point2 anchor_px = scene.transform.to_px(clock.anchor);
  const double radius_px = clock.scale * options.clock_scale * scene.transform.scale;
  detail::add_rim(scene, anchor_px, radius_px);
  if (!clock.circles || clock.circles->empty()) {
    detail::add_empty_caption(scene, anchor_px, radius_px);
    return scene;
  }
  const double top = detail::max_magnitude(clock.arrows);
  const double unit = top > 0.0 ? radius_px / top : 0.0;
  for (const auto& fc : *clock.circles) {
    PathShape path;
    path.closed = false;
    path.role = "circle-trace";
    path.style.stroke = feature_color(fc.feature_index);
    path.style.dash = feature_dash(fc.feature_index);
    path.style.stroke_width = 1.8;
    for (const auto& p : circle_trace(fc)) {
      path.points.push_back({anchor_px.x + unit * p.x, anchor_px.y - unit * p.y});
    }
    scene.glyphs.push_back(std::move(path));
    detail::add_feature_legend(scene, fc.feature_index, fc.feature);
  }
  std::vector<ClockArrow> labelled;
  for (const auto& a : clock.arrows) labelled.push_back(a);
  detail::add_annotations(scene, anchor_px, radius_px, labelled);
  return scene;
}

namespace detail {

inline std::string style_attrs(const Style& s) {
  std::string out = " fill=\"" + s.fill + "\" stroke=\"" + s.stroke + "\"";
  if (s.stroke != "none") out += " stroke-width=\"" + fmt2(s.stroke_width) + "\"";
  if (!s.dash.empty()) out += " stroke-dasharray=\"" + s.dash + "\"";
  if (s.opacity != 1.0) out += " opacity=\"" + fmt2(s.opacity) + "\"";
  return out;
}

inline std::string points_attr(const std::vector<Point2>& pts) {
  std::string out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) out += ' ';
    out += fmt2(pts[i].x) + "," + fmt2(pts[i].y);
  }
  return out;
}

struct ShapeWriter {
  std::string& out;

  void operator()(const CircleShape& c) const {
    out += "<circle class=\"" + c.role + "\" cx=\"" + fmt2(c.center.x) + "\" cy=\"" +
           fmt2(c.center.y) + "\" r=\"" + fmt2(c.radius) + "\"" + style_attrs(c.style) +
           "/>\n";
  }
  void operator()(const LineShape& l) const {
    out += "<line class=\"" + l.role + "\" x1=\"" + fmt2(l.from.x) + "\" y1=\"" +
           fmt2(l.from.y) + "\" x2=\"" + fmt2(l.to.x) + "\" y2=\"" + fmt2(l.to.y) + "\"" +
           style_attrs(l.style) + "/>\n";
  }
  void operator()(const PathShape& p) const {
    out += std::string(p.closed ? "<polygon" : "<polyline") + " class=\"" + p.role +
           "\" points=\"" + points_attr(p.points) + "\"" + style_attrs(p.style) + "/>\n";
  }
  void operator()(const TextShape& t) const {
    out += "<text class=\"" + t.role + "\" x=\"" + fmt2(t.at.x) + "\" y=\"" + fmt2(t.at.y) +
           "\" font-size=\"" + fmt2(t.size) + "\" text-anchor=\"" + t.anchor +
           "\" fill=\"" + t.fill + "\">" + xml_escape(t.text) + "</text>\n";
  }
};

}  // namespace detail

inline std::string to_svg(const Scene& scene) {
  std::string out;
  const std::string w = std::to_string(scene.width);
  const std::string h = std::to_string(scene.height);
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + w + "\" height=\"" + h +
         "\" viewBox=\"0 0 " + w + " " + h + "\" font-family=\"Helvetica, Arial, sans-serif\">\n";
  out += "<rect class=\"background\" x=\"0\" y=\"0\" width=\"" + w + "\" height=\"" + h +
         "\" fill=\"#ffffff\"/>\n";
  if (!scene.title.empty()) {
    out += "<text class=\"title\" x=\"" + fmt2(kMargin) + "\" y=\"" + fmt2(kMargin + 4.0) +
           "\" font-size=\"14.00\" text-anchor=\"start\" fill=\"#222222\">" +
           xml_escape(scene.title) + "</text>\n";
  }
  const detail::ShapeWriter writer{out};
  const auto layer = [&](const char* id, const std::vector<Shape>& shapes) {
    out += std::string("<g id=\"") + id + "\">\n";
    for (const auto& s : shapes) std::visit(writer, s);
    out += "</g>\n";
  };
  layer("scatter", scene.scatter);
  layer("glyphs", scene.glyphs);
  layer("annotations", scene.annotations);

  out += "<g id=\"legend\">\n";
  const double x0 = scene.width - kLegendWidth + 10.0;
  double y = kTitleBand + 10.0;
  for (const auto& e : scene.feature_legend) {
    Style st;
    st.stroke = e.color;
    st.stroke_width = 3.0;
    st.dash = e.dash;
    writer(LineShape{{x0, y}, {x0 + 22.0, y}, st, "legend-swatch"});
    writer(TextShape{{x0 + 30.0, y + 4.0}, e.label, 11.0, "start", "#222222", "legend-label"});
    y += 18.0;
  }
  if (!scene.group_legend.empty()) y += 10.0;
  for (const auto& e : scene.group_legend) {
    Style st;
    st.fill = e.color;
    writer(CircleShape{{x0 + 11.0, y}, 5.0, st, "legend-marker"});
    writer(TextShape{{x0 + 30.0, y + 4.0}, e.label, 11.0, "start", "#222222", "legend-label"});
    y += 18.0;
  }
  out += "</g>\n";
  out += "</svg>\n";
  return out;
}

}  // namespace featureclock::render
