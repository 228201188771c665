#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "featureclock/render.hpp"
#include "test_util.hpp"

namespace fc = featureclock;
namespace rd = featureclock::render;
using fc::Index;
using fc::Matrix;

namespace {

template <class T>
std::vector<T> shapes(const std::vector<rd::Shape>& layer, const std::string& role) {
  std::vector<T> out;
  for (const auto& s : layer) {
    if (const auto* p = std::get_if<T>(&s); p && p->role == role) out.push_back(*p);
  }
  return out;
}

double length(const rd::LineShape& l) { return std::hypot(l.to.x - l.from.x, l.to.y - l.from.y); }

// Minimal well-formedness check: every opened element is closed in order.
bool balanced_xml(const std::string& svg) {
  std::vector<std::string> stack;
  const std::regex tag(R"(<(/?)([a-zA-Z]+)[^>]*?(/?)>)");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), tag); it != std::sregex_iterator();
       ++it) {
    const auto& m = *it;
    if (m[3] == "/") continue;
    if (m[1] == "/") {
      if (stack.empty() || stack.back() != m[2]) return false;
      stack.pop_back();
    } else {
      stack.push_back(m[2]);
    }
  }
  return stack.empty();
}

fc::Clock hand_clock(std::vector<std::pair<double, double>> mag_angle) {
  fc::Clock c;
  c.anchor = {0, 0};
  c.scale = 1.0;
  for (std::size_t j = 0; j < mag_angle.size(); ++j) {
    fc::ClockArrow a;
    a.feature = "f" + std::to_string(j);
    a.feature_index = j;
    a.magnitude = mag_angle[j].first;
    a.angle_deg = mag_angle[j].second;
    a.significant = true;
    c.arrows.push_back(a);
  }
  c.features = c.arrows;
  return c;
}

fc::Dataset square_dataset() {
  Matrix y(5, 2);
  y << -1, -1, 1, -1, 1, 1, -1, 1, 0, 0;
  return testutil::make_dataset(testutil::gaussian(1, 5, 2), y);
}

}  // namespace

TEST(RenderScatter, SingleColorWithoutGrouping) {
  Matrix y(3, 2);
  y << 0, 0, 1, 2, 3, 1;
  const auto scene = rd::render_scatter(testutil::make_dataset(testutil::gaussian(2, 3, 2), y),
                                        nullptr);
  const auto pts = shapes<rd::CircleShape>(scene.scatter, "point");
  ASSERT_EQ(pts.size(), 3u);
  std::set<std::string> colors;
  for (const auto& p : pts) colors.insert(p.style.fill);
  EXPECT_EQ(colors, std::set<std::string>{std::string(rd::kSingleColor)});
  EXPECT_TRUE(scene.group_legend.empty());
  // Markers sit where the transform puts the data points.
  const auto q = scene.transform.to_data(pts[1].center);
  EXPECT_NEAR(q.x, 1.0, 1e-9);
  EXPECT_NEAR(q.y, 2.0, 1e-9);
}

TEST(RenderScatter, NoiseIsGray) {
  const auto ds = square_dataset();
  const auto g = fc::from_labels(std::vector<std::string>{"a", "a", "noise", "b", "b"}, ds.y);
  const auto scene = rd::render_scatter(ds, &g);
  const auto noise = shapes<rd::CircleShape>(scene.scatter, "point noise");
  ASSERT_EQ(noise.size(), 1u);
  EXPECT_EQ(noise[0].style.fill, std::string(rd::kNoiseColor));
  const auto pts = shapes<rd::CircleShape>(scene.scatter, "point");
  ASSERT_EQ(pts.size(), 4u);
  EXPECT_EQ(pts[0].style.fill, rd::group_color(0));
  EXPECT_EQ(pts[3].style.fill, rd::group_color(1));
  EXPECT_NE(rd::group_color(0), rd::group_color(1));
  EXPECT_EQ(rd::group_color(10), rd::group_color(0));
}

TEST(RenderScatter, TransformIsInvertibleAndInsideCanvas) {
  const auto ds = testutil::make_dataset(testutil::gaussian(3, 40, 2),
                                         testutil::gaussian(4, 40, 2, 50.0));
  rd::RenderOptions opts;
  opts.width = 640;
  opts.height = 480;
  const auto scene = rd::render_scatter(ds, nullptr, opts);
  EXPECT_EQ(scene.width, 640);
  EXPECT_GT(scene.transform.scale, 0.0);
  for (const auto& p : shapes<rd::CircleShape>(scene.scatter, "point")) {
    EXPECT_GE(p.center.x, 0.0);
    EXPECT_LE(p.center.x, 640.0);
    EXPECT_GE(p.center.y, 0.0);
    EXPECT_LE(p.center.y, 480.0);
  }
  const fc::Point2 d{3.25, -7.5};
  const auto back = scene.transform.to_data(scene.transform.to_px(d));
  EXPECT_NEAR(back.x, d.x, 1e-12);
  EXPECT_NEAR(back.y, d.y, 1e-12);
}

TEST(RenderScatter, ByteIdenticalSvg) {
  const auto ds = testutil::make_dataset(testutil::gaussian(5, 30, 3), testutil::gaussian(6, 30, 2));
  const auto clock = fc::build_global_clock(ds);
  const auto one = rd::to_svg(rd::render_clock(rd::render_scatter(ds, nullptr), clock));
  const auto two = rd::to_svg(rd::render_clock(rd::render_scatter(ds, nullptr), clock));
  EXPECT_EQ(one, two);
  EXPECT_TRUE(one.starts_with("<?xml"));
  EXPECT_TRUE(balanced_xml(one));
  // Coordinates carry at most two decimals.
  const std::regex long_decimal(R"(\d\.\d{3,})");
  EXPECT_FALSE(std::regex_search(one, long_decimal));
}

TEST(RenderClock, SingleArrowSpansRadius) {
  const auto scene = rd::render_clock(rd::render_scatter(square_dataset(), nullptr),
                                      hand_clock({{1.0, 0.0}}));
  const auto rim = shapes<rd::CircleShape>(scene.glyphs, "clock");
  const auto arrows = shapes<rd::LineShape>(scene.glyphs, "arrow");
  ASSERT_EQ(rim.size(), 1u);
  ASSERT_EQ(arrows.size(), 1u);
  EXPECT_NEAR(rim[0].radius, scene.transform.scale, 1e-9);
  EXPECT_NEAR(length(arrows[0]), rim[0].radius, 1e-9);
  EXPECT_NEAR(arrows[0].to.y, arrows[0].from.y, 1e-9);
  EXPECT_GT(arrows[0].to.x, arrows[0].from.x);
  EXPECT_EQ(shapes<rd::PathShape>(scene.glyphs, "arrow-head").size(), 1u);
  ASSERT_EQ(scene.feature_legend.size(), 1u);
  EXPECT_EQ(scene.feature_legend[0].label, "f0");
  EXPECT_EQ(scene.feature_legend[0].color, rd::feature_color(0));
}

TEST(RenderClock, ArrowLengthsFollowMagnitudes) {
  rd::RenderOptions opts;
  opts.clock_scale = 1.7;
  const auto scene = rd::render_clock(rd::render_scatter(square_dataset(), nullptr, opts),
                                      hand_clock({{2.0, 10.0}, {2.0, 200.0}, {0.5, 95.0}}), opts);
  const auto arrows = shapes<rd::LineShape>(scene.glyphs, "arrow");
  ASSERT_EQ(arrows.size(), 3u);
  const double r = shapes<rd::CircleShape>(scene.glyphs, "clock")[0].radius;
  EXPECT_NEAR(r, 1.7 * scene.transform.scale, 1e-9);
  EXPECT_NEAR(length(arrows[0]), length(arrows[1]), 1e-9);
  EXPECT_NEAR(length(arrows[0]), r, 1e-9);
  EXPECT_NEAR(length(arrows[2]) / length(arrows[0]), 0.25, 0.01 * 0.25);
  // 95 degrees points up on screen (y flipped) and slightly left.
  EXPECT_LT(arrows[2].to.y, arrows[2].from.y);
  EXPECT_LT(arrows[2].to.x, arrows[2].from.x);
}

TEST(RenderClock, AnnotationsMatchMagnitudes) {
  const auto scene = rd::render_clock(rd::render_scatter(square_dataset(), nullptr),
                                      hand_clock({{1.234, 0.0}, {0.005, 3.0}, {-0.0, 50.0}}));
  const auto notes = shapes<rd::TextShape>(scene.annotations, "annotation");
  ASSERT_EQ(notes.size(), 3u);
  EXPECT_EQ(notes[0].text, "1.23");
  EXPECT_EQ(notes[1].text, "0.01");
  EXPECT_EQ(notes[2].text, "0.00");
  // Labels 0 and 3 degrees collide and get nudged apart.
  EXPECT_GT(std::hypot(notes[0].at.x - notes[1].at.x, notes[0].at.y - notes[1].at.y), 10.0);
}

TEST(RenderClock, EmptyClockShowsCaption) {
  const auto scene = rd::render_clock(rd::render_scatter(square_dataset(), nullptr), hand_clock({}));
  EXPECT_EQ(shapes<rd::CircleShape>(scene.glyphs, "clock").size(), 1u);
  EXPECT_TRUE(shapes<rd::LineShape>(scene.glyphs, "arrow").empty());
  const auto cap = shapes<rd::TextShape>(scene.annotations, "caption");
  ASSERT_EQ(cap.size(), 1u);
  EXPECT_EQ(cap[0].text, "no significant features");
  EXPECT_NE(rd::to_svg(scene).find("no significant features"), std::string::npos);
}

TEST(RenderClock, PaletteCyclesWithDashes) {
  EXPECT_EQ(rd::feature_color(3), rd::feature_color(13));
  EXPECT_EQ(rd::feature_dash(3), "");
  EXPECT_NE(rd::feature_dash(13), "");
  EXPECT_NE(rd::feature_dash(13), rd::feature_dash(23));
}

TEST(RenderClock, LabelPlacementIsDeterministic) {
  const auto placed = rd::place_labels({10.0, 12.0, 14.0, 200.0, 355.0, 5.0});
  ASSERT_EQ(placed.size(), 6u);
  for (std::size_t i = 0; i < placed.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double d = std::fmod(std::fabs(placed[i] - placed[j]), 360.0);
      EXPECT_GE(std::min(d, 360.0 - d), rd::kLabelNudgeDeg - 1e-9);
    }
  }
  EXPECT_EQ(placed[0], 10.0);
  EXPECT_EQ(placed, rd::place_labels({10.0, 12.0, 14.0, 200.0, 355.0, 5.0}));
}

TEST(RenderClock, XmlEscaping) {
  EXPECT_EQ(rd::xml_escape("a<b & \"c\" > 'd'"), "a&lt;b &amp; &quot;c&quot; &gt; &apos;d&apos;");
  auto ds = square_dataset();
  ds.feature_names = {"<x>", "y&z"};
  auto clock = fc::build_global_clock(ds, {});
  clock.arrows = hand_clock({{1.0, 0.0}, {0.5, 90.0}}).arrows;
  clock.arrows[0].feature = "<x>";
  clock.arrows[1].feature = "y&z";
  rd::RenderOptions opts;
  opts.title = "A & B";
  const auto svg = rd::to_svg(rd::render_clock(rd::render_scatter(ds, nullptr, opts), clock, opts));
  EXPECT_NE(svg.find("&lt;x&gt;"), std::string::npos);
  EXPECT_NE(svg.find("y&amp;z"), std::string::npos);
  EXPECT_NE(svg.find("A &amp; B"), std::string::npos);
  EXPECT_TRUE(balanced_xml(svg));
}

TEST(RenderIntergroup, SegmentAndArrowTowardPositiveGroup) {
  fc::IntergroupClock c;
  c.center_a = {-1, 0};
  c.center_b = {1, 0};
  c.anchor = {0, 0};
  c.scale = 1.0;
  c.axis_angle_deg = 0.0;
  fc::ClockArrow a;
  a.feature = "f0";
  a.magnitude = 3.0;
  a.angle_deg = 0.0;
  a.significant = true;
  c.arrows = {a};
  const auto scene = rd::render_intergroup(rd::render_scatter(square_dataset(), nullptr), {c});
  const auto seg = shapes<rd::LineShape>(scene.glyphs, "segment");
  const auto arrows = shapes<rd::LineShape>(scene.glyphs, "arrow");
  ASSERT_EQ(seg.size(), 1u);
  ASSERT_EQ(arrows.size(), 1u);
  const auto b_px = scene.transform.to_px(c.center_b);
  EXPECT_NEAR(arrows[0].to.x, b_px.x, 1e-9);
  EXPECT_NEAR(arrows[0].to.y, b_px.y, 1e-9);
  EXPECT_EQ(shapes<rd::CircleShape>(scene.glyphs, "center").size(), 2u);

  c.arrows.clear();
  auto two = c;
  two.center_a = {1, 0};
  two.center_b = {1, 1};
  const auto empty = rd::render_intergroup(rd::render_scatter(square_dataset(), nullptr), {c, two});
  EXPECT_EQ(shapes<rd::LineShape>(empty.glyphs, "segment").size(), 2u);
  EXPECT_TRUE(shapes<rd::LineShape>(empty.glyphs, "arrow").empty());
}

TEST(RenderCircles, TraceApproximatesCircle) {
  fc::Vector b0(1), b90(1);
  b0 << 1.0;
  b90 << 0.0;
  const auto circles = fc::circle_sweep(b0, b90, 36);
  const auto pts = rd::circle_trace(circles[0]);
  ASSERT_EQ(pts.size(), 37u);
  EXPECT_EQ(pts.front(), pts.back());
  for (const auto& p : pts) EXPECT_LT(std::fabs(std::hypot(p.x - 0.5, p.y) - 0.5), 1e-8);

  auto clock = hand_clock({{1.0, 0.0}});
  clock.circles = circles;
  const auto scene = rd::render_circles(rd::render_scatter(square_dataset(), nullptr), clock);
  const auto traces = shapes<rd::PathShape>(scene.glyphs, "circle-trace");
  ASSERT_EQ(traces.size(), 1u);
  EXPECT_EQ(traces[0].points.size(), 37u);
  EXPECT_TRUE(balanced_xml(rd::to_svg(scene)));
}

TEST(RenderCircles, TwoProjectionsAndEmpty) {
  fc::Vector b0(1), b90(1);
  b0 << 0.4;
  b90 << -0.3;
  auto clock = hand_clock({{0.5, 323.13}});
  clock.circles = fc::circle_sweep(b0, b90, 2);
  const auto scene = rd::render_circles(rd::render_scatter(square_dataset(), nullptr), clock);
  const auto traces = shapes<rd::PathShape>(scene.glyphs, "circle-trace");
  ASSERT_EQ(traces.size(), 1u);
  EXPECT_EQ(traces[0].points.size(), 2u);
  const auto svg = rd::to_svg(scene);
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
  EXPECT_TRUE(balanced_xml(svg));

  auto none = hand_clock({});
  none.circles = std::vector<fc::FeatureCircle>{};
  const auto blank = rd::render_circles(rd::render_scatter(square_dataset(), nullptr), none);
  EXPECT_TRUE(shapes<rd::PathShape>(blank.glyphs, "circle-trace").empty());
}
