#pragma once

// Feature Clock engine. Each feature's strongest linear contribution to the
// embedding is recovered from two regressions (targets: the x and y
// coordinates). Because the coefficient at projection angle t is
// b0*cos(t) + b90*sin(t), its maximum over t has magnitude hypot(b0, b90) and
// is attained in the direction of (b0, b90).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "featureclock/dataset.hpp"
#include "featureclock/grouping.hpp"
#include "featureclock/numstats.hpp"

namespace featureclock {

enum class ClockVariant { global, local, intergroup, circles };

inline std::string_view to_string(ClockVariant v) {
  switch (v) {
    case ClockVariant::global: return "global";
    case ClockVariant::local: return "local";
    case ClockVariant::intergroup: return "intergroup";
    case ClockVariant::circles: return "circles";
  }
  return "unknown";
}

// `any_axis`: significant when either axis fit is significant.
// `both_axes`: significant only when both are.
enum class SignificanceRule { any_axis, both_axes };

enum class SweepMethod { analytic, refit };

struct ProjectionFactor {
  double angle_deg = 0.0;
  Vector values;
};

struct ClockArrow {
  std::string feature;
  std::size_t feature_index = 0;
  double beta0 = 0.0;
  double beta90 = 0.0;
  double magnitude = 0.0;
  double angle_deg = 0.0;
  double p0 = 1.0;
  double p90 = 1.0;
  bool significant = false;
};

struct CircleSample {
  double angle_deg = 0.0;
  double coefficient = 0.0;
};

struct FeatureCircle {
  std::string feature;
  std::size_t feature_index = 0;
  std::vector<CircleSample> samples;
};

struct Clock {
  ClockVariant variant = ClockVariant::global;
  std::string group;
  Point2 anchor;
  double scale = 1.0;
  std::vector<ClockArrow> arrows;    // displayed: significant, sorted, top-k
  std::vector<ClockArrow> features;  // every input feature, input order
  std::vector<std::size_t> members;
  std::optional<std::vector<FeatureCircle>> circles;
  std::vector<std::string> warnings;
};

struct ClockOptions {
  double alpha = 0.05;
  std::optional<std::size_t> top_k;
  bool standardize_x = true;
  bool center_y = true;
  bool standardize_betas = false;
  SignificanceRule rule = SignificanceRule::any_axis;
  bool circles = false;
  std::size_t projections = 36;  // m; angular step is 180/m degrees
  SweepMethod sweep = SweepMethod::analytic;
  std::optional<Point2> anchor;
  std::optional<double> scale;
};

struct Contribution {
  double magnitude = 0.0;
  double angle_deg = 0.0;
};

struct AxisFits {
  numstats::RegressionFit at_0;
  numstats::RegressionFit at_90;
};

struct LocalClocks {
  std::vector<Clock> clocks;
  std::vector<std::string> warnings;
};

// cos/sin of an angle in degrees, exact at multiples of 90.
inline std::pair<double, double> cos_sin_deg(double angle_deg) {
  const double wrapped = std::fmod(angle_deg, 360.0);
  const double a = wrapped < 0.0 ? wrapped + 360.0 : wrapped;
  if (a == 0.0) return {1.0, 0.0};
  if (a == 90.0) return {0.0, 1.0};
  if (a == 180.0) return {-1.0, 0.0};
  if (a == 270.0) return {0.0, -1.0};
  const double r = a * std::numbers::pi / 180.0;
  return {std::cos(r), std::sin(r)};
}

// Full-quadrant angle of (x, y) in [0, 360).
inline double direction_deg(double x, double y) {
  if (x == 0.0 && y == 0.0) return 0.0;
  double a = std::atan2(y, x) * 180.0 / std::numbers::pi;
  if (a < 0.0) a += 360.0;
  if (a >= 360.0 || a == 0.0) a = 0.0;
  return a;
}

inline ProjectionFactor project_at_angle(const Matrix& y_centered,
                                         double angle_deg) {
  if (y_centered.cols() != 2) {
    throw ComputationError("project_at_angle: embedding must have 2 columns");
  }
  const auto [c, s] = cos_sin_deg(angle_deg);
  ProjectionFactor out;
  out.angle_deg = angle_deg;
  if (s == 0.0) {
    out.values = c * y_centered.col(0);
  } else if (c == 0.0) {
    out.values = s * y_centered.col(1);
  } else {
    out.values = c * y_centered.col(0) + s * y_centered.col(1);
  }
  return out;
}

inline AxisFits fit_axis_regressions(const numstats::LeastSquares& design,
                                     const Matrix& y_centered) {
  AxisFits fits;
  try {
    fits.at_0 = design.fit(y_centered.col(0));
  } catch (const ComputationError& e) {
    throw ComputationError(std::string("0-degree (x-axis) regression: ") + e.what());
  }
  try {
    fits.at_90 = design.fit(y_centered.col(1));
  } catch (const ComputationError& e) {
    throw ComputationError(std::string("90-degree (y-axis) regression: ") + e.what());
  }
  return fits;
}

inline AxisFits fit_axis_regressions(const Matrix& x_std, const Matrix& y_centered) {
  if (x_std.rows() != y_centered.rows()) {
    throw ComputationError("fit_axis_regressions: row mismatch");
  }
  std::optional<numstats::LeastSquares> design;
  try {
    design.emplace(x_std);
  } catch (const RankDeficientError& e) {
    throw RankDeficientError(std::string("0-degree (x-axis) regression: ") + e.what(),
                             e.columns());
  } catch (const ComputationError& e) {
    throw ComputationError(std::string("0-degree (x-axis) regression: ") + e.what());
  }
  return fit_axis_regressions(*design, y_centered);
}

inline Contribution max_contribution(double beta0, double beta90) {
  return {std::hypot(beta0, beta90), direction_deg(beta0, beta90)};
}

// Angles i * 180 / m for i in [0, m).
inline std::vector<double> sweep_angles(std::size_t m) {
  std::vector<double> angles(m);
  for (std::size_t i = 0; i < m; ++i) {
    angles[i] = 180.0 * static_cast<double>(i) / static_cast<double>(m);
  }
  return angles;
}

// Coefficient of every feature at each sweep angle, derived from the two axis
// coefficients.
inline std::vector<FeatureCircle> circle_sweep(const Vector& beta0,
                                               const Vector& beta90,
                                               std::size_t m) {
  if (m < 2) throw ComputationError("circle_sweep: need at least 2 projections");
  const auto angles = sweep_angles(m);
  std::vector<FeatureCircle> out(static_cast<std::size_t>(beta0.size()));
  for (Index j = 0; j < beta0.size(); ++j) {
    auto& fc = out[static_cast<std::size_t>(j)];
    fc.feature_index = static_cast<std::size_t>(j);
    fc.feature = "f" + std::to_string(j);
    fc.samples.reserve(m);
    for (double a : angles) {
      const auto [c, s] = cos_sin_deg(a);
      fc.samples.push_back({a, beta0(j) * c + beta90(j) * s});
    }
  }
  return out;
}

// Same sweep by refitting the regression at every angle.
inline std::vector<FeatureCircle> circle_sweep_refit(
    const numstats::LeastSquares& design, const Matrix& y_centered,
    std::size_t m) {
  if (m < 2) throw ComputationError("circle_sweep: need at least 2 projections");
  const auto angles = sweep_angles(m);
  std::vector<FeatureCircle> out(static_cast<std::size_t>(design.cols()));
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j].feature_index = j;
    out[j].feature = "f" + std::to_string(j);
    out[j].samples.reserve(m);
  }
  for (double a : angles) {
    const Vector beta = design.solve(project_at_angle(y_centered, a).values);
    for (std::size_t j = 0; j < out.size(); ++j) {
      out[j].samples.push_back({a, beta(static_cast<Index>(j))});
    }
  }
  return out;
}

inline std::vector<FeatureCircle> circle_sweep(const Matrix& x_std,
                                               const Matrix& y_centered,
                                               std::size_t m,
                                               SweepMethod method = SweepMethod::analytic) {
  const numstats::LeastSquares design(x_std);
  if (method == SweepMethod::refit) return circle_sweep_refit(design, y_centered, m);
  const AxisFits fits = fit_axis_regressions(design, y_centered);
  return circle_sweep(fits.at_0.coefficients, fits.at_90.coefficients, m);
}

inline bool is_significant(double p0, double p90, double alpha,
                           SignificanceRule rule) {
  return rule == SignificanceRule::any_axis ? (p0 < alpha || p90 < alpha)
                                            : (p0 < alpha && p90 < alpha);
}

// Stable sort by magnitude (descending), then keep the first k.
inline void rank_arrows(std::vector<ClockArrow>& arrows,
                        std::optional<std::size_t> top_k) {
  std::stable_sort(arrows.begin(), arrows.end(),
                   [](const ClockArrow& l, const ClockArrow& r) {
                     return l.magnitude > r.magnitude;
                   });
  if (top_k && arrows.size() > *top_k) arrows.resize(*top_k);
}

// Centroid and half bounding-box diagonal of a point subset.
inline std::pair<Point2, double> member_extent(const Matrix& y,
                                               std::span<const std::size_t> members) {
  double sx = 0.0, sy = 0.0;
  double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
  double min_y = min_x, max_y = -min_x;
  for (auto i : members) {
    const double px = y(static_cast<Index>(i), 0);
    const double py = y(static_cast<Index>(i), 1);
    sx += px;
    sy += py;
    min_x = std::min(min_x, px);
    max_x = std::max(max_x, px);
    min_y = std::min(min_y, py);
    max_y = std::max(max_y, py);
  }
  const auto m = static_cast<double>(members.size());
  return {{sx / m, sy / m}, 0.5 * std::hypot(max_x - min_x, max_y - min_y)};
}

inline Clock build_clock(const Matrix& x, const Matrix& y,
                         std::span<const std::size_t> members,
                         std::span<const std::string> feature_names,
                         const ClockOptions& options,
                         const std::string& group = "all",
                         ClockVariant variant = ClockVariant::global) {
  if (members.empty()) {
    throw GroupTooSmallError("group too small for clock: '" + group + "' is empty", group);
  }
  if (static_cast<std::size_t>(x.cols()) != feature_names.size()) {
    throw ComputationError("build_clock: feature names do not match X");
  }
  Clock clock;
  clock.variant = options.circles ? ClockVariant::circles : variant;
  clock.group = group;
  clock.members.assign(members.begin(), members.end());

  const Index n = static_cast<Index>(members.size());
  const Index d = x.cols();
  Matrix xs(n, d);
  Matrix ys(n, 2);
  for (Index r = 0; r < n; ++r) {
    xs.row(r) = x.row(static_cast<Index>(members[static_cast<std::size_t>(r)]));
    ys.row(r) = y.row(static_cast<Index>(members[static_cast<std::size_t>(r)]));
  }

  // Normalize X; constant columns are dropped from the model.
  std::vector<std::size_t> active;
  Matrix design_full;
  if (n >= 2) {
    auto st = numstats::standardize_columns(xs);
    design_full = options.standardize_x ? std::move(st.values) : numstats::center_columns(xs);
    std::vector<bool> constant(static_cast<std::size_t>(d), false);
    for (auto j : st.zero_variance) {
      constant[j] = true;
      clock.warnings.push_back("group '" + group + "': feature '" + feature_names[j] +
                               "' has zero variance and was dropped");
    }
    for (std::size_t j = 0; j < static_cast<std::size_t>(d); ++j) {
      if (!constant[j]) active.push_back(j);
    }
  }
  const auto needed = active.size() + 2;
  if (static_cast<std::size_t>(n) < needed || active.empty()) {
    throw GroupTooSmallError("group too small for clock: '" + group + "' has " +
                                 std::to_string(n) + " points, needs at least " +
                                 std::to_string(needed),
                             group);
  }
  Matrix design(n, static_cast<Index>(active.size()));
  for (std::size_t k = 0; k < active.size(); ++k) {
    design.col(static_cast<Index>(k)) = design_full.col(static_cast<Index>(active[k]));
  }
  const Matrix target = options.center_y ? numstats::center_columns(ys) : ys;

  std::optional<numstats::LeastSquares> ls;
  try {
    ls.emplace(design);
  } catch (const RankDeficientError& e) {
    std::string names;
    for (auto c : e.columns()) {
      if (!names.empty()) names += ", ";
      names += feature_names[active[c]];
    }
    throw ComputationError("group '" + group +
                           "': features are linearly dependent: " + names);
  }
  const AxisFits fits = fit_axis_regressions(*ls, target);

  Vector beta0 = fits.at_0.coefficients;
  Vector beta90 = fits.at_90.coefficients;
  double beta_scale = 1.0;
  if (options.standardize_betas) {
    const Index count = 2 * beta0.size();
    if (count >= 2) {
      Vector pooled(count);
      pooled << beta0, beta90;
      const double mean = pooled.mean();
      const double sd =
          std::sqrt((pooled.array() - mean).square().sum() / static_cast<double>(count - 1));
      if (sd > 0.0) {
        beta_scale = 1.0 / sd;
        beta0 *= beta_scale;
        beta90 *= beta_scale;
      } else {
        clock.warnings.push_back("group '" + group +
                                 "': coefficient spread is zero; betas left unscaled");
      }
    }
  }

  clock.features.resize(static_cast<std::size_t>(d));
  for (std::size_t j = 0; j < static_cast<std::size_t>(d); ++j) {
    auto& a = clock.features[j];
    a.feature = feature_names[j];
    a.feature_index = j;
  }
  for (std::size_t k = 0; k < active.size(); ++k) {
    auto& a = clock.features[active[k]];
    const auto kk = static_cast<Index>(k);
    a.beta0 = beta0(kk);
    a.beta90 = beta90(kk);
    const auto c = max_contribution(a.beta0, a.beta90);
    a.magnitude = c.magnitude;
    a.angle_deg = c.angle_deg;
    a.p0 = fits.at_0.p_values(kk);
    a.p90 = fits.at_90.p_values(kk);
    a.significant = is_significant(a.p0, a.p90, options.alpha, options.rule);
  }

  for (const auto& a : clock.features) {
    if (a.significant) clock.arrows.push_back(a);
  }
  rank_arrows(clock.arrows, options.top_k);
  if (clock.arrows.empty()) {
    clock.warnings.push_back("group '" + group + "': no significant features at alpha " +
                             std::to_string(options.alpha));
  }

  const auto [centroid, half_diag] = member_extent(y, members);
  clock.anchor = options.anchor.value_or(centroid);
  clock.scale = options.scale.value_or(half_diag);
  if (!(clock.scale > 0.0)) {
    clock.scale = 1.0;
    clock.warnings.push_back("group '" + group +
                             "': members share one embedding point; clock scale set to 1");
  }

  if (options.circles) {
    std::vector<FeatureCircle> sweep;
    if (options.sweep == SweepMethod::refit) {
      sweep = circle_sweep_refit(*ls, target, options.projections);
      for (auto& fc : sweep) {
        for (auto& s : fc.samples) s.coefficient *= beta_scale;
      }
    } else {
      sweep = circle_sweep(beta0, beta90, options.projections);
    }
    std::vector<FeatureCircle> circles;
    for (std::size_t k = 0; k < active.size(); ++k) {
      sweep[k].feature_index = active[k];
      sweep[k].feature = feature_names[active[k]];
    }
    for (const auto& a : clock.arrows) {
      for (auto& fc : sweep) {
        if (fc.feature_index == a.feature_index) circles.push_back(fc);
      }
    }
    clock.circles = std::move(circles);
  }
  return clock;
}

inline std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

inline Clock build_global_clock(const Dataset& ds, const ClockOptions& options = {}) {
  const auto members = all_indices(ds.rows());
  return build_clock(ds.x, ds.y, members, ds.feature_names, options, "all",
                     ClockVariant::global);
}

// One clock per non-noise group. Groups too small for a regression are
// skipped with a warning.
inline LocalClocks build_local_clocks(const Dataset& ds, const GroupingResult& grouping,
                                      const ClockOptions& options = {}) {
  if (grouping.labels.size() != ds.rows()) {
    throw ComputationError("grouping does not cover every point");
  }
  LocalClocks out;
  for (const auto& g : grouping.groups) {
    try {
      out.clocks.push_back(build_clock(ds.x, ds.y, g.members, ds.feature_names, options,
                                       g.name, ClockVariant::local));
    } catch (const GroupTooSmallError& e) {
      out.warnings.push_back(std::string(e.what()) + "; skipped");
    }
  }
  if (out.clocks.empty()) {
    throw ComputationError("no usable groups: every group is too small for a clock");
  }
  return out;
}

}  // namespace featureclock
