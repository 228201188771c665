#pragma once

// Inter-group clocks: a binary logistic regression per MST edge, with the
// coefficients laid out along the segment joining the two group centers.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "featureclock/clockcore.hpp"
#include "featureclock/dataset.hpp"
#include "featureclock/grouping.hpp"
#include "featureclock/numstats.hpp"

namespace featureclock {

struct LogisticOptions {
  double penalty = 1e-6;  // L2 weight on coefficients; the intercept is free
  int max_iterations = 100;
  double tolerance = 1e-10;  // on max |step|
};

struct LogisticFit {
  Vector coefficients;
  double intercept = 0.0;
  Vector std_errors;
  Vector wald_z;
  Vector p_values;
  bool converged = false;
  bool separated = false;  // fitted scores split the classes perfectly
  int iterations = 0;
};

struct IntergroupOptions {
  double alpha = 0.05;
  std::optional<std::size_t> top_k;
  bool standardize_x = true;
  LogisticOptions logistic;
};

struct IntergroupClock {
  int group_a = 0;
  int group_b = 0;
  std::string name_a;
  std::string name_b;
  Point2 center_a;
  Point2 center_b;
  Point2 anchor;  // midpoint of the center segment
  double axis_angle_deg = 0.0;  // direction a -> b
  double scale = 1.0;  // half the center distance
  std::vector<ClockArrow> arrows;    // significant, sorted by |coefficient|
  std::vector<ClockArrow> features;  // every feature, input order
  std::vector<double> coefficients;  // signed, per feature; positive favors b
  bool converged = true;
  bool separated = false;
  int iterations = 0;
  std::size_t members = 0;
};

struct IntergroupClocks {
  std::vector<IntergroupClock> clocks;
  std::vector<std::string> warnings;
};

namespace logistic_detail {

inline double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// log(1 + exp(eta)) without overflow.
inline double softplus(double eta) {
  return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

inline double penalized_log_likelihood(const Matrix& z, const Vector& y,
                                       const Vector& theta, double penalty) {
  const Vector eta = z * theta;
  double ll = 0.0;
  for (Index i = 0; i < eta.size(); ++i) ll += y(i) * eta(i) - softplus(eta(i));
  return ll - 0.5 * penalty * theta.tail(theta.size() - 1).squaredNorm();
}

}  // namespace logistic_detail

// Penalized IRLS (Newton) for P(label = 1 | x). Std errors come from the
// inverse penalized Fisher information; z tests use the normal tail.
inline LogisticFit logistic_fit(const Matrix& x, std::span<const int> labels,
                                const LogisticOptions& options = {}) {
  using namespace logistic_detail;
  const Index n = x.rows();
  const Index d = x.cols();
  if (static_cast<std::size_t>(n) != labels.size()) {
    throw ComputationError("logistic_fit: label count does not match rows");
  }
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  const auto negatives = std::count(labels.begin(), labels.end(), 0);
  if (positives + negatives != n) {
    throw ComputationError("logistic_fit: labels must be 0 or 1");
  }
  if (positives == 0 || negatives == 0) {
    throw ComputationError("logistic_fit: both classes must be present");
  }
  if (n < d + 2) throw ComputationError("logistic_fit: insufficient observations");

  Matrix z(n, d + 1);
  z.col(0).setOnes();
  z.rightCols(d) = x;
  Vector y(n);
  for (Index i = 0; i < n; ++i) y(i) = labels[static_cast<std::size_t>(i)];
  Vector pen = Vector::Constant(d + 1, options.penalty);
  pen(0) = 0.0;

  Vector theta = Vector::Zero(d + 1);
  const auto hessian = [&](const Vector& t) {
    const Vector eta = z * t;
    Vector w(n);
    for (Index i = 0; i < n; ++i) {
      const double p = sigmoid(eta(i));
      w(i) = p * (1.0 - p);
    }
    Matrix h = z.transpose() * w.asDiagonal() * z;
    h.diagonal() += pen;
    return h;
  };
  const auto gradient = [&](const Vector& t) {
    const Vector eta = z * t;
    Vector resid(n);
    for (Index i = 0; i < n; ++i) resid(i) = y(i) - sigmoid(eta(i));
    Vector g = z.transpose() * resid;
    g -= pen.cwiseProduct(t);
    return g;
  };

  LogisticFit fit;
  double objective = penalized_log_likelihood(z, y, theta, options.penalty);
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    fit.iterations = iter;
    const Vector g = gradient(theta);
    Vector step = hessian(theta).ldlt().solve(g);
    if (step.cwiseAbs().maxCoeff() < options.tolerance) {
      theta += step;
      fit.converged = true;
      break;
    }
    // Step halving keeps the penalized likelihood from decreasing beyond
    // rounding noise.
    const double slack = 64.0 * std::numeric_limits<double>::epsilon() *
                         (1.0 + std::fabs(objective));
    Vector candidate = theta + step;
    double next = penalized_log_likelihood(z, y, candidate, options.penalty);
    for (int halving = 0; halving < 30 && !(next >= objective - slack); ++halving) {
      step *= 0.5;
      candidate = theta + step;
      next = penalized_log_likelihood(z, y, candidate, options.penalty);
    }
    theta = candidate;
    objective = next;
  }

  {
    const Vector eta = z * theta;
    double max0 = -std::numeric_limits<double>::infinity();
    double min1 = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) {
      if (labels[static_cast<std::size_t>(i)] == 1) {
        min1 = std::min(min1, eta(i));
      } else {
        max0 = std::max(max0, eta(i));
      }
    }
    fit.separated = max0 < min1;
  }

  const Matrix cov = hessian(theta).ldlt().solve(Matrix::Identity(d + 1, d + 1));
  fit.intercept = theta(0);
  fit.coefficients = theta.tail(d);
  fit.std_errors.resize(d);
  fit.wald_z.resize(d);
  fit.p_values.resize(d);
  for (Index j = 0; j < d; ++j) {
    fit.std_errors(j) = std::sqrt(std::max(0.0, cov(j + 1, j + 1)));
    fit.wald_z(j) = fit.std_errors(j) > 0.0 ? fit.coefficients(j) / fit.std_errors(j) : 0.0;
    fit.p_values(j) = numstats::normal_two_sided_p(fit.wald_z(j));
  }
  return fit;
}

// One clock per MST edge. Each edge fits group a (label 0) against group b
// (label 1) on X standardized over the union of the two groups.
inline IntergroupClocks build_intergroup_clocks(const Dataset& ds,
                                                const GroupingResult& grouping,
                                                const MstEdges& mst,
                                                const IntergroupOptions& options = {}) {
  IntergroupClocks out;
  const std::size_t d = ds.features();
  const std::size_t min_size = std::max<std::size_t>(d + 2, 5);
  for (const auto& edge : mst) {
    const Group& ga = grouping.groups.at(static_cast<std::size_t>(edge.a));
    const Group& gb = grouping.groups.at(static_cast<std::size_t>(edge.b));
    if (ga.members.size() < min_size || gb.members.size() < min_size) {
      out.warnings.push_back("edge '" + ga.name + "' - '" + gb.name +
                             "' skipped: each group needs at least " +
                             std::to_string(min_size) + " members");
      continue;
    }

    std::vector<std::size_t> members(ga.members);
    members.insert(members.end(), gb.members.begin(), gb.members.end());
    std::vector<int> labels(ga.members.size(), 0);
    labels.resize(members.size(), 1);

    Matrix xs(static_cast<Index>(members.size()), static_cast<Index>(d));
    for (std::size_t r = 0; r < members.size(); ++r) {
      xs.row(static_cast<Index>(r)) = ds.x.row(static_cast<Index>(members[r]));
    }
    auto st = numstats::standardize_columns(xs);
    Matrix full = options.standardize_x ? std::move(st.values) : numstats::center_columns(xs);
    std::vector<bool> constant(d, false);
    for (auto j : st.zero_variance) {
      constant[j] = true;
      out.warnings.push_back("edge '" + ga.name + "' - '" + gb.name + "': feature '" +
                             ds.feature_names[j] + "' has zero variance and was dropped");
    }
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < d; ++j) {
      if (!constant[j]) active.push_back(j);
    }
    if (active.empty()) {
      out.warnings.push_back("edge '" + ga.name + "' - '" + gb.name +
                             "' skipped: no non-constant features");
      continue;
    }
    Matrix design(full.rows(), static_cast<Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k) {
      design.col(static_cast<Index>(k)) = full.col(static_cast<Index>(active[k]));
    }

    const LogisticFit fit = logistic_fit(design, labels, options.logistic);

    IntergroupClock clock;
    clock.group_a = ga.id;
    clock.group_b = gb.id;
    clock.name_a = ga.name;
    clock.name_b = gb.name;
    clock.center_a = ga.center;
    clock.center_b = gb.center;
    clock.anchor = {0.5 * (ga.center.x + gb.center.x), 0.5 * (ga.center.y + gb.center.y)};
    const double dx = gb.center.x - ga.center.x;
    const double dy = gb.center.y - ga.center.y;
    const double dist = std::hypot(dx, dy);
    clock.axis_angle_deg = direction_deg(dx, dy);
    clock.scale = dist > 0.0 ? 0.5 * dist : 1.0;
    clock.converged = fit.converged;
    clock.separated = fit.separated;
    clock.iterations = fit.iterations;
    clock.members = members.size();
    if (!fit.converged) {
      out.warnings.push_back("edge '" + ga.name + "' - '" + gb.name +
                             "': logistic fit did not converge in " +
                             std::to_string(fit.iterations) +
                             " iterations (groups may be separable)");
    }
    if (fit.separated) {
      out.warnings.push_back("edge '" + ga.name + "' - '" + gb.name +
                             "': groups are linearly separable; Wald p-values are unreliable");
    }

    const auto [ux, uy] = cos_sin_deg(clock.axis_angle_deg);
    clock.coefficients.assign(d, 0.0);
    clock.features.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      clock.features[j].feature = ds.feature_names[j];
      clock.features[j].feature_index = j;
    }
    for (std::size_t k = 0; k < active.size(); ++k) {
      const auto kk = static_cast<Index>(k);
      auto& a = clock.features[active[k]];
      const double c = fit.coefficients(kk);
      clock.coefficients[active[k]] = c;
      a.beta0 = c * ux;
      a.beta90 = c * uy;
      a.magnitude = std::abs(c);
      a.angle_deg = c >= 0.0 ? clock.axis_angle_deg
                             : direction_deg(-ux, -uy);
      a.p0 = fit.p_values(kk);
      a.p90 = fit.p_values(kk);
      a.significant = a.p0 < options.alpha;
    }
    for (const auto& a : clock.features) {
      if (a.significant) clock.arrows.push_back(a);
    }
    rank_arrows(clock.arrows, options.top_k);
    out.clocks.push_back(std::move(clock));
  }
  if (out.clocks.empty()) {
    throw ComputationError("no usable groups: every MST edge was skipped");
  }
  return out;
}

}  // namespace featureclock
