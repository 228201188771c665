// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "featureclock/cli.hpp"
#include "featureclock/featureclock.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace fc = featureclock;
namespace fs = std::filesystem;
using fc::Index;
using fc::Matrix;
using fc::Vector;
using oracle::Real;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

double line_gap_deg(double a, double b) {
  const double d = std::fmod(std::fabs(a - b), 180.0);
  return std::min(d, 180.0 - d);
}

double angle_gap_deg(double a, double b) {
  const double d = std::fmod(std::fabs(a - b), 360.0);
  return std::min(d, 360.0 - d);
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct SweepFixture {
  Matrix x;
  Matrix y;
};

SweepFixture sweep_fixture(std::uint64_t seed) {
  const auto p = oracle::random_problem(seed, 60, 5);
  SweepFixture f{testutil::to_matrix(p.x), Matrix(60, 2)};
  f.y.col(0) = testutil::to_vector(p.y0);
  f.y.col(1) = testutil::to_vector(p.y90);
  return f;
}

constexpr std::size_t kSweepProjections = 1800;  // 0.1 degree

Outcome closed_form_maximum() {
  double worst_angle = 0, worst_rel = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto f = sweep_fixture(seed);
    const auto fits = fc::fit_axis_regressions(f.x, f.y);
    const auto sweep = fc::circle_sweep(f.x, f.y, kSweepProjections, fc::SweepMethod::refit);
    for (std::size_t j = 0; j < sweep.size(); ++j) {
      const auto& s = sweep[j].samples;
      const auto best = std::max_element(s.begin(), s.end(), [](const auto& a, const auto& b) {
        return std::fabs(a.coefficient) < std::fabs(b.coefficient);
      });
      const auto jj = static_cast<Index>(j);
      const auto c = fc::max_contribution(fits.at_0.coefficients(jj), fits.at_90.coefficients(jj));
      worst_angle = std::max(worst_angle, line_gap_deg(best->angle_deg, c.angle_deg));
      worst_rel = std::max(worst_rel, std::fabs(std::fabs(best->coefficient) - c.magnitude) / c.magnitude);
    }
  }
  return {worst_angle <= 0.2 && worst_rel < 1e-6,
          "max angle gap " + sci(worst_angle) + " deg, max magnitude rel err " + sci(worst_rel)};
}

Outcome circle_theorem() {
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto f = sweep_fixture(seed);
    const auto fits = fc::fit_axis_regressions(f.x, f.y);
    const auto sweep = fc::circle_sweep(f.x, f.y, kSweepProjections, fc::SweepMethod::refit);
    for (std::size_t j = 0; j < sweep.size(); ++j) {
      const auto jj = static_cast<Index>(j);
      const double b0 = fits.at_0.coefficients(jj), b90 = fits.at_90.coefficients(jj);
      const double r = std::hypot(b0, b90) / 2;
      for (const auto& s : sweep[j].samples) {
        const auto [c, sn] = fc::cos_sin_deg(s.angle_deg);
        const double dist = std::hypot(s.coefficient * c - b0 / 2, s.coefficient * sn - b90 / 2);
        worst = std::max(worst, std::fabs(dist - r));
      }
    }
  }
  return {worst <= 1e-8, "max distance from circle " + sci(worst)};
}

Outcome pca_equivalence() {
  auto ds = fc::cli::iris_dataset();
  const Matrix xs = fc::numstats::standardize_columns(ds.x).values;
  const auto pca = fc::numstats::pca_2d(xs);
  ds.y = pca.scores(xs);
  const auto clock = fc::build_global_clock(ds);
  double max_load = 0, max_mag = 0;
  for (Index j = 0; j < 4; ++j) {
    max_load = std::max(max_load, std::hypot(pca.components[0](j), pca.components[1](j)));
    max_mag = std::max(max_mag, clock.features[static_cast<std::size_t>(j)].magnitude);
  }
  double worst_angle = 0, worst_ratio = 0;
  for (Index j = 0; j < 4; ++j) {
    const double lx = pca.components[0](j), ly = pca.components[1](j);
    const auto& a = clock.features[static_cast<std::size_t>(j)];
    worst_angle = std::max(worst_angle, angle_gap_deg(a.angle_deg, fc::direction_deg(lx, ly)));
    worst_ratio = std::max(worst_ratio,
                           std::fabs(a.magnitude / max_mag - std::hypot(lx, ly) / max_load));
  }
  return {worst_angle <= 0.5 && worst_ratio <= 1e-6,
          "max angle gap " + sci(worst_angle) + " deg, max ratio gap " + sci(worst_ratio)};
}

Outcome ols_oracle() {
  double worst_beta = 0, worst_se = 0, worst_p = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const std::size_t n = 25 + 3 * (seed % 20);
    const std::size_t d = 2 + seed % 6;
    const auto p = oracle::random_problem(1000 + seed, n, d);
    for (const auto* target : {&p.y0, &p.y90}) {
      const auto fit = fc::numstats::ols_fit(testutil::to_matrix(p.x), testutil::to_vector(*target));
      const oracle::NormalEquations ne(p.x);
      const auto beta = ne.coefficients(*target);
      const auto inv = ne.inverse_diagonal();
      Real rss = 0;
      for (std::size_t i = 0; i < n; ++i) {
        Real r = (*target)[i];
        for (std::size_t j = 0; j < d; ++j) r -= beta[j] * static_cast<Real>(p.x[i][j]);
        rss += r * r;
      }
      const Real s2 = rss / static_cast<Real>(n - d - 1);
      const boost::math::students_t dist(static_cast<double>(n - d - 1));
      for (std::size_t j = 0; j < d; ++j) {
        const auto jj = static_cast<Index>(j);
        const Real se = std::sqrt(s2 * inv[j]);
        const double t = static_cast<double>(beta[j] / se);
        const double pv = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
        worst_beta = std::max(worst_beta, std::fabs(fit.coefficients(jj) - static_cast<double>(beta[j])));
        worst_se = std::max(worst_se, std::fabs(fit.std_errors(jj) - static_cast<double>(se)));
        worst_p = std::max(worst_p, std::fabs(fit.p_values(jj) - pv));
      }
    }
  }
  return {worst_beta <= 1e-8 && worst_se <= 1e-8 && worst_p <= 1e-9,
          "max gaps beta " + sci(worst_beta) + ", se " + sci(worst_se) + ", p " + sci(worst_p)};
}

Outcome student_t_tail() {
  double worst = 0;
  for (double t : {0.5, 1.0, 2.0, 3.0, 5.0}) {
    for (int dof : {1, 2, 5, 10, 30, 120}) {
      worst = std::max(worst, std::fabs(fc::numstats::student_t_two_sided_p(t, dof) -
                                        oracle::simpson_two_sided_p(t, dof)));
    }
  }
  return {worst <= 1e-8, "max gap " + sci(worst)};
}

Outcome mst_exhaustive() {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-10, 10);
  double worst = 0;
  bool trees = true;
  int fixtures = 0;
  for (int trial = 0; trial < 50; ++trial) {
    for (std::size_t n : {4u, 5u}) {
      std::vector<std::pair<double, double>> c(n);
      Matrix y(static_cast<Index>(n), 2);
      std::vector<std::string> tokens;
      for (std::size_t i = 0; i < n; ++i) {
        c[i] = {u(rng), u(rng)};
        y.row(static_cast<Index>(i)) << c[i].first, c[i].second;
        tokens.push_back("c" + std::to_string(i));
      }
      const auto edges = fc::mst_over_centers(fc::from_labels(tokens, y));
      fc::DisjointSet joined(n);
      double weight = 0;
      trees = trees && edges.size() + 1 == n;
      for (const auto& e : edges) {
        trees = trees && joined.unite(static_cast<std::size_t>(e.a), static_cast<std::size_t>(e.b));
        weight += e.length;
      }
      worst = std::max(worst, std::fabs(weight - oracle::brute_force_mst_weight(c)));
      ++fixtures;
    }
  }
  return {trees && worst <= 1e-12,
          std::to_string(fixtures) + " fixtures, max weight gap " + sci(worst)};
}

struct Labeled {
  Matrix x;
  std::vector<int> y;
};

Labeled logistic_sample(std::uint64_t seed, Index n, Index d) {
  Labeled s;
  s.x = fc::numstats::standardize_columns(testutil::gaussian(seed, n, d)).values;
  std::mt19937_64 rng(seed + 1000);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Index i = 0; i < n; ++i) {
    double eta = 0.3;
    for (Index j = 0; j < d; ++j) eta += (j % 2 ? -0.8 : 0.6) * s.x(i, j);
    s.y.push_back(u(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1 : 0);
  }
  return s;
}

Real penalized_gradient_norm(const Labeled& s, const fc::LogisticFit& f, double lambda) {
  const Index d = s.x.cols();
  std::vector<Real> g(static_cast<std::size_t>(d + 1), 0);
  for (Index i = 0; i < s.x.rows(); ++i) {
    Real eta = f.intercept;
    for (Index j = 0; j < d; ++j) eta += static_cast<Real>(f.coefficients(j)) * s.x(i, j);
    const Real r = s.y[static_cast<std::size_t>(i)] - 1 / (1 + std::exp(-eta));
    g[0] += r;
    for (Index j = 0; j < d; ++j) g[static_cast<std::size_t>(j + 1)] += r * s.x(i, j);
  }
  Real norm = 0;
  for (Index j = 0; j <= d; ++j) {
    Real v = g[static_cast<std::size_t>(j)];
    if (j > 0) v -= lambda * f.coefficients(j - 1);
    norm += v * v;
  }
  return std::sqrt(norm);
}

fc::Dataset shifted_groups(std::uint64_t seed, Index per, Index d, Index f, double shift) {
  Matrix x = testutil::gaussian(seed, 2 * per, d);
  for (Index i = per; i < 2 * per; ++i) x(i, f) += shift;
  Matrix y = testutil::gaussian(seed + 7, 2 * per, 2, 0.3);
  for (Index i = per; i < 2 * per; ++i) y(i, 0) += 4.0;
  return testutil::make_dataset(x, y);
}

std::vector<std::string> halves(Index per, const std::string& a, const std::string& b) {
  std::vector<std::string> t(static_cast<std::size_t>(per), a);
  t.resize(static_cast<std::size_t>(2 * per), b);
  return t;
}

fc::IntergroupClock first_edge(const fc::Dataset& ds, const std::vector<std::string>& tokens) {
  const auto g = fc::from_labels(tokens, ds.y);
  return fc::build_intergroup_clocks(ds, g, fc::mst_over_centers(g), {}).clocks.at(0);
}

Outcome logistic_fit() {
  Real worst_grad = 0;
  bool fits_ok = true;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto s = logistic_sample(seed, 100 + 20 * static_cast<Index>(seed), 3);
    const auto fit = fc::logistic_fit(s.x, s.y);
    fits_ok = fits_ok && fit.converged && !fit.separated;
    worst_grad = std::max(worst_grad, penalized_gradient_norm(s, fit, 1e-6));
  }

  const auto ds = shifted_groups(8, 150, 3, 1, 1.0);
  const auto ab = first_edge(ds, halves(150, "a", "b"));
  auto rev = ds;
  rev.x = ds.x.colwise().reverse();
  rev.y = ds.y.colwise().reverse();
  auto tokens = halves(150, "a", "b");
  std::reverse(tokens.begin(), tokens.end());
  const auto ba = first_edge(rev, tokens);
  double worst_swap = 0;
  for (std::size_t j = 0; j < 3; ++j) {
    worst_swap = std::max(worst_swap, std::fabs(ba.coefficients[j] + ab.coefficients[j]));
    worst_swap = std::max(worst_swap, std::fabs(ba.features[j].p0 - ab.features[j].p0));
    worst_swap = std::max(worst_swap,
                          angle_gap_deg(ba.features[j].angle_deg, ab.features[j].angle_deg));
  }

  // Five standard deviations of shift with groups large enough to overlap.
  const auto shifted = first_edge(shifted_groups(1, 1000, 4, 2, 5.0), halves(1000, "low", "high"));
  const bool unique_top = !shifted.separated && shifted.arrows.size() == 1 &&
                          shifted.arrows[0].feature == "f2";
  return {fits_ok && worst_grad < 1e-8 && worst_swap <= 1e-9 && unique_top,
          "max gradient norm " + sci(static_cast<double>(worst_grad)) + ", max swap gap " +
              sci(worst_swap) + ", shifted feature unique top: " + (unique_top ? "yes" : "no")};
}

Matrix rotate(const Matrix& y, double deg) {
  const double r = deg * std::numbers::pi / 180.0;
  Matrix out(y.rows(), 2);
  out.col(0) = std::cos(r) * y.col(0) - std::sin(r) * y.col(1);
  out.col(1) = std::sin(r) * y.col(0) + std::cos(r) * y.col(1);
  return out;
}

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("featureclock_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Outcome equivariance() {
  const auto f = sweep_fixture(41);
  const auto ds = testutil::make_dataset(f.x, f.y);
  const auto base = fc::build_global_clock(ds);
  double worst_rot = 0, worst_scale = 0;
  for (double phi : {30.0, 90.0, 200.0, 333.3}) {
    auto rotated = ds;
    rotated.y = rotate(ds.y, phi);
    const auto clock = fc::build_global_clock(rotated);
    for (std::size_t j = 0; j < base.features.size(); ++j) {
      worst_rot = std::max(worst_rot, std::fabs(clock.features[j].magnitude - base.features[j].magnitude));
      worst_rot = std::max(worst_rot, angle_gap_deg(clock.features[j].angle_deg,
                                                    base.features[j].angle_deg + phi));
    }
  }
  for (double c : {1e-3, 0.5, 7.0, 1e4}) {
    auto scaled = ds;
    scaled.x.col(2) *= c;
    const auto clock = fc::build_global_clock(scaled);
    for (std::size_t j = 0; j < base.features.size(); ++j) {
      worst_scale = std::max(worst_scale, std::fabs(clock.features[j].beta0 - base.features[j].beta0));
      worst_scale = std::max(worst_scale, std::fabs(clock.features[j].beta90 - base.features[j].beta90));
    }
  }

  const auto a = fresh_dir("demo_a"), b = fresh_dir("demo_b");
  std::ostringstream sink;
  bool identical = fc::cli::run_demo(a.string(), sink) == 0 && fc::cli::run_demo(b.string(), sink) == 0;
  int files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename();
    identical = identical && testutil::read_file(entry.path()) == testutil::read_file(b / name);
    ++files;
  }
  identical = identical && files == 6;
  return {worst_rot <= 1e-9 && worst_scale <= 1e-9 && identical,
          "rotation gap " + sci(worst_rot) + ", scaling gap " + sci(worst_scale) +
              ", demo reruns identical: " + (identical ? "yes" : "no")};
}

Outcome defaults_echo() {
  const fs::path data = FEATURECLOCK_DATA_DIR;
  const auto out = fresh_dir("defaults");
  const std::vector<std::string> args{"featureclock", "global",
                                      "--x", (data / "iris_X.csv").string(),
                                      "--y", (data / "iris_pca.csv").string(),
                                      "--out-dir", out.string()};
  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  std::ostringstream sink;
  if (fc::cli::run_cli(static_cast<int>(argv.size()), argv.data(), sink) != 0) {
    return {false, "run failed: " + sink.str()};
  }
  const auto c = nlohmann::json::parse(testutil::read_file(out / "clock.json"))["config"];
  const bool ok = c["alpha"] == 0.05 && c["theta_step_deg"] == 5.0 && c["standardize_x"] == true &&
                  c["center_y"] == true;
  return {ok, "alpha " + c["alpha"].dump() + ", theta step " + c["theta_step_deg"].dump() +
                  ", standardize_x " + c["standardize_x"].dump() + ", center_y " +
                  c["center_y"].dump()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"closed-form maximum matches refit sweep", closed_form_maximum},
      {"sweep samples lie on the diameter circle", circle_theorem},
      {"Iris clock matches PCA loadings", pca_equivalence},
      {"OLS matches extended-precision oracle", ols_oracle},
      {"Student-t tail matches Simpson quadrature", student_t_tail},
      {"MST matches exhaustive search", mst_exhaustive},
      {"logistic fit gradient, antisymmetry, shifted feature", logistic_fit},
      {"rotation, scaling, demo determinism", equivariance},
      {"default config echo", defaults_echo},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %zu: %s (%s)\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), o.detail.c_str());
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
