#pragma once

// Point groupings for local and inter-group clocks: external labels,
// k-means, DBSCAN, and the minimum spanning tree over group centers.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "featureclock/numstats.hpp"

namespace featureclock {

inline constexpr int kNoise = -1;

enum class GroupingSource { external, kmeans, dbscan };

inline std::string_view to_string(GroupingSource s) {
  switch (s) {
    case GroupingSource::external: return "external";
    case GroupingSource::kmeans: return "kmeans";
    case GroupingSource::dbscan: return "dbscan";
  }
  return "unknown";
}

struct Group {
  int id = 0;
  std::string name;
  std::vector<std::size_t> members;
  Point2 center;
};

struct GroupingResult {
  std::vector<int> labels;  // per point; kNoise for outliers
  std::vector<Group> groups;  // groups[i].id == i
  GroupingSource source = GroupingSource::external;

  std::size_t noise_count() const {
    return static_cast<std::size_t>(
        std::count(labels.begin(), labels.end(), kNoise));
  }
};

struct MstEdge {
  int a = 0;  // a < b
  int b = 0;
  double length = 0.0;
};

using MstEdges = std::vector<MstEdge>;

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<unsigned> rank_;
};

namespace grouping_detail {

// Builds groups from per-point integer labels, renumbering ids in order of
// first appearance so ids never depend on the producer's internal numbering.
inline GroupingResult assemble(std::vector<int> raw, const Matrix& y,
                               GroupingSource source,
                               const std::vector<std::string>* names = nullptr) {
  GroupingResult out;
  out.source = source;
  out.labels.assign(raw.size(), kNoise);
  std::unordered_map<int, int> remap;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == kNoise) continue;
    auto [it, inserted] = remap.try_emplace(raw[i], static_cast<int>(out.groups.size()));
    if (inserted) {
      Group g;
      g.id = it->second;
      g.name = names ? (*names)[static_cast<std::size_t>(raw[i])]
                     : "cluster_" + std::to_string(g.id);
      out.groups.push_back(std::move(g));
    }
    out.labels[i] = it->second;
    out.groups[static_cast<std::size_t>(it->second)].members.push_back(i);
  }
  for (auto& g : out.groups) {
    double sx = 0.0, sy = 0.0;
    for (auto i : g.members) {
      sx += y(static_cast<Index>(i), 0);
      sy += y(static_cast<Index>(i), 1);
    }
    const auto m = static_cast<double>(g.members.size());
    g.center = {sx / m, sy / m};
  }
  return out;
}

inline double squared_distance(const Matrix& p, Index i, Index j) {
  return (p.row(i) - p.row(j)).squaredNorm();
}

// Uniform double in [0, 1) from 53 random bits; stable across standard libraries.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool is_noise_token(std::string_view token) {
  constexpr std::string_view noise = "noise";
  if (token.size() != noise.size()) return false;
  for (std::size_t i = 0; i < noise.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(token[i])) != noise[i]) return false;
  }
  return true;
}

}  // namespace grouping_detail

// Groups keyed by distinct tokens in first-appearance order; "noise" (any
// case) marks outliers.
inline GroupingResult from_labels(std::span<const std::string> tokens,
                                  const Matrix& y) {
  if (tokens.size() != static_cast<std::size_t>(y.rows())) {
    throw InputError("label count " + std::to_string(tokens.size()) +
                     " does not match " + std::to_string(y.rows()) + " points");
  }
  std::vector<std::string> names;
  std::unordered_map<std::string, int> index;
  std::vector<int> raw(tokens.size(), kNoise);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (grouping_detail::is_noise_token(tokens[i])) continue;
    auto [it, inserted] = index.try_emplace(tokens[i], static_cast<int>(names.size()));
    if (inserted) names.push_back(tokens[i]);
    raw[i] = it->second;
  }
  return grouping_detail::assemble(std::move(raw), y, GroupingSource::external,
                                   &names);
}

inline constexpr int kKmeansMaxIterations = 300;

// Lloyd's algorithm from a seeded k-means++ start. Clusters on `points`;
// centers are reported in the embedding `y`.
inline GroupingResult kmeans(const Matrix& points, const Matrix& y,
                             std::size_t k, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k < 1) throw InputError("kmeans: k must be at least 1");
  if (k > n) {
    throw InputError("kmeans: k = " + std::to_string(k) + " exceeds " +
                     std::to_string(n) + " points");
  }
  if (y.rows() != points.rows()) throw InputError("kmeans: embedding row mismatch");

  std::mt19937_64 rng(seed);
  const Index dims = points.cols();
  Matrix centers(static_cast<Index>(k), dims);

  // k-means++ seeding
  std::vector<double> dist2(n, std::numeric_limits<double>::infinity());
  std::size_t first = std::min(
      n - 1, static_cast<std::size_t>(grouping_detail::unit_uniform(rng) * n));
  centers.row(0) = points.row(static_cast<Index>(first));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = (points.row(static_cast<Index>(i)) -
                        centers.row(static_cast<Index>(c - 1))).squaredNorm();
      dist2[i] = std::min(dist2[i], d);
      total += dist2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = grouping_detail::unit_uniform(rng) * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += dist2[i];
        if (acc > target && dist2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = c;  // all points coincide with chosen centers
    }
    centers.row(static_cast<Index>(c)) = points.row(static_cast<Index>(pick));
  }

  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < kKmeansMaxIterations; ++iter) {
    bool changed = false;
    std::vector<double> best_d(n);
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = (points.row(static_cast<Index>(i)) -
                          centers.row(static_cast<Index>(c))).squaredNorm();
        if (d < bd) {
          bd = d;
          best = static_cast<int>(c);
        }
      }
      best_d[i] = bd;
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed) break;

    std::vector<std::size_t> counts(k, 0);
    centers.setZero();
    for (std::size_t i = 0; i < n; ++i) {
      centers.row(assign[i]) += points.row(static_cast<Index>(i));
      ++counts[static_cast<std::size_t>(assign[i])];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centers.row(static_cast<Index>(c)) /= static_cast<double>(counts[c]);
        continue;
      }
      // Empty cluster: reseed at the point farthest from its current center.
      std::size_t far = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (best_d[i] > best_d[far]) far = i;
      }
      centers.row(static_cast<Index>(c)) = points.row(static_cast<Index>(far));
      best_d[far] = 0.0;
      assign[far] = static_cast<int>(c);
    }
  }
  return grouping_detail::assemble(std::move(assign), y, GroupingSource::kmeans);
}

// Density clustering; points that are neither core nor density-reachable are
// labeled kNoise. Group ids follow the first core point of each cluster.
inline GroupingResult dbscan(const Matrix& points, const Matrix& y, double eps,
                             std::size_t min_pts) {
  if (!(eps > 0.0)) throw InputError("dbscan: eps must be positive");
  if (min_pts < 1) throw InputError("dbscan: min_pts must be at least 1");
  if (y.rows() != points.rows()) throw InputError("dbscan: embedding row mismatch");
  const auto n = static_cast<std::size_t>(points.rows());
  const double eps2 = eps * eps;

  std::vector<std::vector<std::size_t>> neighbors(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (grouping_detail::squared_distance(points, static_cast<Index>(i),
                                            static_cast<Index>(j)) <= eps2) {
        neighbors[i].push_back(j);
      }
    }
  }

  constexpr int unvisited = -2;
  std::vector<int> label(n, unvisited);
  int next_id = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] != unvisited) continue;
    if (neighbors[i].size() < min_pts) {
      label[i] = kNoise;
      continue;
    }
    const int id = next_id++;
    label[i] = id;
    std::vector<std::size_t> frontier(neighbors[i]);
    for (std::size_t f = 0; f < frontier.size(); ++f) {
      const std::size_t q = frontier[f];
      if (label[q] == kNoise) label[q] = id;  // border point
      if (label[q] != unvisited) continue;
      label[q] = id;
      if (neighbors[q].size() >= min_pts) {
        frontier.insert(frontier.end(), neighbors[q].begin(), neighbors[q].end());
      }
    }
  }
  return grouping_detail::assemble(std::move(label), y, GroupingSource::dbscan);
}

// Kruskal over all center pairs; equal lengths resolve by the smaller id pair.
inline MstEdges mst_over_centers(const GroupingResult& grouping) {
  const auto& groups = grouping.groups;
  if (groups.empty()) throw ComputationError("mst_over_centers: no groups");
  std::vector<MstEdge> candidates;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      const double dx = groups[j].center.x - groups[i].center.x;
      const double dy = groups[j].center.y - groups[i].center.y;
      candidates.push_back({groups[i].id, groups[j].id, std::hypot(dx, dy)});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const MstEdge& l, const MstEdge& r) {
              return std::tie(l.length, l.a, l.b) < std::tie(r.length, r.a, r.b);
            });
  DisjointSet forest(groups.size());
  MstEdges tree;
  for (const auto& e : candidates) {
    if (forest.unite(static_cast<std::size_t>(e.a), static_cast<std::size_t>(e.b))) {
      tree.push_back(e);
      if (tree.size() + 1 == groups.size()) break;
    }
  }
  return tree;
}

}  // namespace featureclock
