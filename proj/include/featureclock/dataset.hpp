#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "featureclock/numstats.hpp"

namespace featureclock {

struct Provenance {
  std::string x_path;
  std::string y_path;
  std::string labels_path;
  std::size_t rows = 0;
};

// High-dimensional features, their 2D embedding and optional point labels.
struct Dataset {
  std::vector<std::string> feature_names;
  Matrix x;  // n x d, raw
  Matrix y;  // n x 2, raw embedding
  std::optional<std::vector<std::string>> labels;
  Provenance provenance;

  std::size_t rows() const { return static_cast<std::size_t>(x.rows()); }
  std::size_t features() const { return static_cast<std::size_t>(x.cols()); }
};

inline constexpr std::size_t kMinDatasetRows = 5;

// Throws InputError when a structural invariant does not hold.
inline void validate_dataset(const Dataset& ds) {
  if (ds.x.rows() != ds.y.rows()) {
    throw InputError("row-count mismatch: X has " + std::to_string(ds.x.rows()) +
                     " rows, embedding has " + std::to_string(ds.y.rows()));
  }
  if (ds.y.cols() != 2) {
    throw InputError("embedding must have exactly 2 columns");
  }
  if (ds.rows() < kMinDatasetRows) {
    throw InputError("dataset needs at least " + std::to_string(kMinDatasetRows) +
                     " rows, got " + std::to_string(ds.rows()));
  }
  if (ds.feature_names.size() != ds.features() || ds.features() == 0) {
    throw InputError("feature names do not match the X matrix");
  }
  for (std::size_t i = 0; i < ds.feature_names.size(); ++i) {
    if (ds.feature_names[i].empty()) {
      throw InputError("feature " + std::to_string(i + 1) + " has an empty name");
    }
    for (std::size_t k = 0; k < i; ++k) {
      if (ds.feature_names[k] == ds.feature_names[i]) {
        throw InputError("duplicate feature name '" + ds.feature_names[i] + "'");
      }
    }
  }
  if (!ds.x.allFinite() || !ds.y.allFinite()) {
    throw InputError("non-finite values in dataset");
  }
  if (ds.labels && ds.labels->size() != ds.rows()) {
    throw InputError("label count " + std::to_string(ds.labels->size()) +
                     " does not match " + std::to_string(ds.rows()) + " rows");
  }
}

}  // namespace featureclock
