#pragma once

// CSV ingestion into a Dataset, CSV writers, and run configuration.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "featureclock/clockcore.hpp"
#include "featureclock/dataset.hpp"
#include "featureclock/errors.hpp"
#include "featureclock/intergroup.hpp"

namespace featureclock {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

namespace csv_detail {

// Splits one record. Fields may be double-quoted with "" as an escaped quote.
inline std::vector<std::string> split_record(std::string_view line,
                                             const std::string& path,
                                             std::size_t row) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"' && field.empty() && !was_quoted) {
      quoted = true;
      was_quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else {
      field.push_back(ch);
    }
  }
  if (quoted) throw CsvError(path + ": unterminated quoted field", path, row, 0);
  fields.push_back(std::move(field));
  return fields;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace csv_detail

// Comma-separated, first line is the header, blank trailing lines ignored.
inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path);
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::size_t pending_blank = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (csv_detail::trim(line).empty()) {
      if (have_header && pending_blank == 0) pending_blank = line_no;
      continue;
    }
    if (!have_header) {
      table.header = csv_detail::split_record(line, path, 0);
      for (auto& h : table.header) h = std::string(csv_detail::trim(h));
      have_header = true;
      continue;
    }
    if (pending_blank != 0) {
      throw CsvError(path + ":" + std::to_string(pending_blank) +
                         ": blank line inside data",
                     path, table.rows.size() + 1, 0);
    }
    const std::size_t row = table.rows.size() + 1;
    auto fields = csv_detail::split_record(line, path, row);
    if (fields.size() != table.header.size()) {
      throw CsvError(path + ":" + std::to_string(line_no) + ": row " +
                         std::to_string(row) + " has " + std::to_string(fields.size()) +
                         " fields, header has " + std::to_string(table.header.size()),
                     path, row, 0);
    }
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) throw CsvError(path + ": file is empty", path, 0, 0);
  return table;
}

// Locale-independent parse of a finite double; the whole cell must be numeric.
inline double parse_cell(const std::string& cell, const std::string& path,
                         std::size_t row, std::size_t column) {
  const std::string_view s = csv_detail::trim(cell);
  const std::string where = path + ": row " + std::to_string(row) + ", column " +
                            std::to_string(column);
  if (s.empty()) throw CsvError(where + ": missing value", path, row, column);
  double value = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw CsvError(where + ": non-numeric cell '" + std::string(s) + "'", path, row,
                   column);
  }
  if (!std::isfinite(value)) {
    throw CsvError(where + ": non-finite value '" + std::string(s) + "'", path, row,
                   column);
  }
  return value;
}

inline Matrix table_to_matrix(const CsvTable& table, const std::string& path) {
  Matrix m(static_cast<Index>(table.rows.size()), static_cast<Index>(table.header.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      m(static_cast<Index>(r), static_cast<Index>(c)) =
          parse_cell(table.rows[r][c], path, r + 1, c + 1);
    }
  }
  return m;
}

inline std::vector<std::string> read_labels(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.header.size() != 1 || table.header[0] != "label") {
    throw CsvError(path + ": labels file must have a single column named 'label'", path,
                   0, 0);
  }
  std::vector<std::string> labels;
  labels.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    std::string token(csv_detail::trim(table.rows[r][0]));
    if (token.empty()) {
      throw CsvError(path + ": row " + std::to_string(r + 1) + ": empty label", path,
                     r + 1, 1);
    }
    labels.push_back(std::move(token));
  }
  return labels;
}

inline Dataset load_dataset(const std::string& x_path, const std::string& y_path,
                            const std::optional<std::string>& labels_path = std::nullopt) {
  Dataset ds;
  const CsvTable xt = read_csv(x_path);
  ds.feature_names = xt.header;
  for (std::size_t i = 0; i < ds.feature_names.size(); ++i) {
    if (ds.feature_names[i].empty()) {
      throw CsvError(x_path + ": header column " + std::to_string(i + 1) + " is empty",
                     x_path, 0, i + 1);
    }
    for (std::size_t k = 0; k < i; ++k) {
      if (ds.feature_names[k] == ds.feature_names[i]) {
        throw CsvError(x_path + ": duplicate feature name '" + ds.feature_names[i] + "'",
                       x_path, 0, i + 1);
      }
    }
  }
  ds.x = table_to_matrix(xt, x_path);

  const CsvTable yt = read_csv(y_path);
  if (yt.header.size() != 2) {
    throw CsvError(y_path + ": embedding must have exactly 2 columns (found " +
                       std::to_string(yt.header.size()) + ")",
                   y_path, 0, 0);
  }
  ds.y = table_to_matrix(yt, y_path);
  if (ds.y.rows() != ds.x.rows()) {
    throw InputError("row-count mismatch: " + x_path + " has " +
                     std::to_string(ds.x.rows()) + " rows, " + y_path + " has " +
                     std::to_string(ds.y.rows()));
  }
  if (labels_path) {
    auto labels = read_labels(*labels_path);
    if (labels.size() != ds.rows()) {
      throw InputError("row-count mismatch: " + *labels_path + " has " +
                       std::to_string(labels.size()) + " labels, " + x_path + " has " +
                       std::to_string(ds.rows()) + " rows");
    }
    ds.labels = std::move(labels);
    ds.provenance.labels_path = *labels_path;
  }
  ds.provenance.x_path = x_path;
  ds.provenance.y_path = y_path;
  ds.provenance.rows = ds.rows();
  validate_dataset(ds);
  return ds;
}

// Shortest representation that parses back to the same double.
inline std::string format_roundtrip(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos &&
      (field.empty() || (field.front() != ' ' && field.back() != ' '))) {
    return field;
  }
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

inline void write_matrix_csv(const std::string& path, const std::vector<std::string>& header,
                             const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write file: " + path);
  for (std::size_t c = 0; c < header.size(); ++c) {
    out << (c ? "," : "") << csv_quote(header[c]);
  }
  out << '\n';
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      out << (c ? "," : "") << format_roundtrip(m(r, c));
    }
    out << '\n';
  }
}

inline void write_labels_csv(const std::string& path, const std::vector<std::string>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write file: " + path);
  out << "label\n";
  for (const auto& l : labels) out << csv_quote(l) << '\n';
}

// --- run configuration --------------------------------------------------------

enum class ClusterMethod { none, kmeans, dbscan };
enum class ClusterSpace { x, y };

struct ClusterSpec {
  ClusterMethod method = ClusterMethod::none;
  std::size_t k = 0;
  double eps = 0.0;
  std::size_t min_pts = 5;
  ClusterSpace space = ClusterSpace::x;
};

struct RunConfig {
  double alpha = 0.05;
  std::optional<std::size_t> top_k;
  double theta_step_deg = 5.0;
  std::size_t projections = 36;
  bool standardize_x = true;
  bool center_y = true;
  bool standardize_betas = false;
  double clock_scale = 1.0;
  SignificanceRule significance_rule = SignificanceRule::any_axis;
  bool circles = false;
  ClusterSpec cluster;
  std::uint64_t seed = 0;
  int canvas_width = 900;
  int canvas_height = 600;

  ClockOptions clock_options() const {
    ClockOptions o;
    o.alpha = alpha;
    o.top_k = top_k;
    o.standardize_x = standardize_x;
    o.center_y = center_y;
    o.standardize_betas = standardize_betas;
    o.rule = significance_rule;
    o.circles = circles;
    o.projections = projections;
    return o;
  }

  IntergroupOptions intergroup_options() const {
    IntergroupOptions o;
    o.alpha = alpha;
    o.top_k = top_k;
    o.standardize_x = standardize_x;
    return o;
  }
};

// Unvalidated options as they arrive from flags or an API caller.
struct RawOptions {
  std::optional<double> alpha;
  std::optional<long long> top_k;
  std::optional<double> theta_step_deg;
  bool no_standardize_x = false;
  bool no_center_y = false;
  bool standardize_betas = false;
  std::optional<double> clock_scale;
  std::optional<std::string> significance_rule;
  bool circles = false;
  std::optional<std::string> cluster;
  std::optional<std::string> cluster_space;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> canvas;
};

struct ValidatedConfig {
  RunConfig config;
  std::vector<std::string> warnings;
};

// Number of projection lines for a requested angular step: the largest m
// whose step 180/m is not finer than requested.
inline std::size_t projections_for_step(double step_deg) {
  return static_cast<std::size_t>(std::floor(180.0 / step_deg + 1e-9));
}

inline ClusterSpec parse_cluster_spec(const std::string& text) {
  ClusterSpec spec;
  const auto colon = text.find(':');
  const std::string method = text.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
  const auto parse_number = [&text](std::string_view s, double& out) {
    s = csv_detail::trim(s);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(out)) {
      throw InputError("invalid --cluster value '" + text + "'");
    }
  };
  if (method == "kmeans") {
    double k = 0.0;
    parse_number(args, k);
    if (k < 1.0 || k != std::floor(k)) {
      throw InputError("--cluster kmeans:k needs a positive integer k");
    }
    spec.method = ClusterMethod::kmeans;
    spec.k = static_cast<std::size_t>(k);
  } else if (method == "dbscan") {
    const auto comma = args.find(',');
    double eps = 0.0;
    parse_number(std::string_view(args).substr(0, comma), eps);
    if (!(eps > 0.0)) throw InputError("--cluster dbscan:eps needs eps > 0");
    spec.method = ClusterMethod::dbscan;
    spec.eps = eps;
    if (comma != std::string::npos) {
      double mp = 0.0;
      parse_number(std::string_view(args).substr(comma + 1), mp);
      if (mp < 1.0 || mp != std::floor(mp)) {
        throw InputError("--cluster dbscan:eps,min_pts needs a positive integer min_pts");
      }
      spec.min_pts = static_cast<std::size_t>(mp);
    }
  } else {
    throw InputError("unknown clustering '" + text +
                     "' (expected kmeans:k or dbscan:eps[,min_pts])");
  }
  return spec;
}

inline ValidatedConfig validate_config(const RawOptions& raw) {
  ValidatedConfig out;
  RunConfig& c = out.config;
  if (raw.alpha) {
    if (!(*raw.alpha > 0.0 && *raw.alpha <= 1.0)) {
      throw InputError("alpha must lie in (0, 1]");
    }
    c.alpha = *raw.alpha;
  }
  if (raw.top_k) {
    if (*raw.top_k <= 0) throw InputError("top-k must be a positive count");
    c.top_k = static_cast<std::size_t>(*raw.top_k);
  }
  if (raw.theta_step_deg) {
    const double step = *raw.theta_step_deg;
    if (!(step > 0.0 && step <= 90.0)) {
      throw InputError("theta step must lie in (0, 90] degrees");
    }
    const std::size_t m = projections_for_step(step);
    const double adjusted = 180.0 / static_cast<double>(m);
    if (std::abs(adjusted - step) > 1e-9) {
      out.warnings.push_back("theta step " + format_roundtrip(step) +
                             " does not divide 180; using " +
                             format_roundtrip(adjusted));
    }
    c.theta_step_deg = std::abs(adjusted - step) > 1e-9 ? adjusted : step;
    c.projections = m;
  }
  c.standardize_x = !raw.no_standardize_x;
  c.center_y = !raw.no_center_y;
  c.standardize_betas = raw.standardize_betas;
  if (raw.clock_scale) {
    if (!(*raw.clock_scale > 0.0) || !std::isfinite(*raw.clock_scale)) {
      throw InputError("scale must be a positive number");
    }
    c.clock_scale = *raw.clock_scale;
  }
  if (raw.significance_rule) {
    if (*raw.significance_rule == "or") {
      c.significance_rule = SignificanceRule::any_axis;
    } else if (*raw.significance_rule == "and") {
      c.significance_rule = SignificanceRule::both_axes;
    } else {
      throw InputError("significance rule must be 'or' or 'and'");
    }
  }
  c.circles = raw.circles;
  if (raw.cluster) c.cluster = parse_cluster_spec(*raw.cluster);
  if (raw.cluster_space) {
    if (*raw.cluster_space == "x") {
      c.cluster.space = ClusterSpace::x;
    } else if (*raw.cluster_space == "y") {
      c.cluster.space = ClusterSpace::y;
    } else {
      throw InputError("cluster space must be 'x' or 'y'");
    }
  }
  if (raw.seed) c.seed = *raw.seed;
  if (raw.canvas) {
    const auto& s = *raw.canvas;
    const auto xpos = s.find('x');
    int w = 0, h = 0;
    const bool ok = xpos != std::string::npos &&
                    std::from_chars(s.data(), s.data() + xpos, w).ptr == s.data() + xpos &&
                    std::from_chars(s.data() + xpos + 1, s.data() + s.size(), h).ptr ==
                        s.data() + s.size();
    if (!ok || w < 200 || h < 200 || w > 20000 || h > 20000) {
      throw InputError("canvas must be WxH with both sides in [200, 20000] px");
    }
    c.canvas_width = w;
    c.canvas_height = h;
  }
  return out;
}

}  // namespace featureclock
