#pragma once

// Numerical kernel: column normalization, least squares with t-tests,
// Student-t tails and a small PCA used as a reference.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "featureclock/errors.hpp"

namespace featureclock {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

namespace numstats {

// Columns whose sample standard deviation falls at or below this (relative to
// max(1, |mean|)) are treated as constant.
inline constexpr double kVarianceEpsilon = 1e-12;
// Pivots of the QR factor below this fraction of the largest pivot count as
// rank loss.
inline constexpr double kRankTolerance = 1e-10;
// Lentz continued fraction controls for the incomplete beta function.
inline constexpr int kBetaMaxIterations = 300;
inline constexpr double kBetaTolerance = 1e-12;
// Cyclic Jacobi stops once the off-diagonal Frobenius norm drops below this.
inline constexpr double kJacobiTolerance = 1e-12;
inline constexpr int kJacobiMaxSweeps = 100;

struct Standardized {
  Matrix values;
  Vector means;
  Vector stds;
  // Indices of columns that were only centered because their spread is zero.
  std::vector<std::size_t> zero_variance;
};

struct RegressionFit {
  Vector coefficients;
  Vector std_errors;
  Vector t_stats;
  Vector p_values;
  Index dof = 0;
  double residual_variance = 0.0;
};

struct PcaModel {
  std::array<Vector, 2> components;
  std::array<double, 2> explained_variance{};
  Vector mean;

  // Projects rows of x onto the two components after centering with `mean`.
  Matrix scores(const Matrix& x) const {
    Matrix centered = x.rowwise() - mean.transpose();
    Matrix out(x.rows(), 2);
    out.col(0) = centered * components[0];
    out.col(1) = centered * components[1];
    return out;
  }
};

namespace detail {

// Mean with one correction pass; keeps |mean(x - m)| at rounding level.
inline double accurate_mean(const Eigen::Ref<const Vector>& column) {
  const auto n = static_cast<double>(column.size());
  double m = column.sum() / n;
  m += (column.array() - m).sum() / n;
  return m;
}

inline double sample_std(const Eigen::Ref<const Vector>& column, double mean) {
  const auto n = column.size();
  if (n < 2) return 0.0;
  return std::sqrt((column.array() - mean).square().sum() /
                   static_cast<double>(n - 1));
}

}  // namespace detail

inline Matrix center_columns(const Matrix& m) {
  if (m.rows() < 1) throw ComputationError("center_columns: empty matrix");
  Matrix out = m;
  for (Index j = 0; j < m.cols(); ++j) {
    const double mean = detail::accurate_mean(m.col(j));
    out.col(j).array() -= mean;
  }
  return out;
}

// Centers every column and scales it to unit sample standard deviation.
// Constant columns are centered only and listed in `zero_variance`.
inline Standardized standardize_columns(const Matrix& m) {
  if (m.rows() < 2) {
    throw ComputationError("standardize_columns: need at least 2 rows");
  }
  Standardized out;
  out.values.resize(m.rows(), m.cols());
  out.means.resize(m.cols());
  out.stds.resize(m.cols());
  for (Index j = 0; j < m.cols(); ++j) {
    const double mean = detail::accurate_mean(m.col(j));
    const double sd = detail::sample_std(m.col(j), mean);
    out.means(j) = mean;
    out.stds(j) = sd;
    out.values.col(j) = m.col(j).array() - mean;
    if (sd <= kVarianceEpsilon * std::max(1.0, std::abs(mean))) {
      out.zero_variance.push_back(static_cast<std::size_t>(j));
      out.values.col(j).setZero();
    } else {
      out.values.col(j) /= sd;
    }
  }
  return out;
}

// Regularized incomplete beta I_x(a, b) via Lentz's continued fraction.
inline double incomplete_beta(double x, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;

  const auto continued_fraction = [](double xx, double aa, double bb) {
    constexpr double tiny = 1e-300;
    const double qab = aa + bb;
    const double qap = aa + 1.0;
    const double qam = aa - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * xx / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kBetaMaxIterations; ++m) {
      const double m2 = 2.0 * m;
      double coeff = m * (bb - m) * xx / ((qam + m2) * (aa + m2));
      d = 1.0 + coeff * d;
      if (std::abs(d) < tiny) d = tiny;
      c = 1.0 + coeff / c;
      if (std::abs(c) < tiny) c = tiny;
      d = 1.0 / d;
      h *= d * c;
      coeff = -(aa + m) * (qab + m) * xx / ((aa + m2) * (qap + m2));
      d = 1.0 + coeff * d;
      if (std::abs(d) < tiny) d = tiny;
      c = 1.0 + coeff / c;
      if (std::abs(c) < tiny) c = tiny;
      d = 1.0 / d;
      const double delta = d * c;
      h *= delta;
      if (std::abs(delta - 1.0) < kBetaTolerance) break;
    }
    return h;
  };

  const double log_front = std::lgamma(a + b) - std::lgamma(a) -
                           std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * continued_fraction(x, a, b) / a;
  }
  return 1.0 - front * continued_fraction(1.0 - x, b, a) / b;
}

// P(|T| >= |t|) for Student's t with `dof` degrees of freedom.
inline double student_t_two_sided_p(double t, Index dof) {
  if (dof < 1) throw ComputationError("student_t_two_sided_p: dof must be >= 1");
  if (t == 0.0) return 1.0;
  if (std::isinf(t)) return 0.0;
  const double nu = static_cast<double>(dof);
  const double x = nu / (nu + t * t);
  return std::clamp(incomplete_beta(x, nu / 2.0, 0.5), 0.0, 1.0);
}

// Two-sided standard normal tail P(|Z| >= |z|).
inline double normal_two_sided_p(double z) {
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

// Least squares on a fixed, centered design. The factorization is computed
// once and reused for any number of targets.
class LeastSquares {
 public:
  explicit LeastSquares(const Matrix& x) : x_(x), qr_(x.rows(), x.cols()) {
    const Index n = x.rows();
    const Index d = x.cols();
    if (d < 1) throw ComputationError("least squares: design has no columns");
    if (n < d + 2) {
      throw ComputationError("insufficient observations: " +
                             std::to_string(n) + " rows for " +
                             std::to_string(d) + " features (need at least " +
                             std::to_string(d + 2) + ")");
    }
    qr_.compute(x);
    const auto& r = qr_.matrixQR();
    const double largest = std::abs(r(0, 0));
    Index rank = 0;
    while (rank < d && std::abs(r(rank, rank)) > kRankTolerance * largest) {
      ++rank;
    }
    if (largest == 0.0) rank = 0;
    if (rank < d) {
      std::vector<std::size_t> bad;
      for (Index k = rank; k < d; ++k) {
        bad.push_back(static_cast<std::size_t>(qr_.colsPermutation().indices()(k)));
      }
      std::sort(bad.begin(), bad.end());
      std::string list;
      for (auto c : bad) {
        if (!list.empty()) list += ", ";
        list += std::to_string(c);
      }
      throw RankDeficientError(
          "rank-deficient design (rank " + std::to_string(rank) + " < " +
              std::to_string(d) + "); dependent columns: " + list,
          std::move(bad));
    }

    // diag((X^T X)^{-1}) = row norms of R^{-1}, mapped back through the pivots.
    const Matrix upper = r.topLeftCorner(d, d).triangularView<Eigen::Upper>();
    const Matrix r_inv = upper.triangularView<Eigen::Upper>().solve(
        Matrix::Identity(d, d));
    inverse_gram_diag_.resize(d);
    for (Index k = 0; k < d; ++k) {
      inverse_gram_diag_(qr_.colsPermutation().indices()(k)) =
          r_inv.row(k).squaredNorm();
    }
  }

  Index rows() const { return x_.rows(); }
  Index cols() const { return x_.cols(); }

  Vector solve(const Vector& y) const { return qr_.solve(y); }

  RegressionFit fit(const Vector& y) const {
    if (y.size() != x_.rows()) {
      throw ComputationError("least squares: target length does not match design");
    }
    const Index n = x_.rows();
    const Index d = x_.cols();
    RegressionFit out;
    out.coefficients = qr_.solve(y);
    const Vector residual = y - x_ * out.coefficients;
    out.dof = n - d - 1;
    out.residual_variance =
        residual.squaredNorm() / static_cast<double>(out.dof);
    out.std_errors =
        (out.residual_variance * inverse_gram_diag_.array()).sqrt().matrix();
    out.t_stats.resize(d);
    out.p_values.resize(d);

    const double exact_threshold = 1e-14 * (y.squaredNorm() / n + 1.0);
    const bool exact = out.residual_variance < exact_threshold;
    for (Index j = 0; j < d; ++j) {
      const double beta = out.coefficients(j);
      const double se = out.std_errors(j);
      if (se > 0.0) {
        out.t_stats(j) = beta / se;
      } else {
        out.t_stats(j) = std::abs(beta) > 1e-10
                             ? std::copysign(std::numeric_limits<double>::infinity(), beta)
                             : 0.0;
      }
      if (exact) {
        out.p_values(j) = std::abs(beta) > 1e-10 ? 0.0 : 1.0;
      } else {
        out.p_values(j) = student_t_two_sided_p(out.t_stats(j), out.dof);
      }
    }
    return out;
  }

 private:
  Matrix x_;
  Eigen::ColPivHouseholderQR<Matrix> qr_;
  Vector inverse_gram_diag_;
};

// OLS without explicit intercept on a centered design; dof = n - d - 1.
inline RegressionFit ols_fit(const Matrix& x, const Vector& y) {
  return LeastSquares(x).fit(y);
}

struct SymmetricEigen {
  Vector values;   // descending
  Matrix vectors;  // columns match `values`
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix.
inline SymmetricEigen jacobi_eigen(const Matrix& sym) {
  const Index d = sym.rows();
  Matrix a = sym;
  Matrix v = Matrix::Identity(d, d);
  const double scale = std::max(1.0, a.norm());

  const auto off_norm = [&a, d] {
    double s = 0.0;
    for (Index p = 0; p < d; ++p)
      for (Index q = 0; q < d; ++q)
        if (p != q) s += a(p, q) * a(p, q);
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < kJacobiMaxSweeps; ++sweep) {
    if (off_norm() < kJacobiTolerance * scale) break;
    for (Index p = 0; p < d - 1; ++p) {
      for (Index q = p + 1; q < d; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (Index k = 0; k < d; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < d; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Index k = 0; k < d; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&a](Index l, Index r) { return a(l, l) > a(r, r); });
  SymmetricEigen out;
  out.values.resize(d);
  out.vectors.resize(d, d);
  for (Index k = 0; k < d; ++k) {
    out.values(k) = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

// Top-two principal axes of the sample covariance. Each loading vector is
// signed so that its largest-magnitude entry is positive.
inline PcaModel pca_2d(const Matrix& x) {
  if (x.cols() < 2) throw ComputationError("pca_2d: need at least 2 features");
  if (x.rows() < 3) throw ComputationError("pca_2d: need at least 3 rows");
  PcaModel model;
  model.mean.resize(x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    model.mean(j) = detail::accurate_mean(x.col(j));
  }
  const Matrix centered = x.rowwise() - model.mean.transpose();
  const Matrix cov =
      (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
  const SymmetricEigen eig = jacobi_eigen(cov);
  for (int c = 0; c < 2; ++c) {
    Vector w = eig.vectors.col(c);
    w.normalize();
    Index arg = 0;
    for (Index j = 1; j < w.size(); ++j) {
      if (std::abs(w(j)) > std::abs(w(arg))) arg = j;
    }
    if (w(arg) < 0.0) w = -w;
    model.components[static_cast<std::size_t>(c)] = w;
    model.explained_variance[static_cast<std::size_t>(c)] =
        std::max(0.0, eig.values(c));
  }
  return model;
}

}  // namespace numstats
}  // namespace featureclock
