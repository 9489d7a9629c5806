#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace dlsc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised for out-of-domain scalar parameters (p <= 0, eps outside (0,1), ...).
class invalid_parameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when matrix/vector shapes do not agree.
class dimension_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a bound cannot be evaluated for the requested configuration,
/// e.g. the net radius of the covering argument falls outside (0,1).
class infeasible_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr double tol_unit = 1e-9;
inline constexpr double tol_ball = 1e-12;

namespace detail {

inline bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

inline void require_finite(const Eigen::Ref<const Matrix>& m, const char* what) {
  if (!all_finite(m)) throw invalid_parameter(std::string(what) + ": non-finite entry");
}

inline std::string shape(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace detail

/// Sparsity measure g(a) = ||a / lambda||_p^q.
class Penalty {
 public:
  Penalty(double p, double q, double lambda) : p_(p), q_(q), lambda_(lambda) {
    if (!(p > 0.0) || !std::isfinite(p)) throw invalid_parameter("penalty: p must be positive");
    if (!(q > 0.0) || !std::isfinite(q)) throw invalid_parameter("penalty: q must be positive");
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw invalid_parameter("penalty: lambda must be positive");
  }

  double p() const { return p_; }
  double q() const { return q_; }
  double lambda() const { return lambda_; }

  /// q == p makes the penalty a sum of per-coordinate terms lambda^-p |a_i|^p.
  bool separable() const { return p_ == q_; }
  bool convex() const { return p_ >= 1.0 && q_ >= 1.0; }

  friend bool operator==(const Penalty&, const Penalty&) = default;

 private:
  double p_;
  double q_;
  double lambda_;
};

/// (sum_i |v_i|^p)^(1/p) for any p > 0. Zero vector maps to 0.
inline double lp_norm(const Eigen::Ref<const Vector>& v, double p) {
  if (!(p > 0.0) || !std::isfinite(p)) throw invalid_parameter("lp_norm: p must be positive");
  // Scale by the max magnitude so large p neither overflows nor underflows.
  const double scale = v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
  if (!std::isfinite(scale)) throw invalid_parameter("lp_norm: non-finite entry");
  if (scale == 0.0) return 0.0;
  if (p == 1.0) return v.cwiseAbs().sum();
  if (p == 2.0) return v.norm();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::pow(std::abs(v[i]) / scale, p);
  return scale * std::pow(acc, 1.0 / p);
}

/// sum_i |v_i|^p (the p-th power of lp_norm, without the outer root).
inline double lp_power_sum(const Eigen::Ref<const Vector>& v, double p) {
  if (p == 1.0) return v.cwiseAbs().sum();
  if (p == 2.0) return v.squaredNorm();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0) acc += std::pow(std::abs(v[i]), p);
  }
  return acc;
}

/// g(v) = ||v / lambda||_p^q.
inline double penalty_eval(const Eigen::Ref<const Vector>& v, const Penalty& pen) {
  const double p = pen.p();
  const double q = pen.q();
  if (pen.separable()) return lp_power_sum(v, p) / std::pow(pen.lambda(), p);
  const double norm = lp_norm(v, p);
  if (norm == 0.0) return 0.0;
  return std::pow(norm / pen.lambda(), q);
}

/// d^{(1 - 1/p)_+}: the constant in ||a||_1 <= factor * ||a||_p for a in R^d.
inline double l1_factor(double p, long long d) {
  if (!(p > 0.0)) throw invalid_parameter("l1_factor: p must be positive");
  if (d < 1) throw invalid_parameter("l1_factor: d must be >= 1");
  const double expo = std::max(1.0 - 1.0 / p, 0.0);
  if (expo == 0.0) return 1.0;
  return std::pow(static_cast<double>(d), expo);
}

/// If g(a) <= t then ||a||_1 <= lambda * d^{(1-1/p)_+} * t^{1/q}.
inline double l1_bound_from_penalty(double t, const Penalty& pen, long long d) {
  if (!(t >= 0.0)) throw invalid_parameter("l1_bound_from_penalty: t must be nonnegative");
  if (t == 0.0) return 0.0;
  return pen.lambda() * l1_factor(pen.p(), d) * std::pow(t, 1.0 / pen.q());
}

/// Element of the constraint set: an m x d matrix whose columns have unit l2 norm.
class Dictionary {
 public:
  /// Rejects matrices whose columns are not unit norm within tol_unit.
  explicit Dictionary(Matrix atoms) : atoms_(std::move(atoms)) {
    if (atoms_.rows() < 1 || atoms_.cols() < 1)
      throw dimension_error("dictionary: need m >= 1 and d >= 1, got " +
                            detail::shape(atoms_.rows(), atoms_.cols()));
    detail::require_finite(atoms_, "dictionary");
    for (Eigen::Index j = 0; j < atoms_.cols(); ++j) {
      const double nrm = atoms_.col(j).norm();
      if (std::abs(nrm - 1.0) > tol_unit)
        throw invalid_parameter("dictionary: column " + std::to_string(j) +
                                " has norm " + std::to_string(nrm) + ", expected 1");
    }
  }

  /// Scales every column to unit norm. Zero columns fall back to e_{j mod m}.
  static Dictionary normalized(Matrix atoms) {
    detail::require_finite(atoms, "dictionary");
    if (atoms.rows() < 1 || atoms.cols() < 1)
      throw dimension_error("dictionary: need m >= 1 and d >= 1, got " +
                            detail::shape(atoms.rows(), atoms.cols()));
    for (Eigen::Index j = 0; j < atoms.cols(); ++j) {
      const double nrm = atoms.col(j).norm();
      if (std::abs(nrm - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon()) continue;
      if (nrm > 0.0) {
        atoms.col(j) /= nrm;
      } else {
        atoms.col(j).setZero();
        atoms(j % atoms.rows(), j) = 1.0;
      }
    }
    return Dictionary(std::move(atoms));
  }

  const Matrix& atoms() const { return atoms_; }
  Eigen::Index m() const { return atoms_.rows(); }
  Eigen::Index d() const { return atoms_.cols(); }

 private:
  Matrix atoms_;
};

/// n signals of dimension m, column-stacked, each inside the closed unit ball.
class SignalSet {
 public:
  explicit SignalSet(Matrix signals) : signals_(std::move(signals)) {
    if (signals_.rows() < 1) throw dimension_error("signal set: need m >= 1");
    detail::require_finite(signals_, "signal set");
    for (Eigen::Index i = 0; i < signals_.cols(); ++i) {
      const double nrm = signals_.col(i).norm();
      if (nrm > 1.0 + tol_ball)
        throw invalid_parameter("signal set: column " + std::to_string(i) + " has norm " +
                                std::to_string(nrm) + " > 1");
    }
  }

  const Matrix& signals() const { return signals_; }
  Eigen::Index m() const { return signals_.rows(); }
  Eigen::Index n() const { return signals_.cols(); }
  auto signal(Eigen::Index i) const { return signals_.col(i); }

 private:
  Matrix signals_;
};

/// d x n coefficient matrix, one column per signal.
class CoeffMatrix {
 public:
  CoeffMatrix() = default;
  explicit CoeffMatrix(Matrix coeffs) : coeffs_(std::move(coeffs)) {
    detail::require_finite(coeffs_, "coefficient matrix");
  }
  const Matrix& coeffs() const { return coeffs_; }
  Eigen::Index d() const { return coeffs_.rows(); }
  Eigen::Index n() const { return coeffs_.cols(); }

 private:
  Matrix coeffs_;
};

/// max_j ||D1_j - D2_j||_2, the 1->2 operator norm of the difference.
inline double dict_distance(const Dictionary& a, const Dictionary& b) {
  if (a.m() != b.m() || a.d() != b.d())
    throw dimension_error("dict_distance: shapes " + detail::shape(a.m(), a.d()) + " and " +
                          detail::shape(b.m(), b.d()) + " differ");
  return (a.atoms() - b.atoms()).colwise().norm().maxCoeff();
}

}  // namespace dlsc
