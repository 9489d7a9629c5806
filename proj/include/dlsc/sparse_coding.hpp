#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dlsc/core.hpp"
#include "dlsc/prox.hpp"
#include "dlsc/util.hpp"

namespace dlsc {

/// How penalties with q != p are handled inside the solver.
enum class NonseparableMethod {
  /// Proximal gradient with the multiplier-search prox (prox::penalty_prox).
  multiplier,
  /// Gradient descent on the penalty with ||.||_p replaced by
  /// (sum (a_i^2 + eps)^{p/2})^{1/p}, followed by eps -> eps/10 continuation.
  smoothing,
};

struct SolverConfig {
  int max_iters = 5000;
  double step_shrink = 0.5;
  double grad_tol = 1e-10;
  double obj_tol = 1e-8;
  int restarts = 5;
  double smoothing_eps = 1e-6;
  std::uint64_t seed = 0;
  NonseparableMethod nonseparable = NonseparableMethod::multiplier;

  void validate() const {
    if (max_iters < 1) throw invalid_parameter("solver: max_iters must be positive");
    if (!(step_shrink > 0.0 && step_shrink < 1.0))
      throw invalid_parameter("solver: step_shrink must lie in (0,1)");
    if (!(grad_tol > 0.0)) throw invalid_parameter("solver: grad_tol must be positive");
    if (!(obj_tol > 0.0)) throw invalid_parameter("solver: obj_tol must be positive");
    if (restarts < 1) throw invalid_parameter("solver: restarts must be positive");
    if (!(smoothing_eps >= 0.0)) throw invalid_parameter("solver: smoothing_eps must be >= 0");
  }
};

struct CodingResult {
  Vector coeffs;
  double objective = 0.0;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = true;
};

namespace detail {

inline void require_signal_shape(const Eigen::Ref<const Vector>& x, const Dictionary& dict) {
  if (x.size() != dict.m())
    throw dimension_error("signal has dimension " + std::to_string(x.size()) +
                          ", dictionary expects " + std::to_string(dict.m()));
}

inline CodingResult finish(const Eigen::Ref<const Vector>& x, const Dictionary& dict,
                           Vector coeffs, const Penalty& pen, int iters, bool converged) {
  CodingResult res;
  const double sq = (x - dict.atoms() * coeffs).squaredNorm();
  res.residual_norm = std::sqrt(sq);
  res.objective = 0.5 * sq + penalty_eval(coeffs, pen);
  res.coeffs = std::move(coeffs);
  res.iterations = iters;
  res.converged = converged;
  return res;
}

/// Strict preference: lower objective, then smaller l1 norm.
inline bool better(double obj_a, double l1_a, double obj_b, double l1_b) {
  if (obj_a != obj_b) return obj_a < obj_b;
  return l1_a < l1_b;
}

}  // namespace detail

/// Per-sample objective 0.5 ||x - D a||_2^2 + g(a).
inline double objective(const Eigen::Ref<const Vector>& x, const Dictionary& dict,
                        const Eigen::Ref<const Vector>& a, const Penalty& pen) {
  detail::require_signal_shape(x, dict);
  if (a.size() != dict.d())
    throw dimension_error("coefficient vector has length " + std::to_string(a.size()) +
                          ", dictionary has " + std::to_string(dict.d()) + " atoms");
  return 0.5 * (x - dict.atoms() * a).squaredNorm() + penalty_eval(a, pen);
}

/// Sparse coder bound to one dictionary. Caches the Gram matrix, its largest
/// eigenvalue (the Lipschitz constant of the fit gradient) and a
/// minimum-norm least-squares factorization used as a start point.
class Coder {
 public:
  explicit Coder(Dictionary dict)
      : dict_(std::move(dict)),
        gram_(dict_.atoms().transpose() * dict_.atoms()),
        lsq_(dict_.atoms()) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram_, Eigen::EigenvaluesOnly);
    lipschitz_ = std::max(es.eigenvalues().maxCoeff(), 1e-12);
  }

  const Dictionary& dictionary() const { return dict_; }
  double lipschitz() const { return lipschitz_; }

  /// Near-minimizer of 0.5 ||x - D a||^2 + g(a). The returned objective is
  /// never above 0.5 ||x||^2: the best iterate is compared with a = 0.
  /// Convex penalties (p >= 1, q >= 1) use one accelerated run from 0;
  /// otherwise the best of `restarts` monotone runs is kept.
  CodingResult code(const Eigen::Ref<const Vector>& x, const Penalty& pen,
                    const SolverConfig& cfg, const Vector* warm = nullptr) const {
    cfg.validate();
    detail::require_signal_shape(x, dict_);
    if (!x.allFinite()) throw invalid_parameter("sparse_code: non-finite signal");
    const Eigen::Index d = dict_.d();
    if (x.squaredNorm() == 0.0) return detail::finish(x, dict_, Vector::Zero(d), pen, 0, true);

    const Vector b = dict_.atoms().transpose() * x;
    const double xx = x.squaredNorm();

    std::vector<Vector> starts;
    starts.push_back(Vector::Zero(d));
    if (warm != nullptr) {
      if (warm->size() != d) throw dimension_error("sparse_code: warm start has wrong length");
      starts.push_back(*warm);
    }
    if (!pen.convex()) {
      if (cfg.restarts >= 2) starts.push_back(lsq_.solve(x));
      const int n_random = std::max(0, cfg.restarts - 2);
      if (n_random > 0) {
        const double radius = l1_bound_from_penalty(0.5 * xx, pen, d);
        Rng rng(mix64(cfg.seed));
        std::exponential_distribution<double> expo(1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int k = 0; k < n_random; ++k) {
          Vector v(d);
          for (Eigen::Index i = 0; i < d; ++i) v[i] = (unif(rng) < 0.5 ? -1.0 : 1.0) * expo(rng);
          v *= radius * std::pow(unif(rng), 1.0 / static_cast<double>(d)) / v.cwiseAbs().sum();
          starts.push_back(std::move(v));
        }
      }
    }

    Vector best = Vector::Zero(d);
    double best_obj = std::numeric_limits<double>::infinity();
    double best_l1 = 0.0;
    int best_iters = 0;
    bool best_conv = true;
    for (const Vector& start : starts) {
      Run run = (!pen.separable() && cfg.nonseparable == NonseparableMethod::smoothing)
                    ? smoothed_descent(b, xx, start, pen, cfg)
                    : proximal_gradient(b, xx, start, pen, cfg, pen.convex());
      const double obj = objective(x, dict_, run.coeffs, pen);
      const double l1 = run.coeffs.cwiseAbs().sum();
      if (detail::better(obj, l1, best_obj, best_l1)) {
        best = std::move(run.coeffs);
        best_obj = obj;
        best_l1 = l1;
        best_iters = run.iterations;
        best_conv = run.converged;
      }
    }
    // Zero fallback: 0 wins ties.
    if (!(best_obj < 0.5 * xx)) best.setZero();
    return detail::finish(x, dict_, std::move(best), pen, best_iters, best_conv);
  }

 private:
  struct Run {
    Vector coeffs;
    int iterations = 0;
    bool converged = false;
  };

  double fit(const Vector& a, const Vector& b, double xx) const {
    return 0.5 * xx - a.dot(b) + 0.5 * a.dot(gram_ * a);
  }

  /// FISTA with function-value restart when `accelerate`, plain proximal
  /// gradient otherwise. Step from 1/L with backtracking on the sufficient
  /// decrease test of the quadratic model.
  Run proximal_gradient(const Vector& b, double xx, const Vector& start, const Penalty& pen,
                        const SolverConfig& cfg, bool accelerate) const {
    double t = 1.0 / lipschitz_;
    Vector cur = start;
    Vector prev = start;
    Vector y = start;
    double f_cur = fit(cur, b, xx) + penalty_eval(cur, pen);
    double theta = 1.0;
    int stall = 0;
    bool restarted = false;
    Run run;
    for (int k = 0; k < cfg.max_iters; ++k) {
      run.iterations = k + 1;
      const Vector grad = gram_ * y - b;
      const double fy = fit(y, b, xx);
      Vector next;
      Vector diff;
      for (int bt = 0;; ++bt) {
        next = prox::penalty_prox(y - t * grad, t, pen);
        diff = next - y;
        const double model = fy + grad.dot(diff) + diff.squaredNorm() / (2.0 * t);
        if (fit(next, b, xx) <= model + 1e-15 * std::max(1.0, std::abs(fy)) || bt >= 60) break;
        t *= cfg.step_shrink;
      }
      const double mapping = diff.norm() / t;
      const double f_next = fit(next, b, xx) + penalty_eval(next, pen);

      if (accelerate && f_next > f_cur) {
        if (restarted) {
          // A prox step from the accepted point cannot increase the objective
          // except by rounding: it is a fixed point.
          run.converged = true;
          break;
        }
        // Momentum overshoot: restart from the last accepted point.
        theta = 1.0;
        y = cur;
        restarted = true;
        continue;
      }
      restarted = false;
      if (!accelerate && f_next > f_cur) {
        // Approximate prox (nonseparable search) failed to improve; stay.
        run.converged = mapping <= cfg.grad_tol;
        break;
      }
      const double decrease = f_cur - f_next;
      prev = cur;
      cur = std::move(next);
      f_cur = f_next;
      if (accelerate) {
        const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
        y = cur + ((theta - 1.0) / theta_next) * (cur - prev);
        theta = theta_next;
      } else {
        y = cur;
      }
      if (mapping <= cfg.grad_tol) {
        run.converged = true;
        break;
      }
      stall = (decrease <= 1e-3 * cfg.obj_tol * std::max(1.0, f_cur)) ? stall + 1 : 0;
      if (stall >= 10) {
        run.converged = true;
        break;
      }
    }
    run.coeffs = std::move(cur);
    return run;
  }

  /// Smoothed penalty lambda^-q (sum (a_i^2 + eps)^{p/2})^{q/p} and its gradient.
  static double smoothed_penalty(const Vector& a, const Penalty& pen, double eps, Vector* grad) {
    const double p = pen.p();
    const double q = pen.q();
    const double scale = std::pow(pen.lambda(), -q);
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) s += std::pow(a[i] * a[i] + eps, 0.5 * p);
    if (s <= 0.0) {
      if (grad != nullptr) grad->setZero(a.size());
      return 0.0;
    }
    if (grad != nullptr) {
      grad->resize(a.size());
      const double outer = scale * q * std::pow(s, q / p - 1.0);
      for (Eigen::Index i = 0; i < a.size(); ++i)
        (*grad)[i] = outer * std::pow(a[i] * a[i] + eps, 0.5 * p - 1.0) * a[i];
    }
    return scale * std::pow(s, q / p);
  }

  Run smoothed_descent(const Vector& b, double xx, const Vector& start, const Penalty& pen,
                       const SolverConfig& cfg) const {
    constexpr int kStages = 4;  // eps, eps/10, eps/100, eps/1000
    const double eps0 = std::max(cfg.smoothing_eps, 1e-15);
    const int per_stage = std::max(1, cfg.max_iters / kStages);
    Vector cur = start;
    Run run;
    double t = 1.0 / lipschitz_;
    for (int stage = 0; stage < kStages; ++stage) {
      const double eps = eps0 * std::pow(0.1, stage);
      Vector gpen;
      double f_cur = fit(cur, b, xx) + smoothed_penalty(cur, pen, eps, &gpen);
      bool stage_conv = false;
      for (int k = 0; k < per_stage; ++k) {
        ++run.iterations;
        const Vector grad = gram_ * cur - b + gpen;
        const double gn2 = grad.squaredNorm();
        if (std::sqrt(gn2) <= cfg.grad_tol) {
          stage_conv = true;
          break;
        }
        t = std::min(t * 2.0, 1e6 / lipschitz_);
        Vector next;
        Vector gnext;
        double f_next = f_cur;
        bool accepted = false;
        for (int bt = 0; bt < 80; ++bt) {
          next = cur - t * grad;
          f_next = fit(next, b, xx) + smoothed_penalty(next, pen, eps, &gnext);
          if (f_next <= f_cur - 1e-4 * t * gn2) {
            accepted = true;
            break;
          }
          t *= cfg.step_shrink;
        }
        if (!accepted) {
          stage_conv = true;
          break;
        }
        const double decrease = f_cur - f_next;
        cur = std::move(next);
        gpen = std::move(gnext);
        f_cur = f_next;
        if (decrease <= 1e-3 * cfg.obj_tol * std::max(1.0, f_cur)) {
          stage_conv = true;
          break;
        }
      }
      run.converged = stage_conv;
    }
    run.coeffs = std::move(cur);
    return run;
  }

  Dictionary dict_;
  Matrix gram_;
  Eigen::CompleteOrthogonalDecomposition<Matrix> lsq_;
  double lipschitz_ = 1.0;
};

/// f_x(D) upper estimate with the minimizing coefficients.
inline CodingResult sparse_code(const Eigen::Ref<const Vector>& x, const Dictionary& dict,
                                const Penalty& pen, const SolverConfig& cfg = {}) {
  return Coder(dict).code(x, pen, cfg);
}

/// Default half-width of the brute-force box: the l1 radius that every
/// coefficient vector with objective <= 0.5 ||x||^2 satisfies.
inline double default_grid_half_width(const Eigen::Ref<const Vector>& x, const Penalty& pen,
                                      Eigen::Index d) {
  return l1_bound_from_penalty(0.5 * x.squaredNorm(), pen, d);
}

namespace detail {

/// Lower envelope of lines y = intercept - slope_coeff * c with slope_coeff
/// strictly increasing; answers min_j over the lines at a query point c.
class LowerEnvelope {
 public:
  LowerEnvelope(const std::vector<double>& coeff, const std::vector<double>& intercept) {
    // Line j: value(c) = intercept[j] - coeff[j] * c; slopes -coeff decrease.
    for (std::size_t j = 0; j < coeff.size(); ++j) {
      while (hull_.size() >= 2) {
        const std::size_t l1 = hull_[hull_.size() - 2];
        const std::size_t l2 = hull_.back();
        if (cross(coeff, intercept, l1, j) <= cross(coeff, intercept, l1, l2)) hull_.pop_back();
        else break;
      }
      hull_.push_back(j);
    }
    breaks_.resize(hull_.empty() ? 0 : hull_.size() - 1);
    for (std::size_t k = 0; k + 1 < hull_.size(); ++k)
      breaks_[k] = cross(coeff, intercept, hull_[k], hull_[k + 1]);
  }

  /// Index of a minimizing line at c.
  std::size_t argmin(double c) const {
    const auto it = std::lower_bound(breaks_.begin(), breaks_.end(), c);
    return hull_[static_cast<std::size_t>(it - breaks_.begin())];
  }

 private:
  // Abscissa where lines a and b (coeff[a] < coeff[b]) intersect.
  static double cross(const std::vector<double>& coeff, const std::vector<double>& icpt,
                      std::size_t a, std::size_t b) {
    return (icpt[b] - icpt[a]) / (coeff[b] - coeff[a]);
  }

  std::vector<std::size_t> hull_;
  std::vector<double> breaks_;
};

}  // namespace detail

/// Exhaustive minimization over the grid {-w, ..., w}^d with `grid_points`
/// values per coordinate (odd counts contain 0 exactly). For separable
/// penalties the last coordinate is minimized exactly over its grid through a
/// lower envelope of lines, so the cost is grid_points^{d-1} envelope
/// queries; the result is identical to plain enumeration. Nonseparable
/// penalties are enumerated directly.
inline CodingResult brute_force_code(const Eigen::Ref<const Vector>& x, const Dictionary& dict,
                                     const Penalty& pen, double grid_half_width,
                                     int grid_points) {
  detail::require_signal_shape(x, dict);
  const Eigen::Index d = dict.d();
  if (d > 3) throw invalid_parameter("brute_force_code: d = " + std::to_string(d) + " > 3");
  if (grid_points < 11) throw invalid_parameter("brute_force_code: grid_points must be >= 11");
  if (!(grid_half_width >= 0.0)) throw invalid_parameter("brute_force_code: negative half-width");
  if (!x.allFinite()) throw invalid_parameter("brute_force_code: non-finite signal");

  const auto G = static_cast<std::size_t>(grid_points);
  std::vector<double> grid(G);
  for (std::size_t j = 0; j < G; ++j)
    grid[j] = -grid_half_width + 2.0 * grid_half_width * static_cast<double>(j) /
                                     static_cast<double>(G - 1);
  if (G % 2 == 1) grid[G / 2] = 0.0;

  const Matrix& atoms = dict.atoms();
  const double p = pen.p();
  Vector best = Vector::Zero(d);
  double best_val = std::numeric_limits<double>::infinity();
  Vector a(d);

  if (pen.separable()) {
    const double scale = std::pow(pen.lambda(), -p);
    std::vector<double> h(G);
    for (std::size_t j = 0; j < G; ++j)
      h[j] = grid[j] == 0.0 ? 0.0 : scale * std::pow(std::abs(grid[j]), p);
    const Eigen::Index last = d - 1;
    const double last_sq = atoms.col(last).squaredNorm();
    std::vector<double> icpt(G);
    for (std::size_t j = 0; j < G; ++j) icpt[j] = 0.5 * grid[j] * grid[j] * last_sq + h[j];
    const detail::LowerEnvelope env(grid, icpt);

    // Enumerate the leading d-1 coordinates.
    std::vector<std::size_t> idx(static_cast<std::size_t>(last), 0);
    for (;;) {
      Vector r = x;
      double pen_sum = 0.0;
      for (Eigen::Index k = 0; k < last; ++k) {
        const double v = grid[idx[static_cast<std::size_t>(k)]];
        a[k] = v;
        r.noalias() -= v * atoms.col(k);
        pen_sum += h[idx[static_cast<std::size_t>(k)]];
      }
      const double c = atoms.col(last).dot(r);
      const std::size_t j = env.argmin(c);
      const double val = 0.5 * r.squaredNorm() + pen_sum + icpt[j] - grid[j] * c;
      if (val < best_val) {
        best_val = val;
        a[last] = grid[j];
        best = a;
      }
      Eigen::Index k = last - 1;
      while (k >= 0 && ++idx[static_cast<std::size_t>(k)] == G) idx[static_cast<std::size_t>(k--)] = 0;
      if (k < 0) break;
    }
  } else {
    std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
    for (;;) {
      for (Eigen::Index k = 0; k < d; ++k) a[k] = grid[idx[static_cast<std::size_t>(k)]];
      const double val = 0.5 * (x - atoms * a).squaredNorm() + penalty_eval(a, pen);
      if (val < best_val) {
        best_val = val;
        best = a;
      }
      Eigen::Index k = d - 1;
      while (k >= 0 && ++idx[static_cast<std::size_t>(k)] == G) idx[static_cast<std::size_t>(k--)] = 0;
      if (k < 0) break;
    }
  }
  return detail::finish(x, dict, std::move(best), pen, 0, true);
}

inline CodingResult brute_force_code(const Eigen::Ref<const Vector>& x, const Dictionary& dict,
                                     const Penalty& pen, int grid_points = 2001) {
  return brute_force_code(x, dict, pen, default_grid_half_width(x, pen, dict.d()), grid_points);
}

/// Worst-case objective gap between the grid minimum and the continuous
/// minimum over the box: half a grid step in every coordinate times a
/// Lipschitz bound of the objective on the box. For p < 1 or q < 1 the
/// penalty is not Lipschitz at 0 and only the fit term is counted (the grid
/// contains 0 on every axis).
inline double brute_force_grid_error(const Eigen::Ref<const Vector>& x, const Dictionary& dict,
                                     const Penalty& pen, double grid_half_width,
                                     int grid_points) {
  const auto d = static_cast<double>(dict.d());
  const double spacing = 2.0 * grid_half_width / static_cast<double>(grid_points - 1);
  const double sigma = Eigen::JacobiSVD<Matrix>(dict.atoms()).singularValues()(0);
  double lip = sigma * (sigma * grid_half_width * std::sqrt(d) + x.norm());
  if (pen.convex() && grid_half_width > 0.0) {
    const double q = pen.q();
    lip += q * std::pow(pen.lambda(), -q) * std::pow(grid_half_width * d, q - 1.0) *
           std::sqrt(d);
  }
  return 0.5 * spacing * std::sqrt(d) * lip;
}

struct BatchCoding {
  double F = 0.0;          ///< mean of per-sample objectives
  CoeffMatrix A;           ///< d x n
  Vector objectives;       ///< per-sample f_{x_i}(D) estimates
  std::size_t nonconverged = 0;
};

/// F_X(D) = mean_i f_{x_i}(D). Samples may be coded concurrently; the mean
/// is reduced in index order so the result does not depend on `threads`.
inline BatchCoding batch_objective(const SignalSet& X, const Coder& coder, const Penalty& pen,
                                   const SolverConfig& cfg = {}, unsigned threads = 1,
                                   const CoeffMatrix* warm = nullptr) {
  const Dictionary& dict = coder.dictionary();
  if (X.m() != dict.m())
    throw dimension_error("batch_objective: signals have dimension " + std::to_string(X.m()) +
                          ", dictionary expects " + std::to_string(dict.m()));
  if (warm != nullptr && (warm->d() != dict.d() || warm->n() != X.n()))
    throw dimension_error("batch_objective: warm coefficients have the wrong shape");
  const Eigen::Index n = X.n();
  Matrix A = Matrix::Zero(dict.d(), n);
  Vector obj = Vector::Zero(n);
  std::vector<char> conv(static_cast<std::size_t>(n), 1);
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
    const auto col = static_cast<Eigen::Index>(i);
    std::optional<Vector> w;
    if (warm != nullptr) w = warm->coeffs().col(col);
    CodingResult r = coder.code(X.signal(col), pen, cfg, w ? &*w : nullptr);
    A.col(col) = r.coeffs;
    obj[col] = r.objective;
    conv[i] = r.converged ? 1 : 0;
  });
  BatchCoding out;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) acc += obj[i];
  out.F = n > 0 ? acc / static_cast<double>(n) : 0.0;
  out.A = CoeffMatrix(std::move(A));
  out.objectives = std::move(obj);
  out.nonconverged = static_cast<std::size_t>(std::count(conv.begin(), conv.end(), 0));
  return out;
}

inline BatchCoding batch_objective(const SignalSet& X, const Dictionary& dict, const Penalty& pen,
                                   const SolverConfig& cfg = {}, unsigned threads = 1) {
  return batch_objective(X, Coder(dict), pen, cfg, threads);
}

/// Membership of A in the eps-near solution set: every column's objective is
/// within eps of the trusted per-sample optimum.
inline bool is_eps_near_solution(const SignalSet& X, const Dictionary& dict, const CoeffMatrix& A,
                                 const Penalty& pen, double eps,
                                 const std::vector<double>& oracle_objectives) {
  if (!(eps >= 0.0)) throw invalid_parameter("is_eps_near_solution: eps must be >= 0");
  if (X.m() != dict.m() || A.d() != dict.d() || A.n() != X.n() ||
      static_cast<Eigen::Index>(oracle_objectives.size()) != X.n())
    throw dimension_error("is_eps_near_solution: shape mismatch");
  for (Eigen::Index i = 0; i < X.n(); ++i) {
    const double val = objective(X.signal(i), dict, A.coeffs().col(i), pen);
    if (val > oracle_objectives[static_cast<std::size_t>(i)] + eps) return false;
  }
  return true;
}

}  // namespace dlsc
