#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dlsc/core.hpp"
#include "dlsc/sparse_coding.hpp"
#include "dlsc/util.hpp"

namespace dlsc {

enum class InitMode { random_atoms, data_atoms };

struct LearnConfig {
  int outer_iters = 50;
  double dict_step_shrink = 0.5;
  double dict_grad_tol = 1e-10;
  int dict_inner_iters = 50;
  InitMode init_mode = InitMode::data_atoms;
  std::uint64_t seed = 0;
  SolverConfig coding;
  unsigned threads = 1;

  void validate() const {
    if (outer_iters < 1) throw invalid_parameter("learn: outer_iters must be >= 1");
    if (!(dict_step_shrink > 0.0 && dict_step_shrink < 1.0))
      throw invalid_parameter("learn: dict_step_shrink must lie in (0,1)");
    if (!(dict_grad_tol > 0.0)) throw invalid_parameter("learn: dict_grad_tol must be positive");
    if (dict_inner_iters < 1) throw invalid_parameter("learn: dict_inner_iters must be >= 1");
    coding.validate();
  }
};

struct LearnTrace {
  std::vector<double> objectives;  ///< L_X(D_t, A_t) after each outer round
  Dictionary final_dict;
  CoeffMatrix final_coeffs;
  int rounds = 0;
};

/// Projection onto the product of unit spheres (zero columns -> e_{j mod m}).
inline Dictionary project_atoms(Matrix M) { return Dictionary::normalized(std::move(M)); }

/// Empirical objective (1/2n) ||X - D A||_F^2 + (1/n) sum_i g(a_i).
inline double empirical_objective(const SignalSet& X, const Dictionary& dict, const CoeffMatrix& A,
                                  const Penalty& pen) {
  if (X.m() != dict.m() || A.d() != dict.d() || A.n() != X.n())
    throw dimension_error("empirical_objective: shape mismatch");
  const Eigen::Index n = X.n();
  if (n == 0) return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    acc += 0.5 * (X.signal(i) - dict.atoms() * A.coeffs().col(i)).squaredNorm() +
           penalty_eval(A.coeffs().col(i), pen);
  return acc / static_cast<double>(n);
}

namespace detail {

inline double fit_term(const Matrix& X, const Matrix& D, const Matrix& A) {
  return 0.5 * (X - D * A).squaredNorm() / static_cast<double>(std::max<Eigen::Index>(X.cols(), 1));
}

}  // namespace detail

/// Dictionary block of the alternating scheme: projected gradient on the fit
/// term with A fixed. A trial point is accepted only if it passes the
/// sufficient-decrease test after projection, so the returned dictionary
/// never has a larger objective than D0.
inline Dictionary dict_update(const SignalSet& X, const CoeffMatrix& A, const Dictionary& D0,
                              const LearnConfig& cfg) {
  cfg.validate();
  if (X.m() != D0.m() || A.d() != D0.d() || A.n() != X.n())
    throw dimension_error("dict_update: shape mismatch");
  const Matrix& Xs = X.signals();
  const Matrix& As = A.coeffs();
  const double inv_n = 1.0 / static_cast<double>(std::max<Eigen::Index>(X.n(), 1));

  // Lipschitz constant of the gradient: ||A A^T||_2 / n.
  const Matrix AAt = As * As.transpose() * inv_n;
  Eigen::SelfAdjointEigenSolver<Matrix> es(AAt, Eigen::EigenvaluesOnly);
  const double lip = es.eigenvalues().size() ? es.eigenvalues().maxCoeff() : 0.0;
  if (!(lip > 0.0)) return D0;

  Matrix D = D0.atoms();
  double f = detail::fit_term(Xs, D, As);
  double t = 1.0 / lip;
  for (int it = 0; it < cfg.dict_inner_iters; ++it) {
    const Matrix grad = (D * As - Xs) * As.transpose() * inv_n;
    // Riemannian part (tangent to each sphere) decides stationarity.
    Matrix tangent = grad;
    for (Eigen::Index j = 0; j < D.cols(); ++j)
      tangent.col(j) -= D.col(j).dot(grad.col(j)) * D.col(j);
    if (tangent.norm() <= cfg.dict_grad_tol) break;

    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      Matrix trial = project_atoms(D - t * grad).atoms();
      const double f_trial = detail::fit_term(Xs, trial, As);
      const Matrix step = trial - D;
      if (f_trial <= f - 1e-4 * step.squaredNorm() / t && f_trial < f) {
        D = std::move(trial);
        f = f_trial;
        accepted = true;
        break;
      }
      t *= cfg.dict_step_shrink;
    }
    if (!accepted) break;
    t = std::min(t / cfg.dict_step_shrink, 1.0 / lip);
  }
  return Dictionary(std::move(D));
}

namespace detail {

inline Dictionary initial_dictionary(const SignalSet& X, Eigen::Index m, Eigen::Index d,
                                     const LearnConfig& cfg) {
  Rng rng(child_seed(cfg.seed, 0x1417));
  if (cfg.init_mode == InitMode::random_atoms || X.n() == 0) {
    Matrix M(m, d);
    for (Eigen::Index j = 0; j < d; ++j) M.col(j) = sphere_point(m, rng);
    return Dictionary::normalized(std::move(M));
  }
  // d training signals drawn without replacement while possible.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(X.n()));
  for (Eigen::Index i = 0; i < X.n(); ++i) order[static_cast<std::size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), rng);
  Matrix M(m, d);
  for (Eigen::Index j = 0; j < d; ++j)
    M.col(j) = X.signal(order[static_cast<std::size_t>(j % X.n())]);
  return Dictionary::normalized(std::move(M));
}

/// Replaces atoms whose coefficient row is identically zero with the
/// worst-represented training signals. The objective is unchanged because a
/// zero row makes the atom invisible to the fit.
inline Dictionary replace_dead_atoms(const SignalSet& X, const Dictionary& D, const CoeffMatrix& A) {
  const Matrix& As = A.coeffs();
  std::vector<Eigen::Index> dead;
  for (Eigen::Index j = 0; j < As.rows(); ++j)
    if (As.row(j).cwiseAbs().maxCoeff() == 0.0) dead.push_back(j);
  if (dead.empty() || X.n() == 0) return D;

  const Vector resid = (X.signals() - D.atoms() * As).colwise().squaredNorm().transpose();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(X.n()));
  for (Eigen::Index i = 0; i < X.n(); ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return resid[a] > resid[b]; });

  Matrix M = D.atoms();
  std::size_t next = 0;
  for (Eigen::Index j : dead) {
    if (next >= order.size()) break;
    const Eigen::Index i = order[next++];
    if (resid[i] <= 0.0 || X.signal(i).norm() == 0.0) break;
    M.col(j) = X.signal(i);
  }
  return Dictionary::normalized(std::move(M));
}

}  // namespace detail

/// Alternating minimization of the empirical objective over dictionaries
/// with unit-norm atoms and coefficients. Each round codes every sample
/// (keeping the previous coefficients when the solver does not beat them),
/// replaces dead atoms, then runs dict_update. The trace is non-increasing.
inline LearnTrace learn(const SignalSet& X, Eigen::Index m, Eigen::Index d, const Penalty& pen,
                        const LearnConfig& cfg = {}) {
  cfg.validate();
  if (X.n() < 1) throw invalid_parameter("learn: need at least one sample");
  if (X.m() != m) throw dimension_error("learn: signals have dimension " + std::to_string(X.m()) +
                                        ", expected m = " + std::to_string(m));
  if (d < 1) throw invalid_parameter("learn: d must be >= 1");

  Dictionary D = detail::initial_dictionary(X, m, d, cfg);
  CoeffMatrix A(Matrix::Zero(d, X.n()));
  LearnTrace trace{{}, D, A, 0};
  int slow_rounds = 0;
  for (int round = 0; round < cfg.outer_iters; ++round) {
    const Coder coder(D);
    const CoeffMatrix prev = A;
    BatchCoding coded = batch_objective(X, coder, pen, cfg.coding, cfg.threads, &prev);
    A = std::move(coded.A);
    D = detail::replace_dead_atoms(X, D, A);
    D = dict_update(X, A, D, cfg);
    const double obj = empirical_objective(X, D, A, pen);
    trace.objectives.push_back(obj);
    trace.rounds = round + 1;
    if (trace.objectives.size() >= 2) {
      const double before = trace.objectives[trace.objectives.size() - 2];
      const double rel = before > 0.0 ? (before - obj) / before : 0.0;
      slow_rounds = rel < 1e-8 ? slow_rounds + 1 : 0;
      if (slow_rounds >= 3) break;
    }
  }
  trace.final_dict = D;
  trace.final_coeffs = A;
  return trace;
}

}  // namespace dlsc
