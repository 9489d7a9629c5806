#pragma once

// Sample-complexity constants for dictionaries with unit-norm atoms and
// signals drawn from a distribution supported in the unit ball.
//
// All logarithms are natural. Every guarantee below is a statement in exact
// arithmetic; the functions evaluate the closed forms in double precision.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "dlsc/core.hpp"

namespace dlsc {

/// Raised by required_samples when no n below 2^62 reaches the target.
class unreachable_target : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

namespace detail {

inline double check_dims(long long m, long long d) {
  if (m < 1) throw invalid_parameter("m must be >= 1");
  if (d < 1) throw invalid_parameter("d must be >= 1");
  return static_cast<double>(m) * static_cast<double>(d);
}

/// Per-sample radius lambda d^{(1-1/p)_+} (||x||^2 / 2)^{1/q}.
inline double coeff_l1_radius(double sq_norm, const Penalty& pen, long long d) {
  return l1_bound_from_penalty(0.5 * sq_norm, pen, d);
}

}  // namespace detail

/// L_X = (1/n) sum_i ||x_i|| * lambda d^{(1-1/p)_+} (||x_i||^2/2)^{1/q}.
/// Dictionary-independent Lipschitz constant of F_X in the 1->2 metric.
inline double empirical_L(const SignalSet& X, const Penalty& pen, long long d) {
  if (X.n() == 0) return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < X.n(); ++i) {
    const double sq = X.signal(i).squaredNorm();
    acc += std::sqrt(sq) * detail::coeff_l1_radius(sq, pen, d);
  }
  return acc / static_cast<double>(X.n());
}

/// C_X = (1/2n) sum_i lambda d^{(1-1/p)_+} (||x_i||^2/2)^{1/q}.
inline double empirical_C(const SignalSet& X, const Penalty& pen, long long d) {
  if (X.n() == 0) return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < X.n(); ++i)
    acc += detail::coeff_l1_radius(X.signal(i).squaredNorm(), pen, d);
  return acc / (2.0 * static_cast<double>(X.n()));
}

/// Variant of C_X with the l1 radius squared: (1/2n) sum_i radius_i^2, the
/// value obtained by bounding (1/2n) sum ||a_i||_1^2 term by term.
inline double empirical_C_squared(const SignalSet& X, const Penalty& pen, long long d) {
  if (X.n() == 0) return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < X.n(); ++i) {
    const double r = detail::coeff_l1_radius(X.signal(i).squaredNorm(), pen, d);
    acc += r * r;
  }
  return acc / (2.0 * static_cast<double>(X.n()));
}

/// lambda d^{(1-1/p)_+} (1/2)^{1/q}: sup of L_X over unit-ball signal sets.
/// Any L strictly above it has zero tail probability.
inline double worst_case_L(const Penalty& pen, long long d) {
  return pen.lambda() * l1_factor(pen.p(), d) * std::pow(0.5, 1.0 / pen.q());
}

/// log of the covering bound (3/eps)^{md} for the product of d spheres S^{m-1}.
inline double log_covering_number(long long m, long long d, double eps) {
  const double md = detail::check_dims(m, d);
  if (!(eps > 0.0 && eps < 1.0)) throw invalid_parameter("log_covering_number: eps must lie in (0,1)");
  return md * std::log(3.0 / eps);
}

/// log of the tighter covering bound (1 + 2/eps)^{md}.
inline double log_covering_number_tight(long long m, long long d, double eps) {
  const double md = detail::check_dims(m, d);
  if (!(eps > 0.0 && eps < 1.0)) throw invalid_parameter("log_covering_number: eps must lie in (0,1)");
  return md * std::log1p(2.0 / eps);
}

/// 2 exp(-n tau^2): bound on P(|F_X(D) - E f_x(D)| > tau / sqrt(8)) for a fixed D.
inline double hoeffding_tail(long long n, double tau) {
  if (n < 1) throw invalid_parameter("hoeffding_tail: n must be >= 1");
  if (!(tau >= 0.0)) throw invalid_parameter("hoeffding_tail: tau must be >= 0");
  return 2.0 * std::exp(-static_cast<double>(n) * tau * tau);
}

/// beta = (md/8) max{log(6 sqrt(8) L), 1}.
inline double compute_beta(long long m, long long d, double L) {
  const double md = detail::check_dims(m, d);
  if (!(L > 0.0) || !std::isfinite(L)) throw invalid_parameter("compute_beta: L must be positive");
  return md / 8.0 * std::max(std::log(6.0 * std::sqrt(8.0) * L), 1.0);
}

/// eta(n) = 2 sqrt(beta log n / n) + sqrt((beta + x/sqrt(8)) / n).
inline double compute_eta(long long n, double beta, double confidence_x) {
  if (n < 2) throw invalid_parameter("compute_eta: n must be >= 2");
  if (!(beta > 0.0)) throw invalid_parameter("compute_eta: beta must be positive");
  if (!(confidence_x >= 0.0)) throw invalid_parameter("compute_eta: confidence must be >= 0");
  const double nn = static_cast<double>(n);
  return 2.0 * std::sqrt(beta * std::log(nn) / nn) +
         std::sqrt((beta + confidence_x / std::sqrt(8.0)) / nn);
}

struct ProofConstants {
  double epsilon_net = 0.0;  ///< radius of the net over the dictionaries
  double tau = 0.0;
  double gamma = 0.0;        ///< tau / sqrt(8), the concentration level
  double log_covering = 0.0; ///< md log(3/epsilon_net)
  double hoeffding_tail = 0.0;
  /// |N_eps * tail - 2e^{-x}| / 2e^{-x}, evaluated in log space.
  double identity_rel_error = 0.0;
};

/// Net radius and concentration level of the union-bound argument:
///   eps   = (1/(2L)) sqrt(beta log n / n),
///   tau   = sqrt((md log(3/eps) + x) / n),   gamma = tau / sqrt(8),
/// so that (3/eps)^{md} * 2 exp(-n tau^2) = 2 exp(-x).
inline ProofConstants proof_constants(long long n, long long m, long long d, double L,
                                      double confidence_x) {
  const double md = detail::check_dims(m, d);
  if (n < 2) throw invalid_parameter("proof_constants: n must be >= 2");
  if (!(confidence_x >= 0.0)) throw invalid_parameter("proof_constants: confidence must be >= 0");
  const double beta = compute_beta(m, d, L);
  const double nn = static_cast<double>(n);
  ProofConstants pc;
  pc.epsilon_net = std::sqrt(beta * std::log(nn) / nn) / (2.0 * L);
  if (!(pc.epsilon_net > 0.0 && pc.epsilon_net < 1.0))
    throw infeasible_error("proof_constants: net radius " + std::to_string(pc.epsilon_net) +
                           " is outside (0,1); n = " + std::to_string(n) +
                           " is too small for this (m, d, L)");
  pc.log_covering = md * std::log(3.0 / pc.epsilon_net);
  pc.tau = std::sqrt((pc.log_covering + confidence_x) / nn);
  pc.gamma = pc.tau / std::sqrt(8.0);
  pc.hoeffding_tail = hoeffding_tail(n, pc.tau);
  // log(N * tail) - log(2 e^{-x}) = log_cov + log 2 - n tau^2 - (log 2 - x).
  const double log_gap = pc.log_covering - nn * pc.tau * pc.tau + confidence_x;
  pc.identity_rel_error = std::abs(std::expm1(log_gap));
  return pc;
}

struct BoundInputs {
  long long m = 1;
  long long d = 1;
  Penalty pen{1.0, 1.0, 1.0};
  long long n = 2;
  double confidence_x = 0.0;
  /// Unset: derived as worst_case_L * (1 + 1e-9), strictly above the threshold.
  std::optional<double> L;
};

struct BoundReport {
  double L_X = 0.0;
  double C_X = 0.0;
  double c_x_squared = 0.0;
  double L_worst = 0.0;
  double L = 0.0;
  double beta = 0.0;
  double eta = 0.0;
  double log_covering = 0.0;
  double epsilon_net = 0.0;
  double tau = 0.0;
  double gamma = 0.0;
  double hoeffding_tail = 0.0;
};

inline constexpr double strictness_bump = 1e-9;

inline double effective_L(const BoundInputs& in) {
  if (in.L) {
    if (!(*in.L > 0.0) || !std::isfinite(*in.L)) throw invalid_parameter("L must be positive");
    return *in.L;
  }
  return worst_case_L(in.pen, in.d) * (1.0 + strictness_bump);
}

/// Every constant of the uniform deviation bound for one configuration.
/// L_X, C_X and c_x_squared are filled only when signals are given (0 otherwise).
inline BoundReport full_report(const BoundInputs& in, const SignalSet* X = nullptr) {
  detail::check_dims(in.m, in.d);
  BoundReport r;
  r.L_worst = worst_case_L(in.pen, in.d);
  r.L = effective_L(in);
  r.beta = compute_beta(in.m, in.d, r.L);
  r.eta = compute_eta(in.n, r.beta, in.confidence_x);
  const ProofConstants pc = proof_constants(in.n, in.m, in.d, r.L, in.confidence_x);
  r.epsilon_net = pc.epsilon_net;
  r.log_covering = pc.log_covering;
  r.tau = pc.tau;
  r.gamma = pc.gamma;
  r.hoeffding_tail = pc.hoeffding_tail;
  if (X != nullptr) {
    if (X->m() != in.m) throw dimension_error("full_report: signals do not have dimension m");
    r.L_X = empirical_L(*X, in.pen, in.d);
    r.C_X = empirical_C(*X, in.pen, in.d);
    r.c_x_squared = empirical_C_squared(*X, in.pen, in.d);
  }
  return r;
}

/// Smallest n >= 3 with eta(n) <= target_eta (eta strictly decreases for n >= 3).
/// Doubling search followed by bisection.
inline long long required_samples(double target_eta, long long m, long long d, double L,
                                  double confidence_x) {
  if (!(target_eta > 0.0) || !std::isfinite(target_eta))
    throw invalid_parameter("required_samples: target eta must be positive");
  const double beta = compute_beta(m, d, L);
  auto eta = [&](long long n) { return compute_eta(n, beta, confidence_x); };
  constexpr long long kLimit = 1LL << 62;
  long long lo = 3;
  if (eta(lo) <= target_eta) return lo;
  long long hi = 6;
  while (eta(hi) > target_eta) {
    if (hi >= kLimit)
      throw unreachable_target("required_samples: target eta " + std::to_string(target_eta) +
                               " needs more than 2^62 samples");
    lo = hi;
    hi = hi > kLimit / 2 ? kLimit : hi * 2;
  }
  // Invariant: eta(lo) > target >= eta(hi).
  while (hi - lo > 1) {
    const long long mid = lo + (hi - lo) / 2;
    if (eta(mid) <= target_eta) hi = mid; else lo = mid;
  }
  return hi;
}

}  // namespace dlsc
