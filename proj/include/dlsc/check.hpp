#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dlsc/bounds.hpp"
#include "dlsc/core.hpp"
#include "dlsc/sparse_coding.hpp"
#include "dlsc/util.hpp"

namespace dlsc {

struct CheckResult {
  std::string name;
  long long cases = 0;
  long long failures = 0;
  double worst = 0.0;  ///< largest violation margin seen (<= 0 when passing)
  bool passed() const { return failures == 0; }
};

namespace detail {

inline Vector ball_point(Eigen::Index m, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return sphere_point(m, rng) * std::pow(u(rng), 1.0 / static_cast<double>(m));
}

class CheckRecorder {
 public:
  explicit CheckRecorder(std::string name) { r_.name = std::move(name); }
  /// margin <= 0 passes.
  void record(double margin) {
    ++r_.cases;
    if (!(margin <= 0.0)) ++r_.failures;
    if (r_.cases == 1 || margin > r_.worst || std::isnan(margin)) r_.worst = margin;
  }
  CheckResult result() const { return r_; }

 private:
  CheckResult r_;
};

}  // namespace detail

/// Brute-force oracle equivalence on tiny instances: the solver objective is
/// within max(1e-3, 2 * grid error) of the grid minimum.
inline CheckResult check_oracle_equivalence(std::uint64_t seed, int instances, int grid_points) {
  detail::CheckRecorder rec("oracle_equivalence");
  Rng rng(seed);
  std::uniform_real_distribution<double> ul(0.5, 4.0);
  const Penalty protos[] = {Penalty(1, 1, 1), Penalty(2, 2, 1), Penalty(0.5, 0.5, 1)};
  for (int i = 0; i < instances; ++i) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng() % 3);
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 3);
    const Penalty& proto = protos[i % 3];
    const Penalty pen(proto.p(), proto.q(), ul(rng));
    const Dictionary D = random_dictionary(m, d, rng());
    const Vector x = detail::ball_point(m, rng);
    const double w = default_grid_half_width(x, pen, d);
    const double solver = sparse_code(x, D, pen).objective;
    const double oracle = brute_force_code(x, D, pen, w, grid_points).objective;
    const double tol = std::max(1e-3, 2.0 * brute_force_grid_error(x, D, pen, w, grid_points));
    rec.record(std::abs(solver - oracle) - tol);
  }
  return rec.result();
}

/// 0 <= objective <= ||x||^2 / 2 and the l1 coefficient bound.
inline CheckResult check_objective_range(std::uint64_t seed, int instances) {
  detail::CheckRecorder rec("objective_range");
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.3, 2.5);
  for (int i = 0; i < instances; ++i) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng() % 6);
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 8);
    const Penalty pen(u(rng), u(rng), u(rng));
    const Dictionary D = random_dictionary(m, d, rng());
    const Vector x = detail::ball_point(m, rng);
    SolverConfig cfg;
    cfg.restarts = 3;
    const CodingResult r = sparse_code(x, D, pen, cfg);
    const double half = 0.5 * x.squaredNorm();
    const double l1 = r.coeffs.cwiseAbs().sum();
    const double bound = l1_bound_from_penalty(half, pen, d);
    rec.record(std::max({-r.objective, r.objective - half, l1 - bound - 1e-6}));
  }
  return rec.result();
}

/// |F_X(D') - F_X(D)| <= empirical_L * dict_distance(D', D) * (1 + 1e-2)
/// for convex penalties, where the solver is exact to high accuracy.
inline CheckResult check_lipschitz(std::uint64_t seed, int pairs) {
  detail::CheckRecorder rec("empirical_lipschitz");
  Rng rng(seed);
  std::uniform_real_distribution<double> ul(0.5, 3.0), us(0.01, 1.0);
  for (int i = 0; i < pairs; ++i) {
    const Penalty pen(1.0 + (i % 2), 1.0 + (i % 2), ul(rng));
    Matrix X(2, 8);
    for (Eigen::Index k = 0; k < 8; ++k) X.col(k) = detail::ball_point(2, rng);
    const SignalSet S(X);
    const Dictionary D = random_dictionary(2, 2, rng());
    Matrix Mp = D.atoms();
    Mp += us(rng) * Matrix::NullaryExpr(2, 2, [&]() { return gaussian_vector(1, rng)[0]; });
    const Dictionary Dp = Dictionary::normalized(Mp);
    const double lhs = std::abs(batch_objective(S, Dp, pen).F - batch_objective(S, D, pen).F);
    const double rhs = empirical_L(S, pen, 2) * dict_distance(Dp, D) * (1.0 + 1e-2);
    rec.record(lhs - rhs - 1e-12);
  }
  return rec.result();
}

/// empirical_L(X) <= worst_case_L for signals in the unit ball.
inline CheckResult check_worst_case_L(std::uint64_t seed, int instances) {
  detail::CheckRecorder rec("worst_case_L_dominates");
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  for (int i = 0; i < instances; ++i) {
    const Penalty pen(u(rng), u(rng), u(rng));
    const long long d = 1 + static_cast<long long>(rng() % 40);
    Matrix X(3, 5);
    for (Eigen::Index k = 0; k < 5; ++k) X.col(k) = detail::ball_point(3, rng);
    X.col(0).normalize();
    const double worst = worst_case_L(pen, d);
    rec.record(empirical_L(SignalSet(X), pen, d) / worst - 1.0 - 1e-14);
  }
  return rec.result();
}

/// Covering number times the concentration tail equals 2 e^{-x}.
inline CheckResult check_proof_identity(std::uint64_t seed, int instances) {
  detail::CheckRecorder rec("proof_constant_identity");
  Rng rng(seed);
  std::uniform_real_distribution<double> ux(0.0, 20.0), uL(0.3, 20.0);
  while (rec.result().cases < instances) {
    const long long m = 1 + static_cast<long long>(rng() % 32);
    const long long d = 1 + static_cast<long long>(rng() % 64);
    const long long n = 3 + static_cast<long long>(rng() % 100000000);
    try {
      rec.record(proof_constants(n, m, d, uL(rng), ux(rng)).identity_rel_error - 1e-10);
    } catch (const infeasible_error&) {
    }
  }
  return rec.result();
}

/// eta decreasing in n and required_samples inverting it.
inline CheckResult check_sample_size_inversion(std::uint64_t seed, int instances) {
  detail::CheckRecorder rec("sample_size_inversion");
  Rng rng(seed);
  std::uniform_real_distribution<double> ux(0.0, 5.0), ut(-3.0, 0.5);
  for (int i = 0; i < instances; ++i) {
    const long long m = 1 + static_cast<long long>(rng() % 16);
    const long long d = 1 + static_cast<long long>(rng() % 32);
    const double L = 0.5 + static_cast<double>(rng() % 8);
    const double x = ux(rng);
    const double target = std::pow(10.0, ut(rng));
    const long long n = required_samples(target, m, d, L, x);
    const double beta = compute_beta(m, d, L);
    const double at = compute_eta(n, beta, x);
    double margin = at - target;
    if (n > 3) margin = std::max(margin, target - compute_eta(n - 1, beta, x));
    rec.record(margin);
  }
  return rec.result();
}

/// beta at the auto-derived threshold reproduces (md/8) log(3 sqrt 8).
inline CheckResult check_example_beta() {
  detail::CheckRecorder rec("example_beta");
  for (double p : {0.3, 0.5, 0.9}) {
    for (auto [m, d] : {std::pair<long long, long long>{8, 16}, {16, 32}}) {
      BoundInputs in;
      in.m = m;
      in.d = d;
      in.pen = Penalty(p, 1, 1);
      in.n = 1000000;
      const double expect = static_cast<double>(m * d) / 8.0 * std::log(3.0 * std::sqrt(8.0));
      rec.record(std::abs(full_report(in).beta / expect - 1.0) - 1e-6);
    }
  }
  return rec.result();
}

/// The fixed-seed suite behind the `check` subcommand.
inline std::vector<CheckResult> run_self_checks(std::uint64_t seed = 0) {
  return {check_oracle_equivalence(child_seed(seed, 1), 60, 401),
          check_objective_range(child_seed(seed, 2), 1000),
          check_lipschitz(child_seed(seed, 3), 200),
          check_worst_case_L(child_seed(seed, 4), 2000),
          check_proof_identity(child_seed(seed, 5), 500),
          check_sample_size_inversion(child_seed(seed, 6), 200),
          check_example_beta()};
}

}  // namespace dlsc
