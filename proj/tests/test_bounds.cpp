#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dlsc/bounds.hpp"
#include "dlsc/sparse_coding.hpp"
#include "test_support.hpp"

namespace dlsc {
namespace {

// Reference values below were computed with 40-digit mpmath evaluations of
// the closed forms.
constexpr double kBeta16x32 = 136.85331580851376995;  // 64 log(3 sqrt 8)
constexpr double kEta16x32 = 0.098662756591196228962;  // n = 1e6, x = 0
constexpr double kEps16x32 = 0.043482162198365217539;

SignalSet signals_with_norms(std::initializer_list<double> norms, Eigen::Index m, std::uint64_t seed) {
  Rng rng(seed);
  Matrix X(m, static_cast<Eigen::Index>(norms.size()));
  Eigen::Index i = 0;
  for (double r : norms) X.col(i++) = sphere_point(m, rng) * r;
  return SignalSet(X);
}

TEST(EmpiricalL, Examples) {
  EXPECT_DOUBLE_EQ(empirical_L(test::sphere_signals(5, 7, 1), Penalty(0.5, 1, 1), 9), 0.5);
  EXPECT_EQ(empirical_L(SignalSet(Matrix::Zero(3, 4)), Penalty(2, 2, 2), 4), 0.0);
  EXPECT_NEAR(empirical_L(signals_with_norms({1.0, 0.5}, 3, 2), Penalty(2, 2, 2), 4),
              1.7677669529663688110, 1e-14);
}

TEST(EmpiricalC, Examples) {
  EXPECT_DOUBLE_EQ(empirical_C(test::sphere_signals(5, 7, 1), Penalty(0.5, 1, 1), 9), 0.25);
  EXPECT_EQ(empirical_C(SignalSet(Matrix::Zero(3, 4)), Penalty(2, 2, 2), 4), 0.0);
  for (long long d : {1, 5, 40})
    EXPECT_NEAR(empirical_C(test::sphere_signals(3, 1, 3), Penalty(1, 2, 3), d),
                1.0606601717798212866, 1e-14);
}

TEST(EmpiricalC, SquaredVariant) {
  // Unit signals, p <= 1, q = 1, lambda = 1: radius 1/2 per sample.
  EXPECT_DOUBLE_EQ(empirical_C_squared(test::sphere_signals(4, 3, 5), Penalty(0.5, 1, 1), 6), 0.125);
}

TEST(WorstCaseL, Examples) {
  for (double p : {0.1, 0.5, 0.99}) EXPECT_DOUBLE_EQ(worst_case_L(Penalty(p, 1, 1), 50), 0.5);
  EXPECT_DOUBLE_EQ(worst_case_L(Penalty(2, 1, 1), 9), 1.5);
  EXPECT_DOUBLE_EQ(worst_case_L(Penalty(1.7, 0.6, 2), 9), 2.0 * worst_case_L(Penalty(1.7, 0.6, 1), 9));
}

TEST(WorstCaseL, DominatesEmpiricalL) {
  Rng rng(8);
  std::uniform_real_distribution<double> u(0.2, 3.0), r(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const Penalty pen(u(rng), u(rng), u(rng));
    const long long d = 1 + trial % 20;
    Matrix X(4, 10);
    for (Eigen::Index i = 0; i < 10; ++i) X.col(i) = sphere_point(4, rng) * r(rng);
    if (trial % 5 == 0) X.col(0) = sphere_point(4, rng);
    EXPECT_LE(empirical_L(SignalSet(X), pen, d), worst_case_L(pen, d) * (1.0 + 1e-14));
  }
}

TEST(LogCoveringNumber, Examples) {
  EXPECT_NEAR(log_covering_number(4, 6, 0.3), 55.262042231857096416, 1e-12);
  EXPECT_NEAR(log_covering_number(1, 1, 0.5), 1.7917594692280550008, 1e-15);
  EXPECT_NEAR(log_covering_number(3, 5, 1.0 - 1e-12), 15.0 * std::log(3.0), 1e-10);
  EXPECT_THROW(log_covering_number(2, 2, 1.0), invalid_parameter);
  EXPECT_THROW(log_covering_number(2, 2, 0.0), invalid_parameter);
  EXPECT_LE(log_covering_number_tight(4, 6, 0.3), log_covering_number(4, 6, 0.3));
}

TEST(HoeffdingTail, Examples) {
  EXPECT_EQ(hoeffding_tail(10, 0.0), 2.0);
  EXPECT_NEAR(hoeffding_tail(1000, 0.1), 9.0799859524969703071e-5, 1e-18);
  for (long long n : {5, 50, 123}) {
    const double a = hoeffding_tail(n, 0.17);
    EXPECT_NEAR(hoeffding_tail(2 * n, 0.17), a * a / 2.0, 1e-15);
  }
  EXPECT_THROW(hoeffding_tail(10, -0.1), invalid_parameter);
}

TEST(ComputeBeta, Examples) {
  EXPECT_NEAR(compute_beta(16, 32, 0.5), kBeta16x32, 1e-11);
  // Example configuration: md/8 log(3 sqrt 8).
  EXPECT_NEAR(compute_beta(8, 16, 0.5), 16.0 * std::log(3.0 * std::sqrt(8.0)), 1e-12);
  EXPECT_DOUBLE_EQ(compute_beta(4, 6, 0.1), 3.0);  // log(6 sqrt 8 * 0.1) < 1 is clamped
  EXPECT_THROW(compute_beta(4, 6, 0.0), invalid_parameter);
}

TEST(ComputeBeta, FloorIsMdOverEight) {
  Rng rng(9);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  for (int trial = 0; trial < 200; ++trial) {
    const long long m = 1 + trial % 13, d = 1 + trial % 7;
    EXPECT_GE(compute_beta(m, d, std::exp(u(rng))), static_cast<double>(m * d) / 8.0);
  }
}

TEST(ComputeEta, Examples) {
  const double beta = 2.5;
  EXPECT_DOUBLE_EQ(compute_eta(3, beta, 0.0),
                   2.0 * std::sqrt(beta * std::log(3.0) / 3.0) + std::sqrt(beta / 3.0));
  EXPECT_NEAR(compute_eta(1000000, kBeta16x32, 0.0), kEta16x32, 1e-15);
  EXPECT_THROW(compute_eta(1, beta, 0.0), invalid_parameter);
  EXPECT_NO_THROW(compute_eta(2, beta, 0.0));
}

TEST(ComputeEta, DecreasingInN) {
  for (double beta : {0.125, 1.0, 53.3, 1e4}) {
    for (double x : {0.0, 1.0, 20.0}) {
      for (long long n = 3; n < (1LL << 40); n *= 2) {
        EXPECT_LT(compute_eta(2 * n, beta, x), compute_eta(n, beta, x));
        EXPECT_LT(compute_eta(n + 1, beta, x), compute_eta(n, beta, x));
      }
    }
  }
}

TEST(ProofConstants, Examples) {
  const ProofConstants pc = proof_constants(1000000, 16, 32, 0.5, 0.0);
  EXPECT_NEAR(pc.epsilon_net, kEps16x32, 1e-15);
  EXPECT_NEAR(pc.gamma, pc.tau / std::sqrt(8.0), 1e-16);
  EXPECT_LE(pc.identity_rel_error, 1e-10);

  const ProofConstants hi_x = proof_constants(1000000, 16, 32, 0.5, 5.0);
  EXPECT_EQ(hi_x.epsilon_net, pc.epsilon_net);
  EXPECT_GT(hi_x.tau, pc.tau);
}

TEST(ProofConstants, IdentityHoldsOnRandomInputs) {
  Rng rng(10);
  std::uniform_real_distribution<double> ux(0.0, 30.0), uL(0.3, 40.0);
  int checked = 0;
  while (checked < 500) {
    const long long m = 1 + static_cast<long long>(rng() % 32);
    const long long d = 1 + static_cast<long long>(rng() % 64);
    const long long n = 3 + static_cast<long long>(rng() % 100000000);
    const double L = uL(rng), x = ux(rng);
    ProofConstants pc;
    try {
      pc = proof_constants(n, m, d, L, x);
    } catch (const infeasible_error&) {
      continue;
    }
    // N_eps * Gamma bound = 2e^{-x}, compared directly in linear space while
    // both factors are normal doubles.
    const double cover = std::exp(pc.log_covering);
    const double tail = hoeffding_tail(n, pc.tau);
    if (std::isfinite(cover) && tail > 1e-290) {
      const double lhs = cover * tail;
      EXPECT_NEAR(lhs / (2.0 * std::exp(-x)), 1.0, 1e-10);
    }
    EXPECT_LE(pc.identity_rel_error, 1e-10);
    ++checked;
  }
}

TEST(ProofConstants, RejectsTooFewSamples) {
  // eps = sqrt(beta log n / n) / (2L) >= 1 for tiny n and small L.
  EXPECT_THROW(proof_constants(3, 16, 32, 0.5, 0.0), infeasible_error);
}

TEST(FullReport, ExampleConfiguration) {
  for (double p : {0.3, 0.5, 0.9}) {
    BoundInputs in;
    in.m = 16;
    in.d = 32;
    in.pen = Penalty(p, 1, 1);
    in.n = 1000000;
    const BoundReport r = full_report(in);
    EXPECT_NEAR(r.beta / kBeta16x32 - 1.0, 0.0, 1e-6);
    EXPECT_GT(r.L, r.L_worst);
    EXPECT_DOUBLE_EQ(r.L_worst, 0.5);
    EXPECT_EQ(r.eta, compute_eta(in.n, compute_beta(in.m, in.d, r.L), in.confidence_x));
    EXPECT_NEAR(r.eta, kEta16x32, 1e-9);
  }
}

TEST(FullReport, WithSignals) {
  BoundInputs in;
  in.m = 3;
  in.d = 5;
  in.pen = Penalty(1, 1, 2);
  in.n = 100000;
  const SignalSet zeros(Matrix::Zero(3, 4));
  const BoundReport r = full_report(in, &zeros);
  EXPECT_EQ(r.L_X, 0.0);
  EXPECT_EQ(r.C_X, 0.0);
  EXPECT_DOUBLE_EQ(r.L_worst, 1.0);
  const SignalSet unit = test::sphere_signals(3, 4, 4);
  const BoundReport u = full_report(in, &unit);
  EXPECT_DOUBLE_EQ(u.L_X, 1.0);
  EXPECT_DOUBLE_EQ(u.C_X, 0.5);
  EXPECT_DOUBLE_EQ(u.c_x_squared, 0.5);
}

TEST(FullReport, SuppliedL) {
  BoundInputs in;
  in.m = 4;
  in.d = 4;
  in.pen = Penalty(1, 1, 1);
  in.n = 5000;
  in.L = 3.0;
  EXPECT_EQ(full_report(in).L, 3.0);
  EXPECT_EQ(full_report(in).beta, compute_beta(4, 4, 3.0));
  in.L = -1.0;
  EXPECT_THROW(full_report(in), invalid_parameter);
}

TEST(RequiredSamples, Examples) {
  // Brute-force scan (Python, linear in n) gives 971648 for this target.
  EXPECT_EQ(required_samples(0.1, 16, 32, 0.5, 0.0), 971648);
  const double beta = compute_beta(16, 32, 0.5);
  EXPECT_LE(compute_eta(971648, beta, 0.0), 0.1);
  EXPECT_GT(compute_eta(971647, beta, 0.0), 0.1);
  EXPECT_EQ(required_samples(10.0, 2, 3, 0.5, 0.0), 3);
  EXPECT_THROW(required_samples(0.0, 2, 3, 0.5, 0.0), invalid_parameter);
  EXPECT_THROW(required_samples(1e-12, 64, 64, 100.0, 0.0), unreachable_target);
}

TEST(RequiredSamples, RoundTrip) {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const long long m = 1 + static_cast<long long>(rng() % 20);
    const long long d = 1 + static_cast<long long>(rng() % 30);
    const double L = 0.1 + static_cast<double>(rng() % 1000) / 100.0;
    const double x = static_cast<double>(rng() % 10);
    const long long n0 = 3 + static_cast<long long>(rng() % 10000000);
    const double beta = compute_beta(m, d, L);
    const double target = compute_eta(n0, beta, x);
    const long long n = required_samples(target, m, d, L, x);
    EXPECT_EQ(n, n0);
    EXPECT_LE(compute_eta(n, beta, x), target);
    if (n > 3) EXPECT_GT(compute_eta(n - 1, beta, x), target);
  }
}

// Lipschitz property of F_X in the 1->2 metric, with F_X from the grid oracle.
TEST(EmpiricalL, LipschitzOnTinyInstances) {
  Rng rng(13);
  const Penalty pen(1, 1, 3);
  const SignalSet X = test::sphere_signals(2, 4, 14, 0.9);
  auto F = [&](const Dictionary& D) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < X.n(); ++i) acc += brute_force_code(X.signal(i), D, pen, 1001).objective;
    return acc / static_cast<double>(X.n());
  };
  const double L = empirical_L(X, pen, 2);
  for (int trial = 0; trial < 100; ++trial) {
    const Dictionary a = random_dictionary(2, 2, rng());
    const Dictionary b = trial % 2 ? random_dictionary(2, 2, rng())
                                   : Dictionary::normalized(a.atoms() + 0.05 * Matrix::Random(2, 2));
    EXPECT_LE(std::abs(F(a) - F(b)), L * dict_distance(a, b) * (1.0 + 1e-2) + 1e-15);
  }
}

}  // namespace
}  // namespace dlsc
