#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dlsc/core.hpp"
#include "dlsc/util.hpp"
#include "test_support.hpp"

namespace dlsc {
namespace {

using test::vec;

TEST(LpNorm, Examples) {
  EXPECT_DOUBLE_EQ(lp_norm(vec({3, 4}), 2.0), 5.0);
  EXPECT_DOUBLE_EQ(lp_norm(vec({1, 1, 1, 1}), 1.0), 4.0);
  EXPECT_NEAR(lp_norm(vec({1, 1}), 0.5), 4.0, 1e-14);
  EXPECT_EQ(lp_norm(Vector::Zero(5), 0.3), 0.0);
}

TEST(LpNorm, RejectsNonpositiveP) {
  EXPECT_THROW(lp_norm(vec({1, 2}), 0.0), invalid_parameter);
  EXPECT_THROW(lp_norm(vec({1, 2}), -1.0), invalid_parameter);
}

TEST(LpNorm, AbsolutelyHomogeneous) {
  Rng rng(7);
  std::uniform_real_distribution<double> c(-5.0, 5.0);
  for (double p : {0.3, 0.5, 1.0, 1.5, 2.0, 4.0}) {
    for (int trial = 0; trial < 50; ++trial) {
      const Vector v = gaussian_vector(6, rng);
      const double s = c(rng);
      EXPECT_NEAR(lp_norm(s * v, p), std::abs(s) * lp_norm(v, p),
                  1e-12 * (1.0 + std::abs(s) * lp_norm(v, p)));
    }
  }
}

TEST(Penalty, Eval) {
  EXPECT_DOUBLE_EQ(penalty_eval(vec({3, 4}), Penalty(2, 2, 1)), 25.0);
  EXPECT_DOUBLE_EQ(penalty_eval(vec({3, 4}), Penalty(2, 1, 5)), 1.0);
  EXPECT_EQ(penalty_eval(Vector::Zero(3), Penalty(0.5, 0.7, 2)), 0.0);
  EXPECT_EQ(penalty_eval(Vector::Zero(3), Penalty(1.5, 1.5, 2)), 0.0);
}

TEST(Penalty, RejectsInvalidParameters) {
  EXPECT_THROW(Penalty(0, 1, 1), invalid_parameter);
  EXPECT_THROW(Penalty(1, -1, 1), invalid_parameter);
  EXPECT_THROW(Penalty(1, 1, 0), invalid_parameter);
  EXPECT_THROW(Penalty(std::nan(""), 1, 1), invalid_parameter);
}

TEST(L1Factor, Examples) {
  EXPECT_EQ(l1_factor(0.5, 100), 1.0);
  EXPECT_DOUBLE_EQ(l1_factor(2.0, 4), 2.0);
  EXPECT_EQ(l1_factor(1.0, 7), 1.0);
}

TEST(L1BoundFromPenalty, Examples) {
  EXPECT_EQ(l1_bound_from_penalty(0.0, Penalty(0.7, 3, 2), 5), 0.0);
  EXPECT_DOUBLE_EQ(l1_bound_from_penalty(0.5, Penalty(0.5, 1, 1), 10), 0.5);
  EXPECT_DOUBLE_EQ(l1_bound_from_penalty(4.0, Penalty(2, 2, 3), 4), 12.0);
}

TEST(HolderInequality, L1FromLp) {
  Rng rng(11);
  for (double p : {0.3, 0.5, 1.0, 1.5, 2.0, 4.0}) {
    for (Eigen::Index dim : {1, 2, 5, 17}) {
      for (int trial = 0; trial < 40; ++trial) {
        Vector v = gaussian_vector(dim, rng);
        if (trial % 4 == 0) v[0] = 0.0;
        const double l1 = v.cwiseAbs().sum();
        EXPECT_LE(l1, l1_factor(p, dim) * lp_norm(v, p) * (1.0 + 1e-12)) << "p=" << p;
      }
    }
  }
}

TEST(HolderInequality, L1FromPenaltyLevel) {
  Rng rng(12);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  for (int trial = 0; trial < 500; ++trial) {
    const Penalty pen(u(rng), u(rng), u(rng));
    const Eigen::Index dim = 1 + trial % 9;
    const Vector v = gaussian_vector(dim, rng);
    const double t = penalty_eval(v, pen);
    EXPECT_LE(v.cwiseAbs().sum(), l1_bound_from_penalty(t, pen, dim) * (1.0 + 1e-12));
  }
}

TEST(Dictionary, RejectsNonUnitColumns) {
  Matrix M(2, 2);
  M << 1, 0, 0, 2;
  EXPECT_THROW(Dictionary{M}, invalid_parameter);
  EXPECT_THROW(Dictionary{Matrix(0, 3)}, dimension_error);
  M(1, 1) = 1.0;
  EXPECT_NO_THROW(Dictionary{M});
}

TEST(Dictionary, NormalizedFallsBackToBasis) {
  Matrix M = Matrix::Zero(3, 4);
  M(1, 0) = 3.0;
  M(2, 0) = 4.0;
  const Dictionary D = Dictionary::normalized(M);
  EXPECT_NEAR(D.atoms()(1, 0), 0.6, 1e-15);
  EXPECT_NEAR(D.atoms()(2, 0), 0.8, 1e-15);
  EXPECT_EQ(D.atoms()(1, 1), 1.0);  // e_{1 mod 3}
  EXPECT_EQ(D.atoms()(2, 2), 1.0);
  EXPECT_EQ(D.atoms()(0, 3), 1.0);
}

TEST(SignalSet, BallMembership) {
  Matrix X(2, 2);
  X << 1, 0.5, 0, 0.5;
  EXPECT_NO_THROW(SignalSet{X});
  X(0, 0) = 1.0 + 1e-9;
  EXPECT_THROW(SignalSet{X}, invalid_parameter);
  X(0, 0) = std::nan("");
  EXPECT_THROW(SignalSet{X}, invalid_parameter);
}

TEST(DictDistance, Examples) {
  const Dictionary I(Matrix::Identity(2, 2));
  EXPECT_EQ(dict_distance(I, I), 0.0);
  EXPECT_DOUBLE_EQ(dict_distance(I, Dictionary(-Matrix::Identity(2, 2))), 2.0);
  Matrix swapped(2, 2);
  swapped << 0, 1, 1, 0;
  EXPECT_DOUBLE_EQ(dict_distance(I, Dictionary(swapped)), std::sqrt(2.0));
  EXPECT_THROW(dict_distance(I, Dictionary(Matrix::Identity(3, 3))), dimension_error);
}

TEST(DictDistance, MetricAxioms) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_dictionary(4, 3, rng());
    const auto b = random_dictionary(4, 3, rng());
    const auto c = random_dictionary(4, 3, rng());
    EXPECT_DOUBLE_EQ(dict_distance(a, b), dict_distance(b, a));
    EXPECT_LE(dict_distance(a, c), dict_distance(a, b) + dict_distance(b, c) + 1e-15);
  }
}

}  // namespace
}  // namespace dlsc
