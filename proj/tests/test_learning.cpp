#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dlsc/learning.hpp"
#include "test_support.hpp"

namespace dlsc {
namespace {

void expect_unit_atoms(const Dictionary& D, double tol) {
  for (Eigen::Index j = 0; j < D.d(); ++j) EXPECT_NEAR(D.atoms().col(j).norm(), 1.0, tol);
}

TEST(ProjectAtoms, Examples) {
  Matrix M(3, 3);
  M << 0, 1, 0,
       3, 0, 0,
       4, 0, 0;
  const Dictionary D = project_atoms(M);
  EXPECT_NEAR(D.atoms()(1, 0), 0.6, 1e-15);
  EXPECT_NEAR(D.atoms()(2, 0), 0.8, 1e-15);
  EXPECT_EQ(D.atoms().col(1), M.col(1));
  // zero column at index 2 -> e_3
  EXPECT_EQ(D.atoms().col(2), test::vec({0, 0, 1}));
}

TEST(ProjectAtoms, IdempotentAndRejectsNonFinite) {
  const Dictionary D = random_dictionary(5, 7, 3);
  EXPECT_EQ(project_atoms(D.atoms()).atoms(), D.atoms());
  Matrix M = D.atoms();
  M(0, 0) = std::nan("");
  EXPECT_THROW(project_atoms(M), invalid_parameter);
}

TEST(DictUpdate, ZeroCoefficientsLeaveDictionary) {
  const SignalSet X = test::sphere_signals(4, 10, 1, 0.7);
  const Dictionary D0 = random_dictionary(4, 6, 2);
  const Dictionary D = dict_update(X, CoeffMatrix(Matrix::Zero(6, 10)), D0, LearnConfig{});
  EXPECT_EQ(D.atoms(), D0.atoms());
}

TEST(DictUpdate, SingleAtomMovesTowardSignal) {
  Matrix x(2, 1);
  x << 1, 0;
  Matrix d0(2, 1);
  d0 << 0, 1;
  const SignalSet X(x);
  const CoeffMatrix A(Matrix::Ones(1, 1));
  const Dictionary D0(d0);
  const Dictionary D = dict_update(X, A, D0, LearnConfig{});
  EXPECT_GT(D.atoms()(0, 0), 0.0);
  EXPECT_LT(D.atoms()(1, 0), 1.0);
  EXPECT_LT(detail::fit_term(x, D.atoms(), A.coeffs()), detail::fit_term(x, d0, A.coeffs()));
  expect_unit_atoms(D, 1e-12);
}

TEST(DictUpdate, ExactFitIsStationary) {
  const Dictionary D0 = random_dictionary(3, 4, 5);
  Rng rng(6);
  Matrix A = Matrix::Zero(4, 8);
  for (Eigen::Index i = 0; i < 8; ++i) A(i % 4, i) = 0.5;
  const SignalSet X(D0.atoms() * A);
  const LearnConfig cfg;
  const Dictionary D = dict_update(X, CoeffMatrix(A), D0, cfg);
  EXPECT_LE((D.atoms() - D0.atoms()).norm(), 1e-9);
}

TEST(DictUpdate, NeverIncreasesFit) {
  Rng rng(7);
  std::normal_distribution<double> g(0.0, 0.3);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index m = 2 + trial % 4, d = 1 + trial % 6, n = 5 + trial;
    const SignalSet X = test::sphere_signals(m, n, rng(), 0.9);
    Matrix A(d, n);
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = g(rng);
    const Dictionary D0 = random_dictionary(m, d, rng());
    const Dictionary D = dict_update(X, CoeffMatrix(A), D0, LearnConfig{});
    EXPECT_LE(detail::fit_term(X.signals(), D.atoms(), A),
              detail::fit_term(X.signals(), D0.atoms(), A) + 1e-12);
    expect_unit_atoms(D, 1e-12);
  }
}

TEST(DictUpdate, ShapeMismatch) {
  const SignalSet X = test::sphere_signals(3, 5, 1);
  EXPECT_THROW(dict_update(X, CoeffMatrix(Matrix::Zero(2, 4)), random_dictionary(3, 2, 1), {}),
               dimension_error);
}

TEST(Learn, ZeroDataGivesZeroTrace) {
  const SignalSet X(Matrix::Zero(4, 6));
  const LearnTrace tr = learn(X, 4, 5, Penalty(1, 1, 1));
  ASSERT_FALSE(tr.objectives.empty());
  for (double v : tr.objectives) EXPECT_EQ(v, 0.0);
  expect_unit_atoms(tr.final_dict, 1e-12);
}

TEST(Learn, OneSparseSyntheticData) {
  const Eigen::Index m = 4;
  const Dictionary Dstar = random_dictionary(m, m, 11);
  Rng rng(12);
  Matrix X(m, 40);
  for (Eigen::Index i = 0; i < 40; ++i)
    X.col(i) = Dstar.atoms().col(static_cast<Eigen::Index>(rng() % m)) * ((rng() % 2) ? 0.9 : -0.9);
  LearnConfig cfg;
  cfg.outer_iters = 20;
  const LearnTrace tr = learn(SignalSet(X), m, m, Penalty(1, 1, 20), cfg);
  for (std::size_t t = 1; t < tr.objectives.size(); ++t)
    EXPECT_LE(tr.objectives[t], tr.objectives[t - 1] + 1e-8);
  EXPECT_LE(tr.objectives.back(), tr.objectives.front());
}

TEST(Learn, UnitBallSignalsProperties) {
  Rng rng(13);
  Matrix X(8, 50);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index i = 0; i < 50; ++i) X.col(i) = sphere_point(8, rng) * std::pow(u(rng), 1.0 / 8.0);
  const SignalSet S(X);
  const Penalty pen(1, 1, 10);
  LearnConfig cfg;
  cfg.outer_iters = 15;
  const LearnTrace tr = learn(S, 8, 12, pen, cfg);
  for (std::size_t t = 1; t < tr.objectives.size(); ++t)
    EXPECT_LE(tr.objectives[t], tr.objectives[t - 1] + 1e-8);
  EXPECT_LE(tr.objectives.back(), tr.objectives.front());
  expect_unit_atoms(tr.final_dict, 1e-9);
  EXPECT_EQ(tr.rounds, static_cast<int>(tr.objectives.size()));
  // Re-coding at the final dictionary cannot do worse than the trace.
  EXPECT_LE(batch_objective(S, tr.final_dict, pen).F, tr.objectives.back() + 1e-8);
}

TEST(Learn, NonconvexPenaltyMonotone) {
  const SignalSet X = test::sphere_signals(3, 20, 21, 0.8);
  LearnConfig cfg;
  cfg.outer_iters = 6;
  cfg.init_mode = InitMode::random_atoms;
  const LearnTrace tr = learn(X, 3, 4, Penalty(0.5, 0.5, 2), cfg);
  for (std::size_t t = 1; t < tr.objectives.size(); ++t)
    EXPECT_LE(tr.objectives[t], tr.objectives[t - 1] + 1e-8);
  expect_unit_atoms(tr.final_dict, 1e-9);
}

TEST(Learn, DeterministicAndThreadInvariant) {
  const SignalSet X = test::sphere_signals(5, 30, 31, 0.9);
  LearnConfig cfg;
  cfg.outer_iters = 5;
  cfg.seed = 99;
  const LearnTrace a = learn(X, 5, 7, Penalty(1, 1, 5), cfg);
  cfg.threads = 3;
  const LearnTrace b = learn(X, 5, 7, Penalty(1, 1, 5), cfg);
  EXPECT_EQ(a.objectives, b.objectives);
  EXPECT_EQ(a.final_dict.atoms(), b.final_dict.atoms());
  EXPECT_EQ(a.final_coeffs.coeffs(), b.final_coeffs.coeffs());
}

TEST(Learn, RejectsBadInput) {
  const SignalSet X = test::sphere_signals(3, 5, 1);
  EXPECT_THROW(learn(X, 4, 2, Penalty(1, 1, 1)), dimension_error);
  LearnConfig cfg;
  cfg.outer_iters = 0;
  EXPECT_THROW(learn(X, 3, 2, Penalty(1, 1, 1), cfg), invalid_parameter);
  cfg.outer_iters = 1;
  cfg.dict_step_shrink = 1.0;
  EXPECT_THROW(learn(X, 3, 2, Penalty(1, 1, 1), cfg), invalid_parameter);
}

}  // namespace
}  // namespace dlsc
