#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "dlsc/io.hpp"
#include "test_support.hpp"

namespace dlsc {
namespace {

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "dlsc_test_io";
  std::filesystem::create_directories(dir);
  return dir / name;
}

TEST(FormatDouble, RoundTripsExactly) {
  Rng rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    EXPECT_EQ(parse_double(format_double(v), "v"), v);
  }
  for (double v : {0.0, -0.0, 1.0 / 3.0, std::numeric_limits<double>::min(),
                   std::numeric_limits<double>::max(), 5e-324})
    EXPECT_EQ(parse_double(format_double(v), "v"), v);
}

TEST(ParseDouble, RejectsGarbage) {
  EXPECT_THROW(parse_double("", "x"), format_error);
  EXPECT_THROW(parse_double("1.5abc", "x"), format_error);
  EXPECT_THROW(parse_double("one", "x"), format_error);
  EXPECT_DOUBLE_EQ(parse_double("  2.5 \r", "x"), 2.5);
}

TEST(MatrixCsv, RoundTrip) {
  Rng rng(2);
  const Matrix M = Matrix::NullaryExpr(3, 5, [&]() { return gaussian_vector(1, rng)[0]; });
  const auto path = temp_file("m.csv");
  write_matrix_csv(path, M);
  EXPECT_EQ(read_matrix_csv(path), M);
}

TEST(MatrixCsv, Layout) {
  Matrix M(2, 3);
  M << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(matrix_to_csv(M), "1,2,3\n4,5,6\n");
  EXPECT_EQ(matrix_from_csv("1,2,3\n\n4,5,6\n", "t"), M);
}

TEST(MatrixCsv, Errors) {
  EXPECT_THROW(matrix_from_csv("1,2\n3\n", "t"), format_error);
  EXPECT_THROW(matrix_from_csv("", "t"), format_error);
  EXPECT_THROW(matrix_from_csv("1,x\n", "t"), format_error);
  EXPECT_THROW(read_matrix_csv("/nonexistent/dir/file.csv"), io_error);
  EXPECT_THROW(write_matrix_csv("/nonexistent/dir/file.csv", Matrix::Zero(1, 1)), io_error);
}

TEST(Json, PenaltyAndConfigs) {
  const Penalty pen = penalty_from_json(json::parse(R"({"p":0.5,"q":1,"lambda":2})"));
  EXPECT_EQ(pen, Penalty(0.5, 1, 2));
  EXPECT_EQ(penalty_from_json(to_json(pen)), pen);
  EXPECT_THROW(penalty_from_json(json::parse(R"({"p":0})")), invalid_parameter);
  EXPECT_THROW(penalty_from_json(json::parse(R"({"p":1,"r":2})")), format_error);
  EXPECT_THROW(penalty_from_json(json::parse(R"({"p":"one"})")), format_error);

  LearnConfig lc;
  lc.outer_iters = 7;
  lc.init_mode = InitMode::random_atoms;
  lc.seed = 12345678901234ULL;
  lc.coding.restarts = 3;
  lc.coding.nonseparable = NonseparableMethod::smoothing;
  const LearnConfig back = learn_config_from_json(to_json(lc));
  EXPECT_EQ(back.outer_iters, 7);
  EXPECT_EQ(back.init_mode, InitMode::random_atoms);
  EXPECT_EQ(back.seed, lc.seed);
  EXPECT_EQ(back.coding.restarts, 3);
  EXPECT_EQ(back.coding.nonseparable, NonseparableMethod::smoothing);
  EXPECT_THROW(learn_config_from_json(json::parse(R"({"outer_iters":1.5})")), format_error);
  EXPECT_THROW(learn_config_from_json(json::parse(R"({"outer_iters":0})")), invalid_parameter);
  EXPECT_THROW(learn_config_from_json(json::parse(R"({"seed":-1})")), format_error);
  EXPECT_THROW(solver_config_from_json(json::parse(R"({"nonseparable":"magic"})")), format_error);
}

TEST(Json, BoundReportFields) {
  BoundInputs in;
  in.m = 16;
  in.d = 32;
  in.pen = Penalty(0.5, 1, 1);
  in.n = 1000000;
  const json j = to_json(full_report(in));
  for (const char* key : {"L_X", "C_X", "c_x_squared", "L_worst", "L", "beta", "eta", "log_covering",
                          "epsilon_net", "tau", "gamma", "hoeffding_tail"}) {
    ASSERT_TRUE(j.contains(key)) << key;
    EXPECT_TRUE(j[key].is_number()) << key;
    EXPECT_GE(j[key].get<double>(), 0.0) << key;
  }
}

}  // namespace
}  // namespace dlsc
