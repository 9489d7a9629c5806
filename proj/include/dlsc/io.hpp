#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "dlsc/bounds.hpp"
#include "dlsc/core.hpp"
#include "dlsc/learning.hpp"
#include "dlsc/sparse_coding.hpp"

namespace dlsc {

/// File could not be opened, read or written.
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File content is malformed (a validation failure, not an I/O failure).
class format_error : public invalid_parameter {
 public:
  using invalid_parameter::invalid_parameter;
};

using json = nlohmann::json;

/// Shortest text that reads back to the same double: 17 significant digits.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(std::string_view text, const std::string& what) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size())
    throw format_error(what + ": cannot parse '" + std::string(text) + "' as a number");
  return v;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw io_error("error while reading " + path.string());
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw io_error("error while writing " + path.string());
}

/// Matrix as CSV: one line per row, comma separated, 17 significant digits.
inline std::string matrix_to_csv(const Matrix& M) {
  std::string s;
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j > 0) s += ',';
      s += format_double(M(i, j));
    }
    s += '\n';
  }
  return s;
}

/// Parses a numeric CSV matrix. Blank lines are ignored; every row must have
/// the same number of fields. `what` prefixes error messages.
inline Matrix matrix_from_csv(const std::string& text, const std::string& what) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    for (std::string_view field : split_csv_line(line))
      row.push_back(parse_double(field, what + " line " + std::to_string(lineno)));
    if (!rows.empty() && row.size() != rows.front().size())
      throw format_error(what + " line " + std::to_string(lineno) + ": expected " +
                         std::to_string(rows.front().size()) + " fields, got " +
                         std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw format_error(what + ": no data");
  Matrix M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return M;
}

inline Matrix read_matrix_csv(const std::filesystem::path& path) {
  return matrix_from_csv(read_text_file(path), path.string());
}

inline void write_matrix_csv(const std::filesystem::path& path, const Matrix& M) {
  write_text_file(path, matrix_to_csv(M));
}

// ---- JSON views of library types -------------------------------------------

inline json to_json(const Penalty& pen) {
  return {{"p", pen.p()}, {"q", pen.q()}, {"lambda", pen.lambda()}};
}

inline json to_json(const BoundReport& r) {
  json j;
  j["L_X"] = r.L_X;
  j["C_X"] = r.C_X;
  j["c_x_squared"] = r.c_x_squared;
  j["L_worst"] = r.L_worst;
  j["L"] = r.L;
  j["beta"] = r.beta;
  j["eta"] = r.eta;
  j["log_covering"] = r.log_covering;
  j["epsilon_net"] = r.epsilon_net;
  j["tau"] = r.tau;
  j["gamma"] = r.gamma;
  j["hoeffding_tail"] = r.hoeffding_tail;
  j["log_base"] = "e";
  return j;
}

inline json to_json(const CodingResult& r) {
  json j;
  j["coeffs"] = std::vector<double>(r.coeffs.data(), r.coeffs.data() + r.coeffs.size());
  j["objective"] = r.objective;
  j["residual_norm"] = r.residual_norm;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  return j;
}

namespace detail {

/// Reads typed fields out of a JSON object and rejects keys nobody asked for.
class FieldReader {
 public:
  FieldReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw format_error(where_ + ": expected a JSON object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.emplace_back(key);
    if (!j_.contains(key)) return;
    try {
      const json& v = j_.at(key);
      if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer() && !v.is_number_unsigned())
          throw format_error("");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_integer() && v.get<long long>() < 0) throw format_error("");
        }
      }
      out = v.get<T>();
    } catch (const std::exception&) {
      throw format_error(where_ + "." + key + ": wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.emplace_back(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      bool known = false;
      for (const auto& k : seen_) known = known || k == it.key();
      if (!known) throw format_error(where_ + ": unknown field '" + it.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::vector<std::string> seen_;
};

}  // namespace detail

inline Penalty penalty_from_json(const json& j, const std::string& where = "pen") {
  detail::FieldReader r(j, where);
  double p = 1.0, q = 1.0, lambda = 1.0;
  r.get("p", p);
  r.get("q", q);
  r.get("lambda", lambda);
  r.finish();
  return Penalty(p, q, lambda);
}

inline json to_json(const SolverConfig& c) {
  return {{"max_iters", c.max_iters},       {"step_shrink", c.step_shrink},
          {"grad_tol", c.grad_tol},         {"obj_tol", c.obj_tol},
          {"restarts", c.restarts},         {"smoothing_eps", c.smoothing_eps},
          {"seed", c.seed},
          {"nonseparable", c.nonseparable == NonseparableMethod::smoothing ? "smoothing"
                                                                           : "multiplier"}};
}

inline SolverConfig solver_config_from_json(const json& j, const std::string& where = "coding") {
  detail::FieldReader r(j, where);
  SolverConfig c;
  r.get("max_iters", c.max_iters);
  r.get("step_shrink", c.step_shrink);
  r.get("grad_tol", c.grad_tol);
  r.get("obj_tol", c.obj_tol);
  r.get("restarts", c.restarts);
  r.get("smoothing_eps", c.smoothing_eps);
  r.get("seed", c.seed);
  std::string method = c.nonseparable == NonseparableMethod::smoothing ? "smoothing" : "multiplier";
  r.get("nonseparable", method);
  if (method == "smoothing") c.nonseparable = NonseparableMethod::smoothing;
  else if (method == "multiplier") c.nonseparable = NonseparableMethod::multiplier;
  else throw format_error(where + ".nonseparable: expected 'multiplier' or 'smoothing'");
  r.finish();
  c.validate();
  return c;
}

inline json to_json(const LearnConfig& c) {
  return {{"outer_iters", c.outer_iters},
          {"dict_step_shrink", c.dict_step_shrink},
          {"dict_grad_tol", c.dict_grad_tol},
          {"dict_inner_iters", c.dict_inner_iters},
          {"init_mode", c.init_mode == InitMode::random_atoms ? "random-atoms" : "data-atoms"},
          {"seed", c.seed},
          {"coding", to_json(c.coding)}};
}

inline LearnConfig learn_config_from_json(const json& j, const std::string& where = "learn") {
  detail::FieldReader r(j, where);
  LearnConfig c;
  r.get("outer_iters", c.outer_iters);
  r.get("dict_step_shrink", c.dict_step_shrink);
  r.get("dict_grad_tol", c.dict_grad_tol);
  r.get("dict_inner_iters", c.dict_inner_iters);
  std::string mode = "data-atoms";
  r.get("init_mode", mode);
  if (mode == "data-atoms") c.init_mode = InitMode::data_atoms;
  else if (mode == "random-atoms") c.init_mode = InitMode::random_atoms;
  else throw format_error(where + ".init_mode: expected 'data-atoms' or 'random-atoms'");
  r.get("seed", c.seed);
  if (const json* coding = r.child("coding")) c.coding = solver_config_from_json(*coding, where + ".coding");
  r.finish();
  c.validate();
  return c;
}

}  // namespace dlsc
