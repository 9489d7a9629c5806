#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dlsc/bounds.hpp"
#include "dlsc/check.hpp"
#include "dlsc/core.hpp"
#include "dlsc/experiments.hpp"
#include "dlsc/io.hpp"
#include "dlsc/learning.hpp"
#include "dlsc/sparse_coding.hpp"

namespace dlsc::cli {

enum ExitCode : int { ok = 0, validation = 1, runtime = 2 };

/// A bad flag value; the message starts with the flag name.
class flag_error : public invalid_parameter {
 public:
  flag_error(const std::string& flag, const std::string& what) : invalid_parameter(flag + ": " + what) {}
};

namespace detail {

inline double real_flag(const std::string& flag, const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v))
    throw flag_error(flag, "expected a finite decimal number, got '" + text + "'");
  return v;
}

inline double positive_flag(const std::string& flag, const std::string& text) {
  const double v = real_flag(flag, text);
  if (!(v > 0.0)) throw flag_error(flag, "must be positive, got " + text);
  return v;
}

inline double nonnegative_flag(const std::string& flag, const std::string& text) {
  const double v = real_flag(flag, text);
  if (!(v >= 0.0)) throw flag_error(flag, "must be >= 0, got " + text);
  return v;
}

/// Parsed as a decimal double, then required to be an exact integer >= lo.
inline long long int_flag(const std::string& flag, const std::string& text, long long lo) {
  const double v = real_flag(flag, text);
  if (v != std::floor(v) || std::abs(v) > 9.007199254740992e15)
    throw flag_error(flag, "expected an integer, got '" + text + "'");
  if (v < static_cast<double>(lo))
    throw flag_error(flag, "must be >= " + std::to_string(lo) + ", got " + text);
  return static_cast<long long>(v);
}

inline std::uint64_t seed_flag(const std::string& flag, const std::string& text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size())
    throw flag_error(flag, "expected an unsigned 64-bit integer, got '" + text + "'");
  return v;
}

inline Penalty penalty_flags(const std::string& p, const std::string& q, const std::string& lambda) {
  return Penalty(positive_flag("--p", p), positive_flag("--q", q), positive_flag("--lambda", lambda));
}

/// Runs `fn`, re-labelling validation failures of file content with `flag`.
template <class F>
auto with_flag(const std::string& flag, F&& fn) {
  try {
    return fn();
  } catch (const flag_error&) {
    throw;
  } catch (const invalid_parameter& e) {
    throw flag_error(flag, e.what());
  } catch (const dimension_error& e) {
    throw flag_error(flag, e.what());
  }
}

inline Matrix read_matrix_flag(const std::string& flag, const std::string& path) {
  return with_flag(flag, [&] { return read_matrix_csv(path); });
}

struct BoundFlags {
  std::string m, d, p, q, lambda, n, confidence = "0", L, data;
};

struct SampleSizeFlags {
  std::string target, m, d, p, q, lambda, confidence = "0", L;
};

struct CodeFlags {
  std::string signal, dict, p, q, lambda, seed = "0", threads = "1", restarts, max_iters;
};

struct LearnFlags {
  std::string data, d, p, q, lambda, config, out = ".", seed, threads = "1", outer_iters;
};

struct ExperimentFlags {
  std::string config, out, seed, threads;
};

struct CheckFlags {
  std::string seed = "0", threads = "1";
};

inline int cmd_bound(const BoundFlags& f, std::ostream& out, std::ostream& err) {
  BoundInputs in;
  in.m = int_flag("--m", f.m, 1);
  in.d = int_flag("--d", f.d, 1);
  in.pen = penalty_flags(f.p, f.q, f.lambda);
  in.n = int_flag("--n", f.n, 2);
  in.confidence_x = nonnegative_flag("--confidence", f.confidence);
  if (!f.L.empty()) in.L = positive_flag("--L", f.L);
  if (in.n < 3)
    err << "warning: --n " << in.n << " < 3; the bound's derivation assumes log n >= 1\n";
  const double worst = worst_case_L(in.pen, in.d);
  if (in.L && *in.L <= worst)
    err << "warning: --L " << *in.L << " is not above the worst-case threshold " << worst
        << "; the bound's hypothesis requires L > threshold\n";
  std::optional<SignalSet> X;
  if (!f.data.empty()) {
    Matrix M = read_matrix_flag("--data", f.data);
    X.emplace(with_flag("--data", [&] { return SignalSet(std::move(M)); }));
    if (X->m() != in.m)
      throw flag_error("--data", "signals have " + std::to_string(X->m()) + " rows, --m is " +
                                     std::to_string(in.m));
  }
  BoundReport r;
  try {
    r = full_report(in, X ? &*X : nullptr);
  } catch (const infeasible_error& e) {
    throw flag_error("--n", e.what());
  }
  out << to_json(r).dump(2) << "\n";
  return ok;
}

inline int cmd_samplesize(const SampleSizeFlags& f, std::ostream& out, std::ostream&) {
  const double target = positive_flag("--target-eta", f.target);
  const long long m = int_flag("--m", f.m, 1);
  const long long d = int_flag("--d", f.d, 1);
  const Penalty pen = penalty_flags(f.p, f.q, f.lambda);
  const double x = nonnegative_flag("--confidence", f.confidence);
  BoundInputs in{m, d, pen, 3, x, {}};
  if (!f.L.empty()) in.L = positive_flag("--L", f.L);
  const double L = effective_L(in);
  long long n = 0;
  try {
    n = required_samples(target, m, d, L, x);
  } catch (const unreachable_target& e) {
    throw flag_error("--target-eta", e.what());
  }
  const double beta = compute_beta(m, d, L);
  json j;
  j["n"] = n;
  j["eta_n"] = compute_eta(n, beta, x);
  j["eta_n_minus_1"] = compute_eta(n - 1, beta, x);
  j["target_eta"] = target;
  j["beta"] = beta;
  j["L"] = L;
  out << j.dump(2) << "\n";
  return ok;
}

inline int cmd_code(const CodeFlags& f, std::ostream& out, std::ostream&) {
  const Penalty pen = penalty_flags(f.p, f.q, f.lambda);
  SolverConfig cfg;
  cfg.seed = seed_flag("--seed", f.seed);
  int_flag("--threads", f.threads, 0);
  if (!f.restarts.empty()) cfg.restarts = static_cast<int>(int_flag("--restarts", f.restarts, 1));
  if (!f.max_iters.empty()) cfg.max_iters = static_cast<int>(int_flag("--max-iters", f.max_iters, 1));
  const Matrix S = read_matrix_flag("--signal", f.signal);
  Vector x;
  if (S.cols() == 1) x = S.col(0);
  else if (S.rows() == 1) x = S.row(0).transpose();
  else throw flag_error("--signal", "expected a single column (or row), got " + std::to_string(S.rows()) +
                                        "x" + std::to_string(S.cols()));
  const Matrix M = read_matrix_flag("--dict", f.dict);
  const Dictionary D = with_flag("--dict", [&] { return Dictionary(M); });
  if (x.size() != D.m())
    throw flag_error("--signal", "length " + std::to_string(x.size()) + " does not match dictionary rows " +
                                     std::to_string(D.m()));
  const CodingResult r = with_flag("--signal", [&] { return sparse_code(x, D, pen, cfg); });
  out << to_json(r).dump(2) << "\n";
  return ok;
}

inline int cmd_learn(const LearnFlags& f, std::ostream& out, std::ostream&) {
  const long long d = int_flag("--d", f.d, 1);
  const Penalty pen = penalty_flags(f.p, f.q, f.lambda);
  LearnConfig cfg;
  if (!f.config.empty()) {
    const std::string text = read_text_file(f.config);
    cfg = with_flag("--config", [&] {
      try {
        return learn_config_from_json(json::parse(text));
      } catch (const json::parse_error& e) {
        throw format_error(e.what());
      }
    });
  }
  if (!f.seed.empty()) cfg.seed = seed_flag("--seed", f.seed);
  if (!f.outer_iters.empty()) cfg.outer_iters = static_cast<int>(int_flag("--outer-iters", f.outer_iters, 1));
  cfg.threads = static_cast<unsigned>(int_flag("--threads", f.threads, 0));
  Matrix M = read_matrix_flag("--data", f.data);
  const SignalSet X = with_flag("--data", [&] { return SignalSet(std::move(M)); });
  if (X.n() < 1) throw flag_error("--data", "needs at least one sample (column)");
  const LearnTrace tr = learn(X, X.m(), d, pen, cfg);

  const std::filesystem::path dir(f.out);
  std::filesystem::create_directories(dir);
  const auto dict_path = dir / "dictionary.csv";
  const auto trace_path = dir / "trace.csv";
  write_matrix_csv(dict_path, tr.final_dict.atoms());
  std::string trace = "round,objective\n";
  for (std::size_t t = 0; t < tr.objectives.size(); ++t)
    trace += std::to_string(t + 1) + "," + format_double(tr.objectives[t]) + "\n";
  write_text_file(trace_path, trace);

  json j;
  j["dictionary"] = dict_path.string();
  j["trace"] = trace_path.string();
  j["rounds"] = tr.rounds;
  j["final_objective"] = tr.objectives.back();
  j["config"] = to_json(cfg);
  out << j.dump(2) << "\n";
  return ok;
}

inline int cmd_experiment(const ExperimentFlags& f, std::ostream& out, std::ostream& err) {
  const std::string text = read_text_file(f.config);
  ExperimentConfig cfg = with_flag("--config", [&] {
    try {
      return experiment_config_from_json(json::parse(text));
    } catch (const json::parse_error& e) {
      throw format_error(e.what());
    }
  });
  if (!f.seed.empty()) cfg.dist.seed = seed_flag("--seed", f.seed);
  if (!f.threads.empty()) cfg.threads = static_cast<unsigned>(int_flag("--threads", f.threads, 0));
  for (const std::string& w : cfg.warnings()) err << "warning: " << w << "\n";
  const GapCurve curve = gap_sweep(cfg);

  const std::filesystem::path dir(f.out);
  std::filesystem::create_directories(dir);
  const auto csv = dir / "gap_curve.csv";
  export_curve(curve, csv);

  double worst_ratio = 0.0;
  long long violations = 0;
  for (const GapRow& r : curve.rows) {
    worst_ratio = std::max(worst_ratio, r.gap / r.eta);
    if (r.gap - 3.0 * r.holdout_se > r.eta) ++violations;
  }
  json j;
  j["csv"] = csv.string();
  j["sidecar"] = sidecar_path(csv).string();
  j["rows"] = curve.rows.size();
  j["max_gap_over_eta"] = worst_ratio;
  j["envelope_violations"] = violations;
  j["fit"] = gap_curve_sidecar(curve)["fit"];
  out << j.dump(2) << "\n";
  return ok;
}

inline int cmd_check(const CheckFlags& f, std::ostream& out, std::ostream&) {
  const std::uint64_t seed = seed_flag("--seed", f.seed);
  int_flag("--threads", f.threads, 0);
  const std::vector<CheckResult> results = run_self_checks(seed);
  bool all = true;
  out << std::left << std::setw(26) << "check" << std::right << std::setw(8) << "cases" << std::setw(10)
      << "failures" << std::setw(14) << "worst" << "  status\n";
  for (const CheckResult& r : results) {
    all = all && r.passed();
    std::ostringstream worst;
    worst << std::setprecision(3) << std::scientific << r.worst;
    out << std::left << std::setw(26) << r.name << std::right << std::setw(8) << r.cases << std::setw(10)
        << r.failures << std::setw(14) << worst.str() << "  " << (r.passed() ? "PASS" : "FAIL") << "\n";
  }
  out << (all ? "all checks passed" : "some checks FAILED") << "\n";
  return all ? ok : validation;
}

}  // namespace detail

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dictionary learning sample-complexity toolkit", "dlsc"};
  app.require_subcommand(1);
  app.set_help_flag("-h,--help", "Print help");

  detail::BoundFlags bf;
  auto* bound = app.add_subcommand("bound", "Sample-complexity bound and its constants (JSON)");
  bound->add_option("--m", bf.m, "signal dimension")->required();
  bound->add_option("--d", bf.d, "number of atoms")->required();
  bound->add_option("--p", bf.p, "penalty exponent p")->required();
  bound->add_option("--q", bf.q, "penalty power q")->required();
  bound->add_option("--lambda", bf.lambda, "penalty scale")->required();
  bound->add_option("--n", bf.n, "sample size")->required();
  bound->add_option("--confidence", bf.confidence, "confidence exponent x (probability 1-2e^-x)");
  bound->add_option("--L", bf.L, "Lipschitz constant (default: worst case, bumped)");
  bound->add_option("--data", bf.data, "CSV signals (m x n) for empirical L_X, C_X");

  detail::SampleSizeFlags sf;
  auto* ss = app.add_subcommand("samplesize", "Smallest n whose bound meets a target (JSON)");
  ss->add_option("--target-eta", sf.target, "target bound")->required();
  ss->add_option("--m", sf.m)->required();
  ss->add_option("--d", sf.d)->required();
  ss->add_option("--p", sf.p)->required();
  ss->add_option("--q", sf.q)->required();
  ss->add_option("--lambda", sf.lambda)->required();
  ss->add_option("--confidence", sf.confidence);
  ss->add_option("--L", sf.L);

  detail::CodeFlags cf;
  auto* code = app.add_subcommand("code", "Sparse-code one signal (JSON)");
  code->add_option("--signal", cf.signal, "CSV signal (single column)")->required();
  code->add_option("--dict", cf.dict, "CSV dictionary (m x d, unit columns)")->required();
  code->add_option("--p", cf.p)->required();
  code->add_option("--q", cf.q)->required();
  code->add_option("--lambda", cf.lambda)->required();
  code->add_option("--seed", cf.seed, "seed of random restarts");
  code->add_option("--threads", cf.threads);
  code->add_option("--restarts", cf.restarts);
  code->add_option("--max-iters", cf.max_iters);

  detail::LearnFlags lf;
  auto* lrn = app.add_subcommand("learn", "Learn a dictionary; writes dictionary.csv and trace.csv");
  lrn->add_option("--data", lf.data, "CSV signals (m x n)")->required();
  lrn->add_option("--d", lf.d)->required();
  lrn->add_option("--p", lf.p)->required();
  lrn->add_option("--q", lf.q)->required();
  lrn->add_option("--lambda", lf.lambda)->required();
  lrn->add_option("--config", lf.config, "JSON learning configuration");
  lrn->add_option("--out", lf.out, "output directory (default .)");
  lrn->add_option("--seed", lf.seed);
  lrn->add_option("--threads", lf.threads);
  lrn->add_option("--outer-iters", lf.outer_iters);

  detail::ExperimentFlags ef;
  auto* exp = app.add_subcommand("experiment", "Generalization-gap sweep; writes gap_curve.csv/.json");
  exp->add_option("--config", ef.config, "JSON experiment configuration")->required();
  exp->add_option("--out", ef.out, "output directory")->required();
  exp->add_option("--seed", ef.seed, "overrides dist.seed");
  exp->add_option("--threads", ef.threads, "overrides threads (0 = auto)");

  detail::CheckFlags chf;
  auto* chk = app.add_subcommand("check", "Oracle and inequality self-checks");
  chk->add_option("--seed", chf.seed);
  chk->add_option("--threads", chf.threads);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << msg << "\n";
    return validation;
  }

  try {
    if (*bound) return detail::cmd_bound(bf, out, err);
    if (*ss) return detail::cmd_samplesize(sf, out, err);
    if (*code) return detail::cmd_code(cf, out, err);
    if (*lrn) return detail::cmd_learn(lf, out, err);
    if (*exp) return detail::cmd_experiment(ef, out, err);
    if (*chk) return detail::cmd_check(chf, out, err);
  } catch (const invalid_parameter& e) {
    err << "error: " << e.what() << "\n";
    return validation;
  } catch (const dimension_error& e) {
    err << "error: " << e.what() << "\n";
    return validation;
  } catch (const infeasible_error& e) {
    err << "error: " << e.what() << "\n";
    return validation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return runtime;
  }
  return validation;
}

}  // namespace dlsc::cli
