#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "dlsc/bounds.hpp"
#include "dlsc/core.hpp"
#include "dlsc/io.hpp"
#include "dlsc/learning.hpp"
#include "dlsc/sparse_coding.hpp"
#include "dlsc/util.hpp"

namespace dlsc {

// ---- distributions ----------------------------------------------------------

enum class DistKind { uniform_sphere, uniform_ball, planted_sparse };

inline std::string to_string(DistKind k) {
  switch (k) {
    case DistKind::uniform_sphere: return "uniform-sphere";
    case DistKind::uniform_ball: return "uniform-ball";
    case DistKind::planted_sparse: return "planted-sparse";
  }
  return "?";
}

inline DistKind dist_kind_from_string(const std::string& s) {
  if (s == "uniform-sphere") return DistKind::uniform_sphere;
  if (s == "uniform-ball") return DistKind::uniform_ball;
  if (s == "planted-sparse") return DistKind::planted_sparse;
  throw invalid_parameter("dist.kind: expected uniform-sphere, uniform-ball or planted-sparse, got '" +
                          s + "'");
}

/// A law on the unit ball of R^m. planted-sparse draws x = D* a with k
/// nonzero Gaussian coefficients (scaled by coeff_scale) on distinct atoms of
/// a seeded dictionary D* with dict_atoms columns, then divides by
/// max(1, ||x||).
struct DistributionSpec {
  DistKind kind = DistKind::uniform_sphere;
  Eigen::Index m = 1;
  std::uint64_t seed = 0;
  // planted-sparse only
  std::uint64_t true_dict_seed = 0;
  Eigen::Index dict_atoms = 0;
  Eigen::Index sparsity_k = 1;
  double coeff_scale = 1.0;

  void validate() const {
    if (m < 1) throw invalid_parameter("dist.m must be >= 1");
    if (kind == DistKind::planted_sparse) {
      if (dict_atoms < 1) throw invalid_parameter("dist.dict_atoms must be >= 1 for planted-sparse");
      if (sparsity_k < 1 || sparsity_k > dict_atoms)
        throw invalid_parameter("dist.sparsity_k must lie in [1, dict_atoms]");
      if (!(coeff_scale >= 0.0) || !std::isfinite(coeff_scale))
        throw invalid_parameter("dist.coeff_scale must be a finite value >= 0");
    }
  }

  Dictionary planted_dictionary() const {
    if (kind != DistKind::planted_sparse)
      throw invalid_parameter("planted dictionary requested for a " + to_string(kind) + " law");
    validate();
    return random_dictionary(m, dict_atoms, true_dict_seed);
  }
};

/// n independent draws; a function of (spec, n) only.
inline SignalSet sample(const DistributionSpec& dist, Eigen::Index n) {
  dist.validate();
  if (n < 1) throw invalid_parameter("sample: n must be >= 1");
  Rng rng(child_seed(dist.seed, 0x53a3d1e5ULL));
  Matrix X(dist.m, n);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  switch (dist.kind) {
    case DistKind::uniform_sphere:
      for (Eigen::Index i = 0; i < n; ++i) X.col(i) = sphere_point(dist.m, rng);
      break;
    case DistKind::uniform_ball: {
      const double inv_m = 1.0 / static_cast<double>(dist.m);
      for (Eigen::Index i = 0; i < n; ++i) {
        const Vector dir = sphere_point(dist.m, rng);
        X.col(i) = dir * std::pow(unif(rng), inv_m);
      }
      break;
    }
    case DistKind::planted_sparse: {
      const Dictionary D = dist.planted_dictionary();
      std::normal_distribution<double> gauss(0.0, 1.0);
      std::vector<Eigen::Index> idx(static_cast<std::size_t>(dist.dict_atoms));
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < dist.dict_atoms; ++j) idx[static_cast<std::size_t>(j)] = j;
        Vector x = Vector::Zero(dist.m);
        for (Eigen::Index k = 0; k < dist.sparsity_k; ++k) {
          // partial Fisher-Yates
          std::uniform_int_distribution<Eigen::Index> pick(k, dist.dict_atoms - 1);
          std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(rng))]);
          x += D.atoms().col(idx[static_cast<std::size_t>(k)]) * (dist.coeff_scale * gauss(rng));
        }
        X.col(i) = x / std::max(1.0, x.norm());
      }
      break;
    }
  }
  return SignalSet(std::move(X));
}

struct HoldoutEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t nonconverged = 0;
};

/// Plug-in estimate of E f_x(D) from holdout_n fresh draws of `dist`, with
/// standard error sample-std / sqrt(holdout_n).
inline HoldoutEstimate estimate_expected_f(const Coder& coder, const DistributionSpec& dist,
                                           const Penalty& pen, Eigen::Index holdout_n,
                                           const SolverConfig& coding = {}, unsigned threads = 1) {
  if (holdout_n < 2) throw invalid_parameter("holdout_n must be >= 2");
  const SignalSet H = sample(dist, holdout_n);
  const BatchCoding b = batch_objective(H, coder, pen, coding, threads);
  HoldoutEstimate est;
  est.mean = b.F;
  const double var = (b.objectives.array() - b.F).square().sum() / static_cast<double>(holdout_n - 1);
  est.std_error = std::sqrt(var / static_cast<double>(holdout_n));
  est.nonconverged = b.nonconverged;
  return est;
}

inline HoldoutEstimate estimate_expected_f(const Dictionary& dict, const DistributionSpec& dist,
                                           const Penalty& pen, Eigen::Index holdout_n,
                                           const SolverConfig& coding = {}, unsigned threads = 1) {
  return estimate_expected_f(Coder(dict), dist, pen, holdout_n, coding, threads);
}

// ---- sweep -------------------------------------------------------------------

enum class DictSource { learned, random, planted };

inline std::string to_string(DictSource s) {
  switch (s) {
    case DictSource::learned: return "learned";
    case DictSource::random: return "random";
    case DictSource::planted: return "planted";
  }
  return "?";
}

inline DictSource dict_source_from_string(const std::string& s) {
  if (s == "learned") return DictSource::learned;
  if (s == "random") return DictSource::random;
  if (s == "planted") return DictSource::planted;
  throw invalid_parameter("dict_source: expected learned, random or planted, got '" + s + "'");
}

struct ExperimentConfig {
  DistributionSpec dist;
  Penalty pen{1.0, 1.0, 1.0};
  Eigen::Index d = 1;
  std::vector<long long> n_grid;
  int trials = 1;
  Eigen::Index holdout_n = 100000;
  DictSource dict_source = DictSource::random;
  int random_dicts = 10;  ///< K fixed random dictionaries evaluated per trial
  LearnConfig learn;      ///< learn.coding is also used for train/holdout coding
  double confidence_x = 1.0;
  unsigned threads = 1;

  void validate() const {
    dist.validate();
    if (d < 1) throw invalid_parameter("d must be >= 1");
    if (n_grid.empty()) throw invalid_parameter("n_grid must be nonempty");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
      if (n_grid[i] < 2) throw invalid_parameter("n_grid entries must be >= 2");
      if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw invalid_parameter("n_grid must be increasing");
    }
    if (trials < 1) throw invalid_parameter("trials must be >= 1");
    if (holdout_n < 2) throw invalid_parameter("holdout_n must be >= 2");
    if (random_dicts < 0) throw invalid_parameter("random_dicts must be >= 0");
    if (dict_source == DictSource::random && random_dicts < 1)
      throw invalid_parameter("random_dicts must be >= 1 when dict_source is random");
    if (dict_source == DictSource::planted && dist.kind != DistKind::planted_sparse)
      throw invalid_parameter("dict_source planted needs a planted-sparse distribution");
    if (dist.kind == DistKind::planted_sparse && dict_source != DictSource::random &&
        dist.dict_atoms != d)
      throw invalid_parameter("dist.dict_atoms must equal d to compare with the planted dictionary");
    if (!(confidence_x >= 0.0) || !std::isfinite(confidence_x))
      throw invalid_parameter("confidence_x must be a finite value >= 0");
    learn.validate();
  }

  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    if (!n_grid.empty() && holdout_n < 10 * n_grid.back())
      w.push_back("holdout_n = " + std::to_string(holdout_n) + " is below 10 * max(n_grid) = " +
                  std::to_string(10 * n_grid.back()));
    return w;
  }
};

struct GapRow {
  long long n = 0;
  int trial = 0;
  std::uint64_t seed = 0;  ///< seed of the training draw
  double train_F = 0.0;
  double holdout_F = 0.0;
  double gap = 0.0;
  double eta = 0.0;
  double holdout_se = 0.0;  ///< standard error of holdout_F
  std::string candidate;    ///< dictionary attaining the gap
  std::size_t nonconverged = 0;
};

struct RateFit {
  bool valid = false;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double slope_inv_sqrt_n = std::numeric_limits<double>::quiet_NaN();
  double intercept_inv_sqrt_n = std::numeric_limits<double>::quiet_NaN();
};

struct GapCurve {
  std::vector<GapRow> rows;
  RateFit fit;
  std::vector<std::string> warnings;
  json config;  ///< echo of the generating configuration (empty if unknown)
  json seeds;
};

namespace detail {

inline std::pair<double, double> least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const auto k = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) { mx += x[i]; my += y[i]; }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace detail

/// Mean gap over trials at each n, then least squares of log(mean gap)
/// against log(sqrt(log n / n)) and, separately, against log(1/sqrt n).
/// Needs two distinct n >= 2 with positive mean gap.
inline RateFit fit_rate(const std::vector<GapRow>& rows) {
  std::vector<long long> ns;
  for (const GapRow& r : rows)
    if (std::find(ns.begin(), ns.end(), r.n) == ns.end()) ns.push_back(r.n);
  std::sort(ns.begin(), ns.end());
  std::vector<double> x1, x2, y;
  for (long long n : ns) {
    double acc = 0.0;
    int cnt = 0;
    for (const GapRow& r : rows)
      if (r.n == n) { acc += r.gap; ++cnt; }
    const double mean = acc / cnt;
    if (n < 2 || !(mean > 0.0)) continue;
    const auto dn = static_cast<double>(n);
    x1.push_back(0.5 * std::log(std::log(dn) / dn));
    x2.push_back(-0.5 * std::log(dn));
    y.push_back(std::log(mean));
  }
  RateFit fit;
  if (y.size() < 2) return fit;
  fit.valid = true;
  std::tie(fit.slope, fit.intercept) = detail::least_squares(x1, y);
  std::tie(fit.slope_inv_sqrt_n, fit.intercept_inv_sqrt_n) = detail::least_squares(x2, y);
  return fit;
}

inline json to_json(const DistributionSpec& s) {
  json j{{"kind", to_string(s.kind)}, {"m", s.m}, {"seed", s.seed}};
  if (s.kind == DistKind::planted_sparse) {
    j["true_dict_seed"] = s.true_dict_seed;
    j["dict_atoms"] = s.dict_atoms;
    j["sparsity_k"] = s.sparsity_k;
    j["coeff_scale"] = s.coeff_scale;
  }
  return j;
}

inline json to_json(const ExperimentConfig& c) {
  return {{"dist", to_json(c.dist)},
          {"pen", to_json(c.pen)},
          {"d", c.d},
          {"n_grid", c.n_grid},
          {"trials", c.trials},
          {"holdout_n", c.holdout_n},
          {"dict_source", to_string(c.dict_source)},
          {"random_dicts", c.random_dicts},
          {"learn", to_json(c.learn)},
          {"confidence_x", c.confidence_x},
          {"threads", c.threads}};
}

inline DistributionSpec distribution_from_json(const json& j, const std::string& where = "dist") {
  detail::FieldReader r(j, where);
  DistributionSpec s;
  std::string kind = "uniform-sphere";
  r.get("kind", kind);
  s.kind = dist_kind_from_string(kind);
  r.get("m", s.m);
  r.get("seed", s.seed);
  r.get("true_dict_seed", s.true_dict_seed);
  r.get("dict_atoms", s.dict_atoms);
  r.get("sparsity_k", s.sparsity_k);
  r.get("coeff_scale", s.coeff_scale);
  r.finish();
  s.validate();
  return s;
}

/// Reads an experiment configuration whose keys mirror ExperimentConfig.
/// Missing keys keep their defaults; unknown keys are rejected.
inline ExperimentConfig experiment_config_from_json(const json& j) {
  detail::FieldReader r(j, "config");
  ExperimentConfig c;
  if (const json* v = r.child("dist")) c.dist = distribution_from_json(*v);
  if (const json* v = r.child("pen")) c.pen = penalty_from_json(*v);
  r.get("d", c.d);
  r.get("n_grid", c.n_grid);
  r.get("trials", c.trials);
  r.get("holdout_n", c.holdout_n);
  std::string source = to_string(c.dict_source);
  r.get("dict_source", source);
  c.dict_source = dict_source_from_string(source);
  r.get("random_dicts", c.random_dicts);
  if (const json* v = r.child("learn")) c.learn = learn_config_from_json(*v);
  r.get("confidence_x", c.confidence_x);
  r.get("threads", c.threads);
  r.finish();
  c.validate();
  return c;
}

inline constexpr std::uint64_t kHoldoutTag = 0x401d0a7ULL;
inline constexpr std::uint64_t kRandomDictTag = 0xd1c7ULL;

/// Generalization-gap sweep. For each n in n_grid and each trial a training
/// set is drawn with seed child_seed(dist.seed, n, trial) and the gap
/// |F_X(D) - E f_x(D)| is evaluated at every candidate dictionary:
///   random  : K fixed random dictionaries
///   planted : the planted dictionary
///   learned : the dictionary learned on the training set, plus the K random
///             dictionaries and the planted one when the law has it.
/// The row keeps the largest gap (a lower proxy for the sup over all
/// dictionaries). Fixed dictionaries share one holdout estimate; a learned
/// dictionary gets its own holdout per trial.
inline GapCurve gap_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const Eigen::Index m = cfg.dist.m;
  const SolverConfig& coding = cfg.learn.coding;

  struct Candidate {
    std::string label;
    Coder coder;
    HoldoutEstimate holdout;
  };
  std::vector<Candidate> fixed;
  json seeds;
  seeds["master"] = cfg.dist.seed;
  const std::uint64_t holdout_seed = child_seed(cfg.dist.seed, kHoldoutTag);
  seeds["holdout"] = holdout_seed;
  if (cfg.dict_source != DictSource::planted) {
    seeds["random_dicts"] = json::array();
    for (int k = 0; k < cfg.random_dicts; ++k) {
      const std::uint64_t s = child_seed(cfg.dist.seed, kRandomDictTag, static_cast<std::uint64_t>(k));
      seeds["random_dicts"].push_back(s);
      fixed.push_back({"random:" + std::to_string(k), Coder(random_dictionary(m, cfg.d, s)), {}});
    }
  }
  if (cfg.dist.kind == DistKind::planted_sparse && cfg.dict_source != DictSource::random)
    fixed.push_back({"planted", Coder(cfg.dist.planted_dictionary()), {}});

  DistributionSpec holdout_dist = cfg.dist;
  holdout_dist.seed = holdout_seed;
  for (Candidate& c : fixed)
    c.holdout = estimate_expected_f(c.coder, holdout_dist, cfg.pen, cfg.holdout_n, coding, cfg.threads);

  const double L = effective_L(BoundInputs{m, cfg.d, cfg.pen, cfg.n_grid.front(), cfg.confidence_x, {}});
  const double beta = compute_beta(m, cfg.d, L);

  const std::size_t per_n = static_cast<std::size_t>(cfg.trials);
  std::vector<GapRow> rows(cfg.n_grid.size() * per_n);
  parallel_for(rows.size(), cfg.threads, [&](std::size_t task) {
    const long long n = cfg.n_grid[task / per_n];
    const int trial = static_cast<int>(task % per_n);
    GapRow row;
    row.n = n;
    row.trial = trial;
    row.seed = child_seed(cfg.dist.seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(trial));
    row.eta = compute_eta(n, beta, cfg.confidence_x);
    DistributionSpec train_dist = cfg.dist;
    train_dist.seed = row.seed;
    const SignalSet X = sample(train_dist, static_cast<Eigen::Index>(n));

    row.gap = -1.0;
    auto consider = [&](const std::string& label, const Coder& coder, const HoldoutEstimate& h) {
      const BatchCoding b = batch_objective(X, coder, cfg.pen, coding, 1);
      row.nonconverged += b.nonconverged + h.nonconverged;
      const double gap = std::abs(b.F - h.mean);
      if (gap > row.gap) {
        row.gap = gap;
        row.train_F = b.F;
        row.holdout_F = h.mean;
        row.holdout_se = h.std_error;
        row.candidate = label;
      }
    };
    if (cfg.dict_source == DictSource::learned) {
      LearnConfig lc = cfg.learn;
      lc.seed = child_seed(cfg.learn.seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(trial));
      lc.threads = 1;
      const LearnTrace tr = learn(X, m, cfg.d, cfg.pen, lc);
      const Coder coder(tr.final_dict);
      DistributionSpec hd = cfg.dist;
      hd.seed = child_seed(row.seed, kHoldoutTag);
      const HoldoutEstimate h = estimate_expected_f(coder, hd, cfg.pen, cfg.holdout_n, coding, 1);
      consider("learned", coder, h);
    }
    for (const Candidate& c : fixed) consider(c.label, c.coder, c.holdout);
    rows[task] = std::move(row);
  });

  GapCurve curve;
  curve.rows = std::move(rows);
  curve.fit = fit_rate(curve.rows);
  curve.warnings = cfg.warnings();
  curve.config = to_json(cfg);
  curve.seeds = std::move(seeds);
  return curve;
}

// ---- export / import -----------------------------------------------------------

inline constexpr const char* kGapCsvHeader = "n,trial,train_F,holdout_F,gap,eta";
inline constexpr const char* kSidecarSchema = "dlsc-gap-curve/1";

inline std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  std::filesystem::path p = csv_path;
  return p.replace_extension(".json");
}

namespace detail {

inline json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline double from_nullable(const json& v) {
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

}  // namespace detail

inline std::string gap_curve_csv(const GapCurve& curve) {
  std::string s = std::string(kGapCsvHeader) + "\n";
  for (const GapRow& r : curve.rows) {
    s += std::to_string(r.n) + "," + std::to_string(r.trial) + "," + format_double(r.train_F) + "," +
         format_double(r.holdout_F) + "," + format_double(r.gap) + "," + format_double(r.eta) + "\n";
  }
  return s;
}

inline json gap_curve_sidecar(const GapCurve& curve) {
  json j;
  j["schema"] = kSidecarSchema;
  j["config"] = curve.config.is_null() ? json::object() : curve.config;
  j["seeds"] = curve.seeds.is_null() ? json::object() : curve.seeds;
  j["fit"] = {{"valid", curve.fit.valid},
              {"regressor", "log(sqrt(log(n)/n))"},
              {"slope", detail::nullable(curve.fit.slope)},
              {"intercept", detail::nullable(curve.fit.intercept)},
              {"slope_inv_sqrt_n", detail::nullable(curve.fit.slope_inv_sqrt_n)},
              {"intercept_inv_sqrt_n", detail::nullable(curve.fit.intercept_inv_sqrt_n)}};
  j["rows"] = json::array();
  for (const GapRow& r : curve.rows)
    j["rows"].push_back({{"n", r.n},
                         {"trial", r.trial},
                         {"seed", r.seed},
                         {"holdout_se", r.holdout_se},
                         {"candidate", r.candidate},
                         {"nonconverged", r.nonconverged}});
  j["warnings"] = curve.warnings;
  return j;
}

/// Structural check of a sidecar document; throws format_error naming the
/// first offending member.
inline void validate_sidecar(const json& j) {
  auto fail = [](const std::string& what) { throw format_error("sidecar: " + what); };
  if (!j.is_object()) fail("not an object");
  if (!j.contains("schema") || j["schema"] != kSidecarSchema) fail("schema must be \"" + std::string(kSidecarSchema) + "\"");
  for (const char* key : {"config", "seeds", "fit"})
    if (!j.contains(key) || !j[key].is_object()) fail(std::string(key) + " must be an object");
  const json& fit = j["fit"];
  if (!fit.contains("valid") || !fit["valid"].is_boolean()) fail("fit.valid must be boolean");
  if (!fit.contains("regressor") || !fit["regressor"].is_string()) fail("fit.regressor must be a string");
  for (const char* key : {"slope", "intercept", "slope_inv_sqrt_n", "intercept_inv_sqrt_n"})
    if (!fit.contains(key) || !(fit[key].is_number() || fit[key].is_null()))
      fail(std::string("fit.") + key + " must be a number or null");
  if (!j.contains("rows") || !j["rows"].is_array()) fail("rows must be an array");
  for (std::size_t i = 0; i < j["rows"].size(); ++i) {
    const json& r = j["rows"][i];
    const std::string at = "rows[" + std::to_string(i) + "]";
    if (!r.is_object()) fail(at + " must be an object");
    if (!r.contains("n") || !r["n"].is_number_integer()) fail(at + ".n must be an integer");
    if (!r.contains("trial") || !r["trial"].is_number_integer()) fail(at + ".trial must be an integer");
    if (!r.contains("seed") || !r["seed"].is_number_unsigned()) fail(at + ".seed must be an unsigned integer");
    if (!r.contains("holdout_se") || !r["holdout_se"].is_number()) fail(at + ".holdout_se must be a number");
    if (!r.contains("candidate") || !r["candidate"].is_string()) fail(at + ".candidate must be a string");
    if (!r.contains("nonconverged") || !r["nonconverged"].is_number_unsigned())
      fail(at + ".nonconverged must be an unsigned integer");
  }
  if (!j.contains("warnings") || !j["warnings"].is_array()) fail("warnings must be an array");
  for (const json& w : j["warnings"])
    if (!w.is_string()) fail("warnings entries must be strings");
}

/// Writes `csv_path` and its JSON sidecar (same stem, .json extension).
inline void export_curve(const GapCurve& curve, const std::filesystem::path& csv_path) {
  write_text_file(csv_path, gap_curve_csv(curve));
  write_text_file(sidecar_path(csv_path), gap_curve_sidecar(curve).dump(2) + "\n");
}

/// Reads a curve written by export_curve. The sidecar is optional; without
/// it the per-row extras are zero and the fit is recomputed.
inline GapCurve import_curve(const std::filesystem::path& csv_path) {
  const std::string text = read_text_file(csv_path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw format_error(csv_path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kGapCsvHeader)
    throw format_error(csv_path.string() + ": header must be '" + std::string(kGapCsvHeader) + "'");
  GapCurve curve;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv_line(line);
    const std::string where = csv_path.string() + " line " + std::to_string(lineno);
    if (fields.size() != 6) throw format_error(where + ": expected 6 fields");
    GapRow r;
    const double n = parse_double(fields[0], where);
    const double trial = parse_double(fields[1], where);
    if (n != std::floor(n) || trial != std::floor(trial) || trial < 0)
      throw format_error(where + ": n and trial must be integers");
    r.n = static_cast<long long>(n);
    r.trial = static_cast<int>(trial);
    r.train_F = parse_double(fields[2], where);
    r.holdout_F = parse_double(fields[3], where);
    r.gap = parse_double(fields[4], where);
    r.eta = parse_double(fields[5], where);
    curve.rows.push_back(std::move(r));
  }
  const std::filesystem::path side = sidecar_path(csv_path);
  if (!std::filesystem::exists(side)) {
    curve.fit = fit_rate(curve.rows);
    return curve;
  }
  json j;
  try {
    j = json::parse(read_text_file(side));
  } catch (const json::parse_error& e) {
    throw format_error(side.string() + ": " + e.what());
  }
  validate_sidecar(j);
  if (j["rows"].size() != curve.rows.size())
    throw format_error(side.string() + ": row count differs from " + csv_path.string());
  for (std::size_t i = 0; i < curve.rows.size(); ++i) {
    const json& r = j["rows"][i];
    GapRow& row = curve.rows[i];
    if (r["n"].get<long long>() != row.n || r["trial"].get<int>() != row.trial)
      throw format_error(side.string() + ": rows[" + std::to_string(i) + "] does not match the CSV");
    row.seed = r["seed"].get<std::uint64_t>();
    row.holdout_se = r["holdout_se"].get<double>();
    row.candidate = r["candidate"].get<std::string>();
    row.nonconverged = r["nonconverged"].get<std::size_t>();
  }
  const json& fit = j["fit"];
  curve.fit.valid = fit["valid"].get<bool>();
  curve.fit.slope = detail::from_nullable(fit["slope"]);
  curve.fit.intercept = detail::from_nullable(fit["intercept"]);
  curve.fit.slope_inv_sqrt_n = detail::from_nullable(fit["slope_inv_sqrt_n"]);
  curve.fit.intercept_inv_sqrt_n = detail::from_nullable(fit["intercept_inv_sqrt_n"]);
  curve.config = j["config"];
  curve.seeds = j["seeds"];
  curve.warnings = j["warnings"].get<std::vector<std::string>>();
  return curve;
}

}  // namespace dlsc
