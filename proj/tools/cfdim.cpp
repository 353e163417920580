// cfdim — command-line front end for the cfdim library.
//
// Five subcommands (gr, pressure, dimension, sample, boxdim) expose the
// library's growth functions, pressure estimators, dimension solvers,
// Cantor-type point sampler, and box-counting regression. Every invocation
// writes exactly one JSON document to stdout (see docs/output.schema.json);
// warnings and usage text go to stderr.
//
// Exit codes:
//   0  success
//   2  usage or input error (bad flags, malformed descriptors, unknown
//      config keys, work-budget overruns without --force, unreadable files)
//   3  numerical failure (an iteration did not converge, a quantity that
//      must be monotone was not, or a generated point failed verification)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cfdim/cfdim.hpp"

namespace {

using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Small utilities
// ---------------------------------------------------------------------------

std::string one_line(std::string text) {
  std::replace(text.begin(), text.end(), '\n', ' ');
  return text;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<int> parse_int_list(const std::string& text,
                                const std::string& what) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size() || v < 1 || v > 1000000000L) {
        throw std::invalid_argument(item);
      }
      out.push_back(static_cast<int>(v));
    } catch (const std::exception&) {
      throw cfdim::Error(what + ": malformed integer '" + item + "'");
    }
  }
  if (out.empty()) throw cfdim::Error(what + ": empty list");
  return out;
}

std::vector<double> parse_double_list(const std::string& text,
                                      const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw cfdim::Error(what + ": malformed number '" + item + "'");
    }
  }
  if (out.empty()) throw cfdim::Error(what + ": empty list");
  return out;
}

// ---------------------------------------------------------------------------
// Global options and the run-record envelope
// ---------------------------------------------------------------------------

struct GlobalOpts {
  int threads = 1;
  bool deterministic = false;
  int json_indent = 2;
  bool force = false;
};

void emit_json(const ordered_json& doc, int indent) {
  if (indent > 0) {
    std::cout << doc.dump(indent) << "\n";
  } else {
    std::cout << doc.dump() << "\n";
  }
}

int emit_error(const GlobalOpts& g, const std::string& type,
               const std::string& reason, int code) {
  ordered_json doc;
  doc["error"] = {{"type", type}, {"reason", one_line(reason)}};
  emit_json(doc, g.json_indent);
  std::cerr << "cfdim: error: " << one_line(reason) << "\n";
  return code;
}

// Largest enumeration depth (at least 2) whose total node count over an
// A-letter alphabet stays within the work budget. With --force the
// requested depth is kept as-is.
int clamp_depth_to_budget(int n, std::size_t alphabet_size, bool force,
                          std::vector<std::string>& warnings,
                          const std::string& context) {
  constexpr double kBudget = 1e8;  // matches the enumeration default
  if (force || n < 2) return n;
  const double A = static_cast<double>(alphabet_size);
  double total = 0.0;
  double level = 1.0;
  int feasible = 0;
  for (int k = 1; k <= n; ++k) {
    level *= A;
    total += level;
    if (total > kBudget) break;
    feasible = k;
  }
  if (feasible == n) return n;
  if (feasible < 2) {
    throw cfdim::BudgetError(context +
                             ": the alphabet is too large for any useful "
                             "finite-depth enumeration within the work budget");
  }
  warnings.push_back(context + ": enumeration depth reduced from " +
                     std::to_string(n) + " to " + std::to_string(feasible) +
                     " to fit the work budget; pass --force to keep it");
  return feasible;
}

cfdim::FunctionSpec parse_function(const std::string& flag,
                                   const std::string& desc) {
  try {
    return cfdim::FunctionSpec::parse(desc);
  } catch (const cfdim::ParseError& e) {
    throw cfdim::Error(flag + " '" + desc + "': " + e.what());
  }
}

cfdim::Alphabet parse_alphabet_arg(const std::string& text) {
  try {
    return cfdim::parse_alphabet(text);
  } catch (const cfdim::ParseError& e) {
    throw cfdim::Error("--alphabet '" + text + "': " + e.what());
  }
}

ordered_json estimate_json(const cfdim::PressureEstimate& e,
                           bool with_sequence) {
  ordered_json j;
  j["value"] = e.value;
  j["method"] = e.method;
  j["residual"] = e.residual;
  j["converged"] = e.converged;
  ordered_json params = ordered_json::object();
  for (const auto& [k, v] : e.params) params[k] = v;
  j["params"] = params;
  if (with_sequence) j["sequence"] = e.sequence;
  return j;
}

// ---------------------------------------------------------------------------
// Subcommand option blocks
// ---------------------------------------------------------------------------

struct GrOpts {
  int r = 1;
  double s = 0.0;
  std::string method = "both";
};

struct PressureOpts {
  std::string alphabet;
  int r = 1;
  std::string tau = "const:1";
  std::string h = "logT";
  double s = 0.0;
  std::string method = "both";
  int n = 16;
  int grid = 64;
};

struct DimensionOpts {
  int r = 1;
  std::string tau = "const:1";
  std::string h = "logT";
  std::string m_list = "20,50,100,200";
  std::string method = "pressure";
  int n = 12;
  std::string fn_mode = "stationary";
  double tol = 1e-6;
  int grid = 64;
  bool oracle = false;
  std::string csv;
};

struct SampleOpts {
  int r = 1;
  std::string tau = "const:0.5";
  std::string h = "logT";
  int M = 20;
  int depth = 3;
  int count = 100;
  std::uint64_t seed = 1;
  int t0 = 1;
  std::string m_rule = "linear:4";
  double s = -1.0;  // < 0 means "derive from the truncated dimension"
  std::string emit;
  bool measure = false;
};

struct BoxdimOpts {
  std::string points;
  std::string scales;
};

// ---------------------------------------------------------------------------
// Runners. Each fills `result`, may append warnings, and returns the exit
// code (0 or 3); usage-class failures are thrown and mapped by the caller.
// ---------------------------------------------------------------------------

int run_gr(const GrOpts& o, ordered_json& result,
           std::vector<std::string>& /*warnings*/) {
  if (o.method != "recursive" && o.method != "closed" && o.method != "both") {
    throw cfdim::Error("gr: method must be recursive, closed, or both");
  }
  cfdim::validate_growth_args(o.r, o.s);
  result["r"] = o.r;
  result["s"] = o.s;
  result["method"] = o.method;
  double value = 0.0;
  if (o.method == "recursive" || o.method == "both") {
    const double v = cfdim::growth_exponent_recursive(o.r, o.s);
    result["recursive"] = v;
    value = v;
  }
  if (o.method == "closed" || o.method == "both") {
    const double v = cfdim::growth_exponent_closed(o.r, o.s);
    result["closed"] = v;
    value = v;
  }
  if (o.method == "both") {
    result["diff"] = std::abs(result["recursive"].get<double>() -
                              result["closed"].get<double>());
  }
  result["value"] = value;
  return 0;
}

int run_pressure(const PressureOpts& o, const GlobalOpts& g,
                 ordered_json& result, std::vector<std::string>& warnings) {
  if (o.method != "brute" && o.method != "spectral" && o.method != "both") {
    throw cfdim::Error("pressure: method must be brute, spectral, or both");
  }
  if (o.alphabet.empty()) {
    throw cfdim::Error("pressure: --alphabet is required");
  }
  const cfdim::Alphabet B = parse_alphabet_arg(o.alphabet);
  cfdim::PotentialSpec pot{o.r, parse_function("--h", o.h),
                           parse_function("--tau", o.tau)};
  cfdim::BruteOptions bopts;
  bopts.force = g.force;
  bopts.threads = g.deterministic ? 1 : g.threads;
  cfdim::SpectralOptions sopts;
  sopts.collocation_points = o.grid;

  const int n_eff = o.method == "spectral"
                        ? o.n
                        : clamp_depth_to_budget(o.n, B.size(), g.force,
                                                warnings, "pressure");
  bool converged = true;
  if (o.method == "brute") {
    const auto est = cfdim::pressure_brute(pot, o.s, B, n_eff, bopts);
    result = estimate_json(est, true);
    converged = est.converged;
  } else if (o.method == "spectral") {
    const auto est = cfdim::pressure_spectral(pot, o.s, B, sopts);
    result = estimate_json(est, false);
    converged = est.converged;
  } else {
    const auto eb = cfdim::pressure_brute(pot, o.s, B, n_eff, bopts);
    const auto es = cfdim::pressure_spectral(pot, o.s, B, sopts);
    result["value"] = es.value;
    result["method"] = "both";
    result["residual"] = std::abs(eb.value - es.value);
    result["converged"] = eb.converged && es.converged;
    result["brute"] = estimate_json(eb, true);
    result["spectral"] = estimate_json(es, false);
    converged = eb.converged && es.converged;
  }
  if (!converged) {
    warnings.push_back("pressure estimate did not converge");
    return 3;
  }
  return 0;
}

void write_dimension_csv(const std::string& path,
                         const std::vector<int>& Ms,
                         const std::vector<cfdim::RootResult>& roots) {
  std::ofstream out(path);
  if (!out) throw cfdim::Error("cannot open '" + path + "' for writing");
  out << "M,s_M,bracket_lo,bracket_hi\n";
  for (std::size_t i = 0; i < Ms.size(); ++i) {
    out << Ms[i] << "," << format_double(roots[i].root) << ","
        << format_double(roots[i].bracket_lo) << ","
        << format_double(roots[i].bracket_hi) << "\n";
  }
  if (!out.good()) throw cfdim::Error("short write to '" + path + "'");
}

int run_dimension(const DimensionOpts& o, const GlobalOpts& g,
                  ordered_json& result, std::vector<std::string>& warnings) {
  if (o.method != "fn" && o.method != "pressure" && o.method != "both") {
    throw cfdim::Error("dimension: method must be fn, pressure, or both");
  }
  if (o.fn_mode != "plain" && o.fn_mode != "stationary") {
    throw cfdim::Error("dimension: fn-mode must be plain or stationary");
  }
  if (!(o.tol > 0.0)) throw cfdim::Error("dimension: tol must be positive");
  const std::vector<int> Ms = parse_int_list(o.m_list, "dimension: M-list");
  cfdim::PotentialSpec pot{o.r, parse_function("--h", o.h),
                           parse_function("--tau", o.tau)};
  const cfdim::FnRootMode mode = o.fn_mode == "plain"
                                     ? cfdim::FnRootMode::kPlain
                                     : cfdim::FnRootMode::kStationary;
  cfdim::BruteOptions bopts;
  bopts.force = g.force;
  bopts.threads = g.deterministic ? 1 : g.threads;
  cfdim::SpectralOptions sopts;
  sopts.collocation_points = o.grid;

  std::vector<cfdim::RootResult> roots;
  double certified = 0.0;
  double extrapolated = 0.0;
  if (o.method == "fn") {
    // Finite-depth roots per truncation; monotonicity is checked the same
    // way the spectral sweep checks it.
    double prev = -1.0;
    for (std::size_t i = 0; i < Ms.size(); ++i) {
      if (i > 0 && Ms[i] <= Ms[i - 1]) {
        throw cfdim::Error("dimension: M-list must be strictly increasing");
      }
      const int n_eff = clamp_depth_to_budget(
          o.n, static_cast<std::size_t>(Ms[i]), g.force, warnings,
          "dimension: M = " + std::to_string(Ms[i]));
      const auto rr = cfdim::solve_fn_root(pot, cfdim::alphabet_range(1, Ms[i]),
                                           n_eff, mode, o.tol, bopts);
      if (rr.root < prev - 10.0 * o.tol) {
        throw cfdim::MonotonicityError(
            "dimension: s_M decreased at M = " + std::to_string(Ms[i]));
      }
      prev = rr.root;
      roots.push_back(rr);
    }
    certified = roots.back().root;
    extrapolated = certified;
    if (roots.size() >= 2) {
      const double s1 = roots[roots.size() - 2].root;
      const double s2 = roots.back().root;
      const double m1 = Ms[Ms.size() - 2];
      const double m2 = Ms.back();
      extrapolated = s2 + (s2 - s1) * m1 / (m2 - m1);
    }
  } else {
    const auto sweep = cfdim::solve_limit(pot, Ms, o.tol, sopts);
    roots = sweep.roots;
    certified = sweep.certified_lower_bound;
    extrapolated = sweep.extrapolated;
  }

  result["method"] = o.method;
  result["s_star"] = certified;
  result["bracket"] = {roots.back().bracket_lo, roots.back().bracket_hi};
  ordered_json seq = ordered_json::array();
  for (std::size_t i = 0; i < Ms.size(); ++i) {
    seq.push_back({{"M", Ms[i]},
                   {"s", roots[i].root},
                   {"bracket", {roots[i].bracket_lo, roots[i].bracket_hi}},
                   {"iterations", roots[i].iterations},
                   {"converged", roots[i].converged}});
  }
  result["M_sequence"] = seq;
  result["extrapolated"] = extrapolated;
  result["extrapolated_is_heuristic"] = true;
  warnings.push_back(
      "extrapolated value fits a 1/M tail through the last two sweep points; "
      "it is heuristic, only s_star is a certified lower bound");

  if (o.method == "both") {
    // Cross-check the spectral sweep against a finite-depth root at the
    // largest truncation (subject to the enumeration budget).
    const int M = Ms.back();
    const int n_eff = clamp_depth_to_budget(
        o.n, static_cast<std::size_t>(M), g.force, warnings,
        "dimension: cross-check at M = " + std::to_string(M));
    const auto fr = cfdim::solve_fn_root(pot, cfdim::alphabet_range(1, M),
                                         n_eff, mode, o.tol, bopts);
    result["fn_cross_check"] = {{"M", M},
                                {"n", n_eff},
                                {"mode", o.fn_mode},
                                {"fn_root", fr.root},
                                {"pressure_root", roots.back().root},
                                {"diff", std::abs(fr.root - roots.back().root)}};
  }

  if (o.oracle) {
    const double c = cfdim::tau_min(pot.tau);
    if (c < 0.0) {
      throw cfdim::Error("dimension: oracle needs a nonnegative tau minimum");
    }
    const double oracle = cfdim::closed_form_oracle(o.r, c);
    result["oracle"] = oracle;
    result["oracle_gap"] = oracle - certified;
    if (!pot.h.is_log_t()) {
      warnings.push_back(
          "the closed-form oracle assumes h = logT; the computed sweep uses a "
          "different h, so the oracle is not a limit of this sweep");
    }
  }

  if (!o.csv.empty()) {
    write_dimension_csv(o.csv, Ms, roots);
    result["csv"] = o.csv;
  }
  return 0;
}

int run_sample(const SampleOpts& o, const GlobalOpts& g, ordered_json& result,
               std::vector<std::string>& warnings) {
  if (o.count < 1) throw cfdim::Error("sample: count must be >= 1");
  cfdim::PotentialSpec pot{o.r, parse_function("--h", o.h),
                           parse_function("--tau", o.tau)};

  // Block-length rule: "linear:K" gives m_j = K*j, "list:a,b,c" is explicit.
  std::vector<long long> m_seq;
  if (o.m_rule.rfind("linear:", 0) == 0) {
    const std::vector<int> k =
        parse_int_list(o.m_rule.substr(7), "sample: m-rule");
    if (k.size() != 1) {
      throw cfdim::Error("sample: m-rule linear:K takes one integer");
    }
    for (int j = 1; j <= o.depth; ++j) {
      m_seq.push_back(static_cast<long long>(k[0]) * j);
    }
  } else if (o.m_rule.rfind("list:", 0) == 0) {
    for (int v : parse_int_list(o.m_rule.substr(5), "sample: m-rule")) {
      m_seq.push_back(v);
    }
  } else {
    throw cfdim::Error("sample: m-rule must be linear:K or list:a,b,...");
  }
  const cfdim::Schedule sch =
      cfdim::build_schedule(o.r, o.t0, m_seq, o.depth, o.M);

  // Ladder parameter: explicit --s, or the truncated dimension minus a
  // fixed standoff of 0.03.
  double s_used = o.s;
  std::optional<double> s_m;
  if (!(o.s >= 0.0)) {
    cfdim::SpectralOptions sopts;
    const auto rr =
        cfdim::solve_pressure_root(pot, cfdim::alphabet_range(1, o.M), 1e-6,
                                   sopts);
    s_m = rr.root;
    s_used = rr.root - 0.03;
  }
  if (!(s_used > 0.5 && s_used < 1.0)) {
    throw cfdim::Error(
        "sample: ladder parameter s = " + format_double(s_used) +
        " lies outside (1/2, 1); pass --s explicitly");
  }
  const cfdim::GammaLadder lad = cfdim::gamma_ladder(o.r, s_used);

  std::ofstream csv;
  if (!o.emit.empty()) {
    csv.open(o.emit);
    if (!csv) {
      throw cfdim::Error("cannot open '" + o.emit + "' for writing");
    }
    csv << "seed,depth,numerator,denominator,float64_value\n";
  }

  cfdim::MeasureCache cache;
  long long membership_failures = 0;
  long long widened_total = 0;
  long long widened_points = 0;
  double max_consistency = 0.0;
  for (int i = 0; i < o.count; ++i) {
    const std::uint64_t seed = o.seed + static_cast<std::uint64_t>(i);
    const auto pt = cfdim::generate_point(sch, lad, pot, seed);
    widened_total += pt.widened_windows;
    if (pt.widened_windows > 0) ++widened_points;
    for (int j = 1; j <= sch.J; ++j) {
      if (!cfdim::membership_at_level(pt, sch, pot, j)) {
        ++membership_failures;
      }
    }
    if (o.measure) {
      const auto tree = cfdim::assign_measure(sch, lad, pot, pt, &cache);
      max_consistency =
          std::max(max_consistency, tree.max_consistency_error);
    }
    if (csv.is_open()) {
      const cfdim::BigInt num = boost::multiprecision::numerator(pt.value);
      const cfdim::BigInt den = boost::multiprecision::denominator(pt.value);
      csv << seed << "," << pt.word.size() << "," << num.str() << ","
          << den.str() << "," << format_double(cfdim::to_double(pt.value))
          << "\n";
    }
  }
  if (csv.is_open() && !csv.good()) {
    throw cfdim::Error("short write to '" + o.emit + "'");
  }

  result["count"] = o.count;
  result["seed_first"] = o.seed;
  result["word_depth"] = sch.final_depth();
  result["s"] = s_used;
  if (s_m) result["s_M"] = *s_m;
  result["schedule"] = {{"r", sch.r}, {"t0", sch.t0}, {"J", sch.J},
                        {"M", sch.M}, {"t", sch.t},  {"m", sch.m},
                        {"l", sch.l}, {"n", sch.n}};
  result["membership_checks"] = static_cast<long long>(o.count) * sch.J;
  result["membership_failures"] = membership_failures;
  result["widened_windows_total"] = widened_total;
  result["widened_point_rate"] =
      static_cast<double>(widened_points) / static_cast<double>(o.count);
  if (widened_total > 0) {
    warnings.push_back("some exponent windows contained no integer and were "
                       "widened to the nearest admissible digit");
  }
  if (o.measure) {
    result["measure"] = {{"max_consistency_error", max_consistency},
                         {"families", cache.norms.size()}};
  }
  if (!o.emit.empty()) result["emitted"] = o.emit;
  if (membership_failures > 0) {
    warnings.push_back("generated points failed the membership check");
    return 3;
  }
  return 0;
}

std::vector<double> read_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cfdim::Error("cannot open '" + path + "' for reading");
  std::vector<double> pts;
  std::string line;
  int column = -1;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      // Header mode: a sample-emitted file names its value column.
      if (line.find("float64_value") != std::string::npos) {
        std::stringstream ss(line);
        std::string cell;
        int idx = 0;
        while (std::getline(ss, cell, ',')) {
          if (cell == "float64_value") column = idx;
          ++idx;
        }
        continue;
      }
      column = -1;  // headerless: one value per line
    }
    std::string cell = line;
    if (column >= 0) {
      std::stringstream ss(line);
      int idx = 0;
      while (std::getline(ss, cell, ',') && idx < column) ++idx;
      if (idx != column) {
        throw cfdim::Error("row with too few columns in '" + path + "'");
      }
    }
    try {
      std::size_t used = 0;
      const double v = std::stod(cell, &used);
      if (used != cell.size()) throw std::invalid_argument(cell);
      pts.push_back(v);
    } catch (const std::exception&) {
      throw cfdim::Error("malformed value '" + cell + "' in '" + path + "'");
    }
  }
  if (pts.empty()) throw cfdim::Error("no data points in '" + path + "'");
  return pts;
}

int run_boxdim(const BoxdimOpts& o, ordered_json& result,
               std::vector<std::string>& /*warnings*/) {
  const std::vector<double> pts = read_points_csv(o.points);
  const std::vector<double> scales =
      parse_double_list(o.scales, "boxdim: scales");
  const auto res = cfdim::box_count_dimension(pts, scales);
  result["slope"] = res.slope;
  result["r2"] = res.r2;
  result["points"] = pts.size();
  ordered_json counts = ordered_json::array();
  for (const auto& [scale, boxes] : res.counts) {
    counts.push_back({{"scale", scale}, {"boxes", boxes}});
  }
  result["counts"] = counts;
  return 0;
}

// ---------------------------------------------------------------------------
// Config-file merge: JSON object whose keys are long option names (without
// dashes). Command-line flags win over config values; unknown keys are
// usage errors. Arrays are joined with commas, so list-valued options can
// be written either way.
// ---------------------------------------------------------------------------

std::string config_value_to_string(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string joined;
    for (const auto& item : v) {
      if (!joined.empty()) joined += ',';
      if (item.is_string()) {
        joined += item.get<std::string>();
      } else if (item.is_number() || item.is_boolean()) {
        joined += item.dump();
      } else {
        throw cfdim::Error("config: arrays may hold only numbers or strings");
      }
    }
    return joined;
  }
  return v.dump();
}

// Inserts synthesized tokens for config values right after the subcommand
// token, skipping keys the command line already sets.
void merge_config_file(const std::string& path, CLI::App& app,
                       std::vector<std::string>& args) {
  std::ifstream in(path);
  if (!in) throw cfdim::Error("cannot open config file '" + path + "'");
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw cfdim::Error(std::string("config: ") + e.what());
  }
  if (!cfg.is_object()) throw cfdim::Error("config: top level must be an object");

  // The subcommand is the first token naming one.
  CLI::App* sub = nullptr;
  std::size_t sub_pos = args.size();
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (CLI::App* cand = app.get_subcommand_no_throw(args[i])) {
      sub = cand;
      sub_pos = i;
      break;
    }
  }
  if (sub == nullptr) {
    throw cfdim::Error("config: no subcommand named on the command line");
  }

  std::vector<std::string> synthesized;
  for (const auto& [key, value] : cfg.items()) {
    if (key == "config") {
      throw cfdim::Error("config: key 'config' is not allowed inside a "
                         "config file");
    }
    const std::string flag = "--" + key;
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    if (opt == nullptr) opt = app.get_option_no_throw(flag);
    if (opt == nullptr) {
      throw cfdim::Error("config: unknown key '" + key + "' for subcommand '" +
                         sub->get_name() + "'");
    }
    // Command line wins: skip keys already present as tokens.
    const std::string prefix = flag + "=";
    bool on_cli = false;
    for (const auto& a : args) {
      if (a == flag || a.rfind(prefix, 0) == 0) {
        on_cli = true;
        break;
      }
    }
    if (on_cli) continue;
    if (opt->get_expected_min() == 0) {  // a flag
      if (value.is_boolean()) {
        if (value.get<bool>()) synthesized.push_back(flag);
      } else {
        throw cfdim::Error("config: key '" + key + "' must be a boolean");
      }
    } else {
      synthesized.push_back(flag);
      synthesized.push_back(config_value_to_string(value));
    }
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1,
              synthesized.begin(), synthesized.end());
}

// Extracts --config PATH (or --config=PATH) from the raw argument list.
std::optional<std::string> extract_config_path(std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) {
        throw cfdim::Error("--config requires a file path");
      }
      const std::string path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                 args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      return path;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      const std::string path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      return path;
    }
  }
  return std::nullopt;
}

// Effective-configuration echo: feeding this object back via --config (plus
// the same subcommand) reproduces the run.
ordered_json config_echo(const CLI::App& app, const CLI::App& sub) {
  ordered_json cfg = ordered_json::object();
  auto add_from = [&](const CLI::App& a) {
    for (const CLI::Option* opt : a.get_options()) {
      if (opt->get_lnames().empty()) continue;
      const std::string name = opt->get_lnames().front();
      if (name == "config" || name == "help") continue;
      if (opt->get_expected_min() == 0) {
        cfg[name] = opt->count() > 0;
      } else {
        // Single-value options: echo as typed JSON where possible. Options
        // that were neither passed nor given a default stay out of the echo
        // (their effect, if any, is derived and reported in the result).
        const std::string v =
            opt->count() > 0 ? opt->results().front() : opt->get_default_str();
        if (v.empty()) continue;
        const std::string type = opt->get_type_name();
        if (type.find("INT") != std::string::npos ||
            type.find("UINT") != std::string::npos) {
          try {
            cfg[name] = std::stoll(v);
            continue;
          } catch (const std::exception&) {
          }
        }
        if (type.find("FLOAT") != std::string::npos) {
          try {
            cfg[name] = std::stod(v);
            continue;
          } catch (const std::exception&) {
          }
        }
        cfg[name] = v;
      }
    }
  };
  add_from(sub);
  add_from(app);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  GlobalOpts g;
  GrOpts gr;
  PressureOpts pr;
  DimensionOpts dim;
  SampleOpts smp;
  BoxdimOpts box;

  CLI::App app{"cfdim: dimension toolkit for shrinking-target sets of "
               "continued fractions"};
  app.require_subcommand(1);
  // --h is a real option on several subcommands, so help is long-form only.
  app.set_help_flag("--help", "print this help and exit");
  app.add_option("--config", "JSON config file; command-line flags win")
      ->expected(1);
  app.add_option("--threads", g.threads, "worker threads for enumerations")
      ->default_val(1)
      ->check(CLI::PositiveNumber);
  app.add_flag("--deterministic", g.deterministic,
               "single-threaded, byte-stable output (wall time reported as 0)");
  app.add_option("--json-indent", g.json_indent,
                 "stdout JSON indent (0 = compact)")
      ->default_val(2)
      ->check(CLI::Range(0, 10));
  app.add_flag("--force", g.force, "run past the enumeration work budget");

  CLI::App* c_gr = app.add_subcommand(
      "gr", "growth exponent g_r(s) by the recursive and closed routes");
  c_gr->fallthrough();
  c_gr->set_help_flag("--help", "print this help and exit");
  c_gr->add_option("--r", gr.r, "family order r >= 1")->required();
  c_gr->add_option("--s", gr.s, "parameter s in [0,2]")->required();
  c_gr->add_option("--method", gr.method, "recursive | closed | both")
      ->default_val("both");

  CLI::App* c_pr = app.add_subcommand(
      "pressure", "pressure of the weighted system at fixed s");
  c_pr->fallthrough();
  c_pr->set_help_flag("--help", "print this help and exit");
  c_pr->add_option("--alphabet", pr.alphabet,
                   "digit set: '1..M' or 'a,b,c'")->required();
  c_pr->add_option("--r", pr.r, "family order r >= 1")->default_val(1);
  c_pr->add_option("--tau", pr.tau, "tau descriptor (const:v | expr:e)")
      ->default_val("const:1");
  c_pr->add_option("--h", pr.h, "h descriptor (logT | logB:v | const:v | expr:e)")
      ->default_val("logT");
  c_pr->add_option("--s", pr.s, "parameter s")->required();
  c_pr->add_option("--method", pr.method, "brute | spectral | both")
      ->default_val("both");
  c_pr->add_option("--n", pr.n, "brute enumeration depth")->default_val(16);
  c_pr->add_option("--grid", pr.grid, "spectral collocation points")
      ->default_val(64);

  CLI::App* c_dim = app.add_subcommand(
      "dimension", "dimension via the truncated-system sweep s_M");
  c_dim->fallthrough();
  c_dim->set_help_flag("--help", "print this help and exit");
  c_dim->add_option("--r", dim.r, "family order r >= 1")->default_val(1);
  c_dim->add_option("--tau", dim.tau, "tau descriptor")->default_val("const:1");
  c_dim->add_option("--h", dim.h, "h descriptor")->default_val("logT");
  c_dim->add_option("--M-list", dim.m_list, "increasing truncations, e.g. 20,50,100,200")
      ->default_val("20,50,100,200");
  c_dim->add_option("--method", dim.method, "fn | pressure | both")
      ->default_val("pressure");
  c_dim->add_option("--n", dim.n, "finite depth for fn roots")->default_val(12);
  c_dim->add_option("--fn-mode", dim.fn_mode, "plain | stationary")
      ->default_val("stationary");
  c_dim->add_option("--tol", dim.tol, "bisection tolerance")->default_val(1e-6);
  c_dim->add_option("--grid", dim.grid, "spectral collocation points")
      ->default_val(64);
  c_dim->add_flag("--oracle", dim.oracle,
                  "also report the closed-form limit value (h = logT)");
  c_dim->add_option("--csv", dim.csv, "write the sweep as CSV to this path");

  CLI::App* c_smp = app.add_subcommand(
      "sample", "draw points of the nested Cantor construction");
  c_smp->fallthrough();
  c_smp->set_help_flag("--help", "print this help and exit");
  c_smp->add_option("--r", smp.r, "family order r >= 1")->default_val(1);
  c_smp->add_option("--tau", smp.tau, "tau descriptor")->default_val("const:0.5");
  c_smp->add_option("--h", smp.h, "h descriptor")->default_val("logT");
  c_smp->add_option("--M", smp.M, "digit alphabet bound")->default_val(20);
  c_smp->add_option("--depth", smp.depth, "number of construction levels J")
      ->default_val(3);
  c_smp->add_option("--count", smp.count, "number of points")->default_val(100);
  c_smp->add_option("--seed", smp.seed, "first seed; point i uses seed + i")
      ->default_val(1);
  c_smp->add_option("--t0", smp.t0, "copy-length offset t0 >= 0")->default_val(1);
  c_smp->add_option("--m-rule", smp.m_rule,
                    "free-digit counts: linear:K (m_j = K*j) or list:a,b,...")
      ->default_val("linear:4");
  c_smp->add_option("--s", smp.s,
                    "ladder parameter in (1/2,1); default: s_M - 0.03");
  c_smp->add_option("--emit", smp.emit, "write points as CSV to this path");
  c_smp->add_flag("--measure", smp.measure,
                  "also build the natural measure and report its consistency");

  CLI::App* c_box = app.add_subcommand(
      "boxdim", "box-counting slope of a point set");
  c_box->fallthrough();
  c_box->set_help_flag("--help", "print this help and exit");
  c_box->add_option("--points", box.points,
                    "CSV of points (sample output or one value per line)")
      ->required();
  c_box->add_option("--scales", box.scales, "box sizes, e.g. 1e-2,1e-3,1e-4")
      ->required();

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    const auto config_path = extract_config_path(args);
    if (config_path) merge_config_file(*config_path, app, args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    return emit_error(g, "usage", e.what(), 2);
  } catch (const cfdim::ParseError& e) {
    return emit_error(g, "parse", e.what(), 2);
  } catch (const cfdim::Error& e) {
    return emit_error(g, "usage", e.what(), 2);
  }

  if (g.deterministic) g.threads = 1;

  const CLI::App* sub = app.get_subcommands().front();
  ordered_json result = ordered_json::object();
  std::vector<std::string> warnings;
  const auto t_start = std::chrono::steady_clock::now();
  int rc = 0;
  try {
    if (sub == c_gr) {
      rc = run_gr(gr, result, warnings);
    } else if (sub == c_pr) {
      rc = run_pressure(pr, g, result, warnings);
    } else if (sub == c_dim) {
      rc = run_dimension(dim, g, result, warnings);
    } else if (sub == c_smp) {
      rc = run_sample(smp, g, result, warnings);
    } else {
      rc = run_boxdim(box, result, warnings);
    }
  } catch (const cfdim::ParseError& e) {
    return emit_error(g, "parse", e.what(), 2);
  } catch (const cfdim::BudgetError& e) {
    return emit_error(g, "budget", e.what(), 2);
  } catch (const cfdim::ConvergenceError& e) {
    return emit_error(g, "convergence", e.what(), 3);
  } catch (const cfdim::MonotonicityError& e) {
    return emit_error(g, "monotonicity", e.what(), 3);
  } catch (const cfdim::Error& e) {
    return emit_error(g, "domain", e.what(), 2);
  } catch (const std::exception& e) {
    return emit_error(g, "io", e.what(), 2);
  }
  const auto t_end = std::chrono::steady_clock::now();
  const double wall =
      g.deterministic
          ? 0.0
          : std::chrono::duration<double>(t_end - t_start).count();

  ordered_json doc;
  doc["version"] = cfdim::kVersion;
  doc["subcommand"] = sub->get_name();
  doc["config"] = config_echo(app, *sub);
  doc["result"] = result;
  doc["warnings"] = warnings;
  doc["wall_time_s"] = wall;
  for (const auto& w : warnings) std::cerr << "cfdim: warning: " << w << "\n";
  emit_json(doc, g.json_indent);
  return rc;
}
