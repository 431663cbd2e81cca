#include "cnmf/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cnmf/compression.hpp"
#include "cnmf/data_io.hpp"
#include "cnmf/errors.hpp"
#include "cnmf/matrix.hpp"
#include "cnmf/metrics.hpp"
#include "cnmf/solvers.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cnmf::cli {
namespace {

constexpr std::string_view kTraceHeader =
    "algorithm,seed,iteration,error,elapsed_seconds\n";

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// One option bag shared by all subcommands; only the parsed subcommand's
// bindings are ever filled in.
struct Options {
  std::string algo = "fasthals";
  std::size_t k = 2;
  std::size_t q = 0;
  std::size_t w = 4;
  double alpha = 0.0;
  double beta = 0.0;
  std::size_t iters = 200;
  double tol = 1e-9;
  std::size_t error_interval = 5;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string input;
  std::string format = "csv";
  std::string out;
  std::string config;
  std::size_t jobs = 1;
  bool no_normalize = false;
  std::size_t pairs = 200;

  // dataset extras
  bool csv_header = false;
  bool per_file = false;
  std::size_t vocab_size = 1000;
  std::size_t max_docs = 5000;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t rank = 1;
  double decay = 0.0;
  double noise = 0.0;
  std::uint64_t data_seed = 1;

  // sweep grids; an empty grid falls back to the single value above
  std::vector<std::size_t> k_grid;
  std::vector<std::size_t> q_grid;
  std::vector<std::size_t> w_grid;
  std::vector<double> alpha_grid;
  std::vector<double> beta_grid;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

DatasetFormat parse_format(std::string_view name) {
  if (name == "csv") return DatasetFormat::dense_csv;
  if (name == "mm") return DatasetFormat::matrix_market;
  if (name == "pgm-dir") return DatasetFormat::pgm_dir;
  if (name == "corpus") return DatasetFormat::corpus;
  if (name == "synthetic") return DatasetFormat::synthetic;
  throw ConfigError("unknown dataset format: " + std::string(name));
}

DatasetDescriptor make_descriptor(const Options& o) {
  DatasetDescriptor dd;
  dd.format = parse_format(o.format);
  if (dd.format != DatasetFormat::synthetic && o.input.empty())
    throw ConfigError("--input is required for format " + o.format);
  dd.name = o.input.empty() ? "synthetic" : o.input;
  dd.path = o.input;
  dd.csv_header = o.csv_header;
  dd.corpus_per_line = !o.per_file;
  dd.vocab_size = o.vocab_size;
  dd.max_docs = o.max_docs;
  dd.synthetic = {o.rows, o.cols, o.rank, o.decay, o.noise, o.data_seed};
  return dd;
}

// Required options are enforced here, not by the parser, so that a config
// file can supply them too.
void require_out(const Options& o) {
  if (o.out.empty()) throw ConfigError("--out is required");
}

// The run seed drives both the factor initialization and the sketch draw.
SolverConfig make_config(const Options& o, std::uint64_t seed) {
  SolverConfig c;
  c.algorithm = parse_algorithm(o.algo);
  c.k = o.k;
  c.alpha = o.alpha;
  c.beta = o.beta;
  c.max_iterations = o.iters;
  c.rel_tolerance = o.tol;
  c.error_interval = o.error_interval;
  c.seed = seed;
  c.normalize_a = !o.no_normalize;
  c.sketch.q = o.q;
  c.sketch.power_iterations = o.w;
  c.sketch.seed = seed;
  return c;
}

RunResult solve(const Dataset& data, const SolverConfig& cfg) {
  return data.is_sparse ? cnmf::run(data.sparse, cfg) : cnmf::run(data.dense, cfg);
}

std::size_t data_rows(const Dataset& d) {
  return d.is_sparse ? d.sparse.rows : d.dense.rows;
}
std::size_t data_cols(const Dataset& d) {
  return d.is_sparse ? d.sparse.cols : d.dense.cols;
}

bool is_input_class(const std::exception& e) {
  return dynamic_cast<const ConfigError*>(&e) != nullptr ||
         dynamic_cast<const InputError*>(&e) != nullptr ||
         dynamic_cast<const IoError*>(&e) != nullptr;  // covers ParseError
}

// Artifacts are staged next to their target and renamed into place, so a
// crash mid-write never leaves a truncated file under the final name.
void write_text_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

void save_matrix_atomic(const DenseMatrix& m, const fs::path& path) {
  fs::path tmp = path;
  tmp += ".tmp";
  save_dense_csv(m, tmp.string());
  fs::rename(tmp, path);
}

void append_trace_rows(std::string& out, std::string_view algo,
                       std::uint64_t seed, const RunTrace& t) {
  for (const auto& r : t.records) {
    out += algo;
    out += ',';
    out += std::to_string(seed);
    out += ',';
    out += std::to_string(r.iteration);
    out += ',';
    out += fmt(r.error);
    out += ',';
    out += fmt(r.elapsed_seconds);
    out += '\n';
  }
}

double final_error(const RunTrace& t) {
  return t.records.empty() ? kNan : t.records.back().error;
}

json summary_json(const SolverConfig& cfg, const RunTrace& t) {
  json j;
  j["algorithm"] = std::string(algorithm_name(cfg.algorithm));
  j["k"] = cfg.k;
  j["q"] = t.estimate.q;
  j["w"] = t.power_iterations;
  j["alpha"] = cfg.alpha;
  j["beta"] = cfg.beta;
  j["final_error"] = final_error(t);
  j["gini_b"] = t.gini_b;  // NaN serializes as null
  j["flops_per_iter"] = t.estimate.flops_per_iteration;
  j["memory_floats"] = t.estimate.memory_floats;
  j["iterations_run"] = t.iterations_run;
  j["converged"] = t.status == RunStatus::converged;
  return j;
}

json trace_json(const SolverConfig& cfg, const RunTrace& t) {
  json recs = json::array();
  for (const auto& r : t.records)
    recs.push_back({{"iteration", r.iteration},
                    {"error", r.error},
                    {"elapsed_seconds", r.elapsed_seconds}});
  json j;
  j["algorithm"] = std::string(algorithm_name(cfg.algorithm));
  j["seed"] = cfg.seed;
  j["status"] = std::string(run_status_name(t.status));
  j["message"] = t.message;
  j["update_seconds"] = t.update_seconds;
  j["records"] = std::move(recs);
  return j;
}

// Result slots are indexed by plan position, so aggregation order (and with
// it every emitted byte of numeric output) is independent of scheduling.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (std::size_t t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1))
        fn(i);
    });
  for (auto& th : pool) th.join();
}

struct Outcome {
  RunTrace trace;
  bool ok = false;
  bool input_failure = false;
  std::string status;
  std::string message;
};

// Never throws: failures are captured in the outcome so sibling runs proceed.
Outcome execute(const Dataset& data, const SolverConfig& cfg) {
  Outcome out;
  try {
    RunResult res = solve(data, cfg);
    out.trace = std::move(res.trace);
    out.ok = true;
    out.status = std::string(run_status_name(out.trace.status));
    out.message = out.trace.message;
  } catch (const std::exception& e) {
    out.input_failure = is_input_class(e);
    out.status = "error";
    out.message = e.what();
  }
  return out;
}

// Commas inside failure messages would break the naive CSV reader.
std::string sanitize_cell(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

// Exit status: input and configuration problems dominate runtime failures.
int plan_exit_code(const std::vector<Outcome>& results) {
  bool any_input = false;
  bool any_runtime = false;
  for (const auto& r : results) {
    if (!r.ok)
      (r.input_failure ? any_input : any_runtime) = true;
    else if (r.trace.status == RunStatus::aborted)
      any_runtime = true;
  }
  return any_input ? 2 : any_runtime ? 1 : 0;
}

void report_failures(const std::vector<Outcome>& results,
                     const std::vector<std::string>& labels) {
  for (std::size_t i = 0; i < results.size(); ++i) {
    const Outcome& r = results[i];
    if (!r.ok || r.trace.status == RunStatus::aborted)
      std::cerr << "cnmf: " << labels[i] << ": " << r.status
                << (r.message.empty() ? "" : ": " + r.message) << "\n";
  }
}

int cmd_factorize(const Options& o) {
  require_out(o);
  const Dataset data = load_dataset(make_descriptor(o));
  const SolverConfig cfg = make_config(o, o.seed);
  const RunResult res = solve(data, cfg);

  const fs::path dir(o.out);
  fs::create_directories(dir);
  save_matrix_atomic(res.factors.a, dir / "a.csv");
  save_matrix_atomic(res.factors.b, dir / "b.csv");
  std::string trace{kTraceHeader};
  append_trace_rows(trace, algorithm_name(cfg.algorithm), cfg.seed, res.trace);
  write_text_atomic(dir / "trace.csv", trace);
  write_text_atomic(dir / "trace.json", trace_json(cfg, res.trace).dump(2) + "\n");
  write_text_atomic(dir / "summary.json",
                    summary_json(cfg, res.trace).dump(2) + "\n");

  if (res.trace.status == RunStatus::aborted) {
    std::cerr << "cnmf: run aborted: " << res.trace.message << "\n";
    return 1;
  }
  return 0;
}

int cmd_compare(const Options& o) {
  require_out(o);
  const Dataset data = load_dataset(make_descriptor(o));
  const std::size_t d = data_rows(data);
  const std::size_t n = data_cols(data);

  constexpr Algorithm kOrder[] = {Algorithm::mu,    Algorithm::hals,
                                  Algorithm::fasthals, Algorithm::mu_rp,
                                  Algorithm::hals_rp,  Algorithm::fasthals_rp};
  struct Unit {
    Algorithm algo;
    std::uint64_t seed;
  };
  std::vector<Unit> plan;
  for (Algorithm a : kOrder)
    for (std::uint64_t s : o.seeds) plan.push_back({a, s});

  std::vector<Outcome> results(plan.size());
  parallel_for(plan.size(), o.jobs, [&](std::size_t i) {
    SolverConfig cfg = make_config(o, plan[i].seed);
    cfg.algorithm = plan[i].algo;
    results[i] = execute(data, cfg);
  });

  std::string runs{kTraceHeader};
  std::string summary{"algorithm,seed,final_error,gini_b,iterations_run,status\n"};
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const std::string name{algorithm_name(plan[i].algo)};
    labels.push_back(name + " seed " + std::to_string(plan[i].seed));
    const Outcome& r = results[i];
    if (r.ok) append_trace_rows(runs, name, plan[i].seed, r.trace);
    summary += name;
    summary += ',';
    summary += std::to_string(plan[i].seed);
    summary += ',';
    summary += fmt(r.ok ? final_error(r.trace) : kNan);
    summary += ',';
    summary += fmt(r.ok ? r.trace.gini_b : kNan);
    summary += ',';
    summary += std::to_string(r.ok ? r.trace.iterations_run : 0);
    summary += ',';
    summary += sanitize_cell(r.status);
    summary += '\n';
  }

  std::string table{"algorithm,flops_per_iter,median_seconds_per_update,memory_floats\n"};
  for (std::size_t a = 0; a < std::size(kOrder); ++a) {
    double flops = kNan;
    double memory = kNan;
    try {
      const CostEstimate e =
          estimate_cost(kOrder[a], d, n, o.k, is_rp(kOrder[a]) ? o.q : 0);
      flops = e.flops_per_iteration;
      memory = e.memory_floats;
    } catch (const std::exception&) {
      // invalid geometry for this variant; the run rows carry the message
    }
    std::vector<double> secs;
    for (std::size_t i = 0; i < plan.size(); ++i)
      if (plan[i].algo == kOrder[a] && results[i].ok &&
          results[i].trace.iterations_run > 0)
        secs.push_back(results[i].trace.update_seconds /
                       static_cast<double>(results[i].trace.iterations_run));
    table += std::string(algorithm_name(kOrder[a]));
    table += ',';
    table += fmt(flops);
    table += ',';
    table += fmt(secs.empty() ? kNan : median(std::move(secs)));
    table += ',';
    table += fmt(memory);
    table += '\n';
  }

  const fs::path dir(o.out);
  fs::create_directories(dir);
  write_text_atomic(dir / "runs.csv", runs);
  write_text_atomic(dir / "runs_summary.csv", summary);
  write_text_atomic(dir / "table.csv", table);
  report_failures(results, labels);
  return plan_exit_code(results);
}

int cmd_sweep(const Options& o) {
  require_out(o);
  const Dataset data = load_dataset(make_descriptor(o));

  const auto ks = o.k_grid.empty() ? std::vector<std::size_t>{o.k} : o.k_grid;
  const auto qs = o.q_grid.empty() ? std::vector<std::size_t>{o.q} : o.q_grid;
  const auto ws = o.w_grid.empty() ? std::vector<std::size_t>{o.w} : o.w_grid;
  const auto alphas = o.alpha_grid.empty() ? std::vector<double>{o.alpha} : o.alpha_grid;
  const auto betas = o.beta_grid.empty() ? std::vector<double>{o.beta} : o.beta_grid;

  struct Cell {
    std::size_t k, q, w;
    double alpha, beta;
  };
  std::vector<Cell> cells;
  for (std::size_t k : ks)
    for (std::size_t q : qs)
      for (std::size_t w : ws)
        for (double alpha : alphas)
          for (double beta : betas) cells.push_back({k, q, w, alpha, beta});

  struct Unit {
    std::size_t cell;
    std::uint64_t seed;
  };
  std::vector<Unit> plan;
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (std::uint64_t s : o.seeds) plan.push_back({c, s});

  const std::string name{algorithm_name(parse_algorithm(o.algo))};
  std::vector<Outcome> results(plan.size());
  parallel_for(plan.size(), o.jobs, [&](std::size_t i) {
    const Cell& c = cells[plan[i].cell];
    SolverConfig cfg = make_config(o, plan[i].seed);
    cfg.k = c.k;
    cfg.sketch.q = c.q;
    cfg.sketch.power_iterations = c.w;
    cfg.alpha = c.alpha;
    cfg.beta = c.beta;
    results[i] = execute(data, cfg);
  });

  auto cell_prefix = [&](const Cell& c) {
    std::string row = name;
    row += ',';
    row += std::to_string(c.k);
    row += ',';
    row += std::to_string(c.q);
    row += ',';
    row += std::to_string(c.w);
    row += ',';
    row += fmt(c.alpha);
    row += ',';
    row += fmt(c.beta);
    return row;
  };

  std::string raw{"algorithm,k,q,w,alpha,beta,seed,final_error,gini_b,iterations_run,status\n"};
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const Cell& c = cells[plan[i].cell];
    const Outcome& r = results[i];
    labels.push_back(name + " k=" + std::to_string(c.k) +
                     " seed " + std::to_string(plan[i].seed));
    raw += cell_prefix(c);
    raw += ',';
    raw += std::to_string(plan[i].seed);
    raw += ',';
    raw += fmt(r.ok ? final_error(r.trace) : kNan);
    raw += ',';
    raw += fmt(r.ok ? r.trace.gini_b : kNan);
    raw += ',';
    raw += std::to_string(r.ok ? r.trace.iterations_run : 0);
    raw += ',';
    raw += sanitize_cell(r.status);
    raw += '\n';
  }

  std::string sheet{"algorithm,k,q,w,alpha,beta,median_final_error,median_gini_b\n"};
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<double> errs;
    std::vector<double> ginis;
    for (std::size_t i = 0; i < plan.size(); ++i) {
      if (plan[i].cell != c || !results[i].ok) continue;
      const double err = final_error(results[i].trace);
      if (std::isfinite(err)) errs.push_back(err);
      if (std::isfinite(results[i].trace.gini_b))
        ginis.push_back(results[i].trace.gini_b);
    }
    sheet += cell_prefix(cells[c]);
    sheet += ',';
    sheet += fmt(errs.empty() ? kNan : median(std::move(errs)));
    sheet += ',';
    sheet += fmt(ginis.empty() ? kNan : median(std::move(ginis)));
    sheet += '\n';
  }

  const fs::path dir(o.out);
  fs::create_directories(dir);
  write_text_atomic(dir / "sweep_runs.csv", raw);
  write_text_atomic(dir / "sweep.csv", sheet);
  report_failures(results, labels);
  return plan_exit_code(results);
}

int cmd_project(const Options& o) {
  require_out(o);
  if (o.q == 0) throw ConfigError("--q is required");
  const Dataset data = load_dataset(make_descriptor(o));
  const SketchConfig sc{o.q, o.w, o.seed};
  const ProjectorPair p = data.is_sparse ? build_projectors(data.sparse, sc)
                                         : build_projectors(data.dense, sc);
  const DenseMatrix xhat =
      data.is_sparse ? compress_left(data.sparse, p) : compress_left(data.dense, p);
  const DenseMatrix xcheck =
      data.is_sparse ? compress_right(data.sparse, p) : compress_right(data.dense, p);

  // The distortion metric walks columns of the uncompressed matrix; desk
  // scale makes a one-off densification acceptable here.
  DenseMatrix densified;
  if (data.is_sparse) densified = data.sparse.to_dense();
  const DenseMatrix& x = data.is_sparse ? densified : data.dense;
  const DistortionStats stats = pairwise_distortion(x, p.left, o.pairs, o.seed);

  json report;
  report["q"] = o.q;
  report["w"] = o.w;
  report["seed"] = o.seed;
  report["sample_pairs"] = o.pairs;
  report["max_relative"] = stats.max_relative;
  report["mean_relative"] = stats.mean_relative;
  report["xhat_rows"] = xhat.rows;
  report["xhat_cols"] = xhat.cols;
  report["xcheck_rows"] = xcheck.rows;
  report["xcheck_cols"] = xcheck.cols;

  const fs::path dir(o.out);
  fs::create_directories(dir);
  save_matrix_atomic(xhat, dir / "xhat.csv");
  save_matrix_atomic(xcheck, dir / "xcheck.csv");
  write_text_atomic(dir / "distortion.json", report.dump(2) + "\n");
  return 0;
}

int cmd_estimate(const Options& o) {
  if (o.rows == 0 || o.cols == 0)
    throw ConfigError("--rows and --cols are required");
  const CostEstimate e =
      estimate_cost(parse_algorithm(o.algo), o.rows, o.cols, o.k, o.q);
  json j;
  j["algorithm"] = std::string(algorithm_name(e.algorithm));
  j["d"] = e.d;
  j["n"] = e.n;
  j["k"] = e.k;
  j["q"] = e.q;
  j["flops_per_iter"] = e.flops_per_iteration;
  j["memory_floats"] = e.memory_floats;
  std::cout << j.dump(2) << "\n";
  return 0;
}

// Flat key=value file; '#' and ';' start comment lines.
std::vector<std::pair<std::string, std::string>> read_config_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  auto trim = [](const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  std::vector<std::pair<std::string, std::string>> items;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ParseError(path + ": line " + std::to_string(lineno) +
                       ": expected key=value");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty())
      throw ParseError(path + ": line " + std::to_string(lineno) + ": empty key");
    items.emplace_back(key, trim(t.substr(eq + 1)));
  }
  return items;
}

bool flag_value(const std::string& key, std::string v) {
  for (char& c : v) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key " + key + " expects a boolean, got: " + v);
}

// Command-line tokens for config keys the explicit arguments left unset.
// Keys name long options without the leading dashes; the last occurrence of
// a repeated key wins.
std::vector<std::string> config_extras(const std::string& path, CLI::App& sub) {
  const auto items = read_config_file(path);
  std::map<std::string, std::size_t> last;
  for (std::size_t i = 0; i < items.size(); ++i) last[items[i].first] = i;

  std::vector<std::string> extra;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& [key, value] = items[i];
    if (last[key] != i) continue;
    if (key == "config") throw ConfigError("config files cannot nest");
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (opt == nullptr)
      throw ConfigError("unknown config key for " + sub.get_name() + ": " + key);
    if (opt->count() > 0) continue;  // explicit flags override the file
    if (opt->get_expected_max() == 0) {
      if (flag_value(key, value)) extra.push_back("--" + key);
    } else {
      extra.push_back("--" + key);
      extra.push_back(value);
    }
  }
  return extra;
}

struct Subcommands {
  CLI::App* factorize = nullptr;
  CLI::App* compare = nullptr;
  CLI::App* sweep = nullptr;
  CLI::App* project = nullptr;
  CLI::App* estimate = nullptr;
};

Subcommands build_cli(CLI::App& app, Options& o) {
  auto add_dataset = [&](CLI::App* s) {
    s->add_option("--input", o.input, "input path (omit for synthetic data)");
    s->add_option("--format", o.format, "csv, mm, pgm-dir, corpus, synthetic")
        ->capture_default_str();
    s->add_flag("--csv-header", o.csv_header, "first CSV line is a header");
    s->add_flag("--per-file", o.per_file, "corpus: one document per file");
    s->add_option("--vocab-size", o.vocab_size, "corpus vocabulary size")
        ->capture_default_str();
    s->add_option("--max-docs", o.max_docs, "corpus document cap")
        ->capture_default_str();
    s->add_option("--rows", o.rows, "synthetic row count");
    s->add_option("--cols", o.cols, "synthetic column count");
    s->add_option("--rank", o.rank, "synthetic true rank")->capture_default_str();
    s->add_option("--decay", o.decay, "synthetic spectrum decay exponent")
        ->capture_default_str();
    s->add_option("--noise", o.noise, "synthetic noise standard deviation")
        ->capture_default_str();
    s->add_option("--data-seed", o.data_seed, "synthetic generator seed")
        ->capture_default_str();
    s->add_option("--config", o.config,
                  "key=value file of option defaults; explicit flags win");
  };
  auto add_solver = [&](CLI::App* s, bool penalties) {
    s->add_option("--k", o.k, "factorization rank")->capture_default_str();
    s->add_option("--q", o.q, "compressed dimension (compressed variants)");
    s->add_option("--w", o.w, "power iterations for the sketch")
        ->capture_default_str();
    s->add_option("--iters", o.iters, "maximum iterations")->capture_default_str();
    s->add_option("--tol", o.tol, "relative convergence tolerance")
        ->capture_default_str();
    s->add_option("--error-interval", o.error_interval,
                  "iterations between error evaluations")
        ->capture_default_str();
    s->add_flag("--no-normalize", o.no_normalize,
                "disable column normalization in the fasthals variants");
    if (penalties) {
      s->add_option("--alpha", o.alpha, "L1 penalty on B")->capture_default_str();
      s->add_option("--beta", o.beta, "L2 penalty on B")->capture_default_str();
    }
  };
  auto add_out = [&](CLI::App* s) {
    s->add_option("--out", o.out, "output directory (required)");
  };

  CLI::App* fact = app.add_subcommand("factorize", "run one factorization");
  add_dataset(fact);
  add_solver(fact, true);
  add_out(fact);
  fact->add_option("--algo", o.algo,
                   "mu, hals, fasthals, mu-rp, hals-rp, fasthals-rp")
      ->capture_default_str();
  fact->add_option("--seed", o.seed, "run seed (factors and sketch)")
      ->capture_default_str();

  CLI::App* comp = app.add_subcommand(
      "compare", "run every algorithm over a set of seeds");
  add_dataset(comp);
  add_solver(comp, false);
  add_out(comp);
  comp->add_option("--seeds", o.seeds, "comma-separated run seeds")
      ->delimiter(',')
      ->capture_default_str();
  comp->add_option("--jobs", o.jobs, "worker threads")->capture_default_str();

  CLI::App* sweep = app.add_subcommand(
      "sweep", "grid of configurations, one algorithm, medians over seeds");
  add_dataset(sweep);
  add_solver(sweep, true);
  add_out(sweep);
  sweep->add_option("--algo", o.algo,
                    "mu, hals, fasthals, mu-rp, hals-rp, fasthals-rp")
      ->capture_default_str();
  sweep->add_option("--seeds", o.seeds, "comma-separated run seeds")
      ->delimiter(',')
      ->capture_default_str();
  sweep->add_option("--jobs", o.jobs, "worker threads")->capture_default_str();
  sweep->add_option("--k-grid", o.k_grid, "ranks to sweep")->delimiter(',');
  sweep->add_option("--q-grid", o.q_grid, "compressed dimensions to sweep")
      ->delimiter(',');
  sweep->add_option("--w-grid", o.w_grid, "power iteration counts to sweep")
      ->delimiter(',');
  sweep->add_option("--alpha-grid", o.alpha_grid, "L1 penalties to sweep")
      ->delimiter(',');
  sweep->add_option("--beta-grid", o.beta_grid, "L2 penalties to sweep")
      ->delimiter(',');

  CLI::App* proj = app.add_subcommand(
      "project", "write the compressed views and a distortion report");
  add_dataset(proj);
  add_out(proj);
  proj->add_option("--q", o.q, "compressed dimension (required)");
  proj->add_option("--w", o.w, "power iterations for the sketch")
      ->capture_default_str();
  proj->add_option("--seed", o.seed, "sketch seed")->capture_default_str();
  proj->add_option("--pairs", o.pairs, "sampled column pairs")
      ->capture_default_str();

  CLI::App* est = app.add_subcommand(
      "estimate", "print the analytic per-iteration cost model");
  est->add_option("--algo", o.algo,
                  "mu, hals, fasthals, mu-rp, hals-rp, fasthals-rp")
      ->capture_default_str();
  est->add_option("--rows", o.rows, "data row count (required)");
  est->add_option("--cols", o.cols, "data column count (required)");
  est->add_option("--k", o.k, "factorization rank")->capture_default_str();
  est->add_option("--q", o.q, "compressed dimension (compressed variants)");
  est->add_option("--config", o.config,
                  "key=value file of option defaults; explicit flags win");

  return {fact, comp, sweep, proj, est};
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"compressed non-negative matrix factorization toolkit", "cnmf"};
  app.require_subcommand(1);
  Options o;
  const Subcommands subs = build_cli(app, o);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = subs.factorize->parsed()  ? subs.factorize
                  : subs.compare->parsed()  ? subs.compare
                  : subs.sweep->parsed()    ? subs.sweep
                  : subs.project->parsed()  ? subs.project
                                            : subs.estimate;
  try {
    if (!o.config.empty()) {
      // Re-parse with the file-provided tokens appended; keys given
      // explicitly were skipped, so the flags always win. The appended
      // tokens are seen as explicit next round, which ends the recursion.
      const std::vector<std::string> extra = config_extras(o.config, *sub);
      if (!extra.empty()) {
        std::vector<std::string> merged = args;
        merged.insert(merged.end(), extra.begin(), extra.end());
        return run(merged);
      }
    }
    if (sub == subs.factorize) return cmd_factorize(o);
    if (sub == subs.compare) return cmd_compare(o);
    if (sub == subs.sweep) return cmd_sweep(o);
    if (sub == subs.project) return cmd_project(o);
    return cmd_estimate(o);
  } catch (const std::exception& e) {
    std::cerr << "cnmf: " << e.what() << "\n";
    return is_input_class(e) ? 2 : 1;
  }
}

}  // namespace cnmf::cli
