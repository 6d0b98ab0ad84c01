#include "cli.hpp"

#include "esci/config.hpp"
#include "esci/experiments.hpp"
#include "esci/fusers.hpp"
#include "esci/random.hpp"
#include "esci/report_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace esci::cli {
namespace {

namespace fs = std::filesystem;
using experiments::AlgorithmSpec;
using experiments::Provenance;

/// Raw flag values; unset flags fall back to the config file, then defaults.
struct Flags {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  std::size_t runs = 1;
  std::string algorithms;
  std::string importance;
  std::size_t structures = 1;
  std::string trigger;
  std::size_t threads = 0;
  double correlation = 0.9;
  double scale = 1.0;
  std::string input;
  std::string order;
  std::string batches;

  /// Options per flag name; every subcommand registers its own copy.
  std::map<std::string, std::vector<const CLI::Option*>> given;
  bool has(const std::string& name) const {
    auto it = given.find(name);
    if (it == given.end()) return false;
    return std::any_of(it->second.begin(), it->second.end(), [](const CLI::Option* o) { return o->count() > 0; });
  }
};

/// Resolved settings of one invocation plus the effective config they came
/// from (flags > config file > defaults).
struct Settings {
  KeyValueConfig config;
  KeyValueConfig effective;
  std::uint64_t seed = 1;
  std::size_t runs = 1;
  std::vector<std::string> algorithms;
  std::vector<std::string> importance;
  std::size_t structures = 1;
  std::size_t threads = 0;
  fs::path out_dir;

  Provenance provenance(const std::string& command) const {
    return {command, seed, hex64(effective.fingerprint())};
  }
};

std::vector<std::string> split_words(const std::string& text) {
  KeyValueConfig tmp;
  tmp.set("v", text);
  return tmp.get_words("v", {});
}

std::string join(const std::vector<std::string>& words) {
  std::string s;
  for (const auto& w : words) s += (s.empty() ? "" : ",") + w;
  return s;
}

std::vector<std::size_t> parse_indices(const std::string& text, const std::string& what) {
  std::vector<std::size_t> out;
  for (const auto& w : split_words(text)) {
    std::size_t v = 0;
    const auto res = std::from_chars(w.data(), w.data() + w.size(), v);
    if (res.ec != std::errc() || res.ptr != w.data() + w.size()) {
      throw Error(ErrorCode::InvalidArgument, what + ": '" + w + "' is not a nonnegative integer");
    }
    out.push_back(v);
  }
  return out;
}

Settings resolve(const Flags& flags, const std::string& command, std::size_t default_runs,
                 const std::vector<std::string>& default_algorithms, const std::vector<std::string>& default_importance,
                 std::size_t default_structures) {
  Settings s;
  if (!flags.config_path.empty()) s.config = KeyValueConfig::load(flags.config_path);
  const KeyValueConfig& cfg = s.config;

  auto positive = [](std::int64_t v, const char* key) {
    if (v < 0) throw Error(ErrorCode::InvalidArgument, std::string(key) + " must be nonnegative");
    return static_cast<std::size_t>(v);
  };
  s.seed = flags.has("seed") ? flags.seed : static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  s.runs = flags.has("runs") ? flags.runs : positive(cfg.get_int("runs", static_cast<std::int64_t>(default_runs)), "runs");
  s.algorithms = flags.has("algorithms") ? split_words(flags.algorithms) : cfg.get_words("algorithms", default_algorithms);
  s.importance = flags.has("importance") ? split_words(flags.importance) : cfg.get_words("importance", default_importance);
  s.structures = flags.has("structures")
                     ? flags.structures
                     : positive(cfg.get_int("structures", static_cast<std::int64_t>(default_structures)), "structures");
  s.threads = flags.has("threads") ? flags.threads : positive(cfg.get_int("threads", 0), "threads");
  s.out_dir = flags.has("out") ? flags.out_dir : cfg.get_string("out", flags.out_dir);

  if (s.runs == 0) throw Error(ErrorCode::InvalidArgument, "--runs must be >= 1");
  if (s.structures == 0) throw Error(ErrorCode::InvalidArgument, "--structures must be >= 1");
  if (s.algorithms.empty()) throw Error(ErrorCode::InvalidArgument, "at least one algorithm must be selected");

  s.effective.set("command", command);
  s.effective.set("seed", std::to_string(s.seed));
  s.effective.set("runs", std::to_string(s.runs));
  s.effective.set("algorithms", join(s.algorithms));
  s.effective.set("importance", join(s.importance));
  s.effective.set("structures", std::to_string(s.structures));
  return s;
}

/// Collects outputs; each file is written to a temporary name and renamed
/// only after a successful flush, so a failure never leaves a partial file
/// under the final name.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) {
      throw std::runtime_error("cannot create output directory " + dir_.string() + ": " + ec.message());
    }
  }

  void write(const std::string& name, const std::function<void(std::ostream&)>& fill) {
    const fs::path final_path = dir_ / name;
    const fs::path tmp = dir_ / (name + ".tmp");
    {
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
      fill(f);
      f.flush();
      if (!f) throw std::runtime_error("failed writing " + tmp.string());
    }
    fs::rename(tmp, final_path);
    files_.push_back(final_path.string());
  }

  const std::vector<std::string>& files() const { return files_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

void write_config_and_summary(OutputSet& outputs, const Settings& s, experiments::Summary summary) {
  outputs.write("config.txt", [&](std::ostream& o) { s.effective.write(o); });
  summary.config_text = s.effective.to_string();
  summary.files = outputs.files();
  summary.files.push_back((outputs.dir() / "summary.json").string());
  outputs.write("summary.json", [&](std::ostream& o) { experiments::write_summary_json(o, summary); });
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

// ---------------------------------------------------------------------------

int cmd_demo_ellipse(const Flags& flags, std::ostream& out) {
  Settings s = resolve(flags, "demo-ellipse", 1, {"csci", "esci"}, {"inv_trace", "inv_det", "trace_info"}, 10);
  std::vector<EstimatePair> pairs = scenarios::demo_pairs();
  if (!flags.input.empty()) {
    std::ifstream in(flags.input);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open input file " + flags.input);
    std::stringstream buf;
    buf << in.rdbuf();
    pairs = experiments::pairs_from_json(buf.str());
    s.effective.set("input", flags.input);
  }
  if (pairs.empty()) throw Error(ErrorCode::EmptyInput, "no estimate pairs");
  for (const auto& p : pairs) require_valid(p);
  const auto algorithms = experiments::make_algorithms(s.algorithms, s.importance);
  const auto structures =
      experiments::sweep_structures(pairs.size(), s.structures, derive_seed(s.seed, "structure", 0));
  const auto entries = experiments::run_ellipse_sweep(pairs, structures, algorithms);

  OutputSet outputs(s.out_dir);
  const Provenance prov = s.provenance("demo-ellipse");
  outputs.write("ellipses.csv", [&](std::ostream& o) { experiments::write_ellipse_csv(o, entries, prov); });
  outputs.write("fused_pairs.json", [&](std::ostream& o) { o << experiments::sweep_to_json(entries, prov) << '\n'; });

  experiments::Summary summary;
  summary.provenance = prov;
  for (const auto& st : structures) summary.structures.push_back(st.describe());

  out << std::left << std::setw(22) << "algorithm" << std::setw(14) << "trace(P) s0" << "max rel. deviation over "
      << structures.size() << " structures\n";
  for (const auto& a : algorithms) {
    std::vector<const experiments::SweepEntry*> mine;
    for (const auto& e : entries) {
      if (e.algorithm.label() == a.label()) mine.push_back(&e);
    }
    double dev = 0.0;
    for (const auto* e : mine) {
      dev = std::max(dev, relative_deviation(e->fused.P, mine.front()->fused.P));
      dev = std::max(dev, relative_deviation(e->fused.x, mine.front()->fused.x));
    }
    out << std::setw(22) << a.label() << std::setw(14) << fmt(mine.front()->fused.P.trace(), 8) << fmt(dev, 3) << '\n';
    summary.metrics.emplace_back(a.label() + ".trace_structure0", mine.front()->fused.P.trace());
    summary.metrics.emplace_back(a.label() + ".max_relative_deviation", dev);
  }
  write_config_and_summary(outputs, s, std::move(summary));
  out << "wrote " << outputs.files().size() << " files to " << outputs.dir().string() << '\n';
  return kExitOk;
}

int cmd_track(const Flags& flags, std::ostream& out) {
  Settings s = resolve(flags, "track", 500, {"cbci", "csci", "esci"},
                       {"inv_trace", "inv_det", "trace_info", "inv_trace_info"}, 1);
  scenarios::TrackingScenario scenario;
  scenario.apply(s.config);
  scenario.store(s.effective);
  experiments::TrackingOptions opt;
  opt.algorithms = experiments::make_algorithms(s.algorithms, s.importance);
  opt.runs = s.runs;
  opt.seed = s.seed;
  opt.threads = s.threads;
  opt.trigger = scenarios::TriggerPolicy::parse(
      flags.has("trigger") ? flags.trigger : s.config.get_string("trigger", "periodic:10"));
  s.effective.set("trigger", opt.trigger.name());

  const auto result = experiments::run_tracking_benchmark(scenario, opt);

  OutputSet outputs(s.out_dir);
  const Provenance prov = s.provenance("track");
  outputs.write("rmse.csv", [&](std::ostream& o) { experiments::write_rmse_csv(o, result.rmse, prov); });
  outputs.write("cost.csv", [&](std::ostream& o) { experiments::write_cost_csv(o, result.cost, prov); });
  outputs.write("trajectory.csv", [&](std::ostream& o) { experiments::write_trajectory_csv(o, result.trajectory, prov); });

  experiments::Summary summary;
  summary.provenance = prov;
  summary.runs = result.rmse.runs;
  summary.structures = result.rmse.structures;
  out << "tracking benchmark: " << s.runs << " runs, seed " << s.seed << ", trigger " << opt.trigger.name() << '\n';
  out << std::left << std::setw(24) << "algorithm" << std::setw(14) << "mean RMSE" << "final RMSE\n";
  for (const auto& series : result.rmse.series) {
    out << std::setw(24) << series.algorithm.label() << std::setw(14) << fmt(series.mean_rmse())
        << fmt(series.rmse.back()) << '\n';
    summary.metrics.emplace_back(series.algorithm.label() + ".mean_rmse", series.mean_rmse());
  }
  write_config_and_summary(outputs, s, std::move(summary));
  out << "wrote " << outputs.files().size() << " files to " << outputs.dir().string() << '\n';
  return kExitOk;
}

int cmd_robot(const Flags& flags, std::ostream& out) {
  Settings s = resolve(flags, "robot", 100, {"csci", "esci"}, {"inv_trace", "inv_det", "trace_info", "inv_trace_info"},
                       20);
  scenarios::RobotScenario scenario;
  scenario.apply(s.config);
  scenario.store(s.effective);
  experiments::RobotOptions opt;
  opt.algorithms = experiments::make_algorithms(s.algorithms, s.importance);
  opt.runs = s.runs;
  opt.seed = s.seed;
  opt.threads = s.threads;
  opt.structures =
      experiments::sweep_structures(scenario.sensor_count(), s.structures, derive_seed(s.seed, "structure", 0));

  const auto result = experiments::run_robot_benchmark(scenario, opt);

  OutputSet outputs(s.out_dir);
  const Provenance prov = s.provenance("robot");
  outputs.write("rmse.csv", [&](std::ostream& o) { experiments::write_rmse_csv(o, result.rmse, prov); });
  outputs.write("trajectory.csv", [&](std::ostream& o) { experiments::write_trajectory_csv(o, result.trajectory, prov); });

  experiments::Summary summary;
  summary.provenance = prov;
  summary.runs = result.rmse.runs;
  summary.excluded_runs = result.rmse.excluded_runs;
  summary.structures = result.rmse.structures;
  summary.diagnostics = result.rmse.diagnostics;
  out << "robot benchmark: " << s.runs << " runs (" << result.rmse.excluded_runs << " excluded), "
      << opt.structures.size() << " structures, seed " << s.seed << '\n';
  out << std::left << std::setw(24) << "algorithm" << std::setw(14) << "min RMSE" << std::setw(14) << "max RMSE"
      << "spread\n";
  for (const auto& a : opt.algorithms) {
    double lo = INFINITY;
    double hi = -INFINITY;
    for (const auto& series : result.rmse.series) {
      if (series.algorithm.label() != a.label()) continue;
      lo = std::min(lo, series.mean_rmse());
      hi = std::max(hi, series.mean_rmse());
    }
    out << std::setw(24) << a.label() << std::setw(14) << fmt(lo) << std::setw(14) << fmt(hi) << fmt(hi - lo, 3)
        << '\n';
    summary.metrics.emplace_back(a.label() + ".min_mean_rmse", lo);
    summary.metrics.emplace_back(a.label() + ".max_mean_rmse", hi);
  }
  for (const auto& d : result.rmse.diagnostics) out << "  " << d << '\n';
  write_config_and_summary(outputs, s, std::move(summary));
  out << "wrote " << outputs.files().size() << " files to " << outputs.dir().string() << '\n';
  return kExitOk;
}

int cmd_consistency(const Flags& flags, std::ostream& out) {
  Settings s = resolve(flags, "consistency", 100000, {"esci"}, {"inv_trace"}, 1);
  experiments::ConsistencyOptions opt;
  opt.trials = s.runs;
  opt.seed = s.seed;
  if (s.importance.empty()) throw Error(ErrorCode::InvalidArgument, "consistency needs an importance function");
  opt.importance = fusion::parse_importance(s.importance.front());
  opt.correlation = flags.has("correlation") ? flags.correlation : s.config.get_double("correlation", 0.9);
  opt.covariance_scale = flags.has("scale") ? flags.scale : s.config.get_double("scale", 1.0);
  s.effective.set("correlation", opt.correlation);
  s.effective.set("scale", opt.covariance_scale);

  const auto report = experiments::consistency_suite(opt);

  OutputSet outputs(s.out_dir);
  const Provenance prov = s.provenance("consistency");
  experiments::Summary summary;
  summary.provenance = prov;
  summary.runs = report.trials;
  for (Eigen::Index i = 0; i < report.bias_z.size(); ++i) {
    summary.metrics.emplace_back("bias_z_" + std::to_string(i + 1), report.bias_z(i));
  }
  summary.metrics.emplace_back("min_eigen_margin", report.min_eigen_margin);
  summary.metrics.emplace_back("lambda_max", report.lambda_max);
  summary.metrics.emplace_back("mean_nees", report.mean_nees);
  summary.metrics.emplace_back("unbiased", report.unbiased ? 1.0 : 0.0);
  summary.metrics.emplace_back("consistent", report.consistent ? 1.0 : 0.0);

  out << "consistency suite: " << report.trials << " trials, correlation " << opt.correlation << ", covariance scale "
      << opt.covariance_scale << ", f = " << opt.importance.name() << '\n';
  out << "  bias z-scores:";
  for (Eigen::Index i = 0; i < report.bias_z.size(); ++i) out << ' ' << fmt(report.bias_z(i), 3);
  out << "\n  lambda_min(P_f - MSE) = " << fmt(report.min_eigen_margin) << "  (lambda_max(P_f) = "
      << fmt(report.lambda_max) << ")\n";
  out << "  mean NEES = " << fmt(report.mean_nees) << '\n';
  out << "  unbiased: " << (report.unbiased ? "yes" : "no") << ", consistent: " << (report.consistent ? "yes" : "no")
      << '\n';
  write_config_and_summary(outputs, s, std::move(summary));
  out << "wrote " << outputs.files().size() << " files to " << outputs.dir().string() << '\n';
  return kExitOk;
}

int cmd_fuse(const Flags& flags, std::ostream& out) {
  Settings s = resolve(flags, "fuse", 1, {"esci"}, {"inv_trace"}, 1);
  std::ifstream in(flags.input);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open input file " + flags.input);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::vector<EstimatePair> pairs = experiments::pairs_from_json(buf.str());
  if (pairs.empty()) throw Error(ErrorCode::EmptyInput, "input holds no estimate pairs");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (const auto v = validate_pair(pairs[i]); !v) {
      throw Error(v.defect == PairDefect::NotPositiveDefinite ? ErrorCode::NotPositiveDefinite
                  : v.defect == PairDefect::NotSymmetric      ? ErrorCode::NotSymmetric
                                                              : ErrorCode::DimensionMismatch,
                  "pair " + std::to_string(i + 1) + ": " + v.message);
    }
  }
  const std::size_t n = pairs.size();
  fusion::FusionStructure structure = fusion::FusionStructure::batch(n);
  if (!flags.order.empty() || !flags.batches.empty()) {
    std::vector<std::size_t> order;
    if (flags.order.empty()) {
      for (std::size_t i = 0; i < n; ++i) order.push_back(i);
    } else {
      for (std::size_t r : parse_indices(flags.order, "--order")) {
        if (r == 0) throw Error(ErrorCode::InvalidStructure, "--order is 1-based");
        order.push_back(r - 1);
      }
    }
    std::vector<std::size_t> batches = flags.batches.empty() ? std::vector<std::size_t>{n}
                                                             : parse_indices(flags.batches, "--batches");
    structure = fusion::FusionStructure(std::move(order), std::move(batches));
  }
  if (s.algorithms.size() != 1) throw Error(ErrorCode::InvalidArgument, "fuse takes exactly one algorithm");
  const auto algorithms = experiments::make_algorithms(s.algorithms, s.importance);
  if (algorithms.size() != 1) throw Error(ErrorCode::InvalidArgument, "fuse takes exactly one importance function");
  const AlgorithmSpec& a = algorithms.front();
  EstimatePair fused;
  switch (a.algorithm) {
    case experiments::Algorithm::Esci: fused = fusion::esci_recursive(pairs, structure, a.importance); break;
    case experiments::Algorithm::Csci: fused = fusion::csci_fuse(pairs, structure); break;
    case experiments::Algorithm::Cbci: fused = fusion::cbci_fuse(pairs); break;
  }
  out << experiments::pair_to_json(fused, 2) << '\n';
  return out ? kExitOk : kExitFailure;
}

void add_common(CLI::App& sub, Flags& f, bool structures, bool trigger) {
  f.given["config"].push_back(
      sub.add_option("--config", f.config_path, "key = value scenario/run config file")->check(CLI::ExistingFile));
  f.given["out"].push_back(sub.add_option("--out", f.out_dir, "output directory"));
  f.given["seed"].push_back(sub.add_option("--seed", f.seed, "root seed"));
  f.given["runs"].push_back(sub.add_option("--runs", f.runs, "Monte Carlo runs (trials for consistency)"));
  f.given["algorithms"].push_back(sub.add_option("--algorithms", f.algorithms, "comma list of cbci, csci, esci"));
  f.given["importance"].push_back(sub.add_option(
      "--importance", f.importance,
      "comma list of inv_trace, inv_det, trace_info, det_info, weighted_inv_trace, inv_trace_info"));
  f.given["threads"].push_back(sub.add_option("--threads", f.threads, "worker threads (0: all cores)"));
  if (structures) {
    f.given["structures"].push_back(sub.add_option("--structures", f.structures, "number of fusion structures"));
  }
  if (trigger) {
    f.given["trigger"].push_back(sub.add_option("--trigger", f.trigger, "after-all, every or periodic:m"));
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Structure-invariant sequential covariance intersection: demos and benchmarks"};
  app.require_subcommand(1);
  Flags flags;

  auto* demo = app.add_subcommand("demo-ellipse", "fuse the demo pairs under random structures; ellipse CSVs");
  add_common(*demo, flags, true, false);
  demo->add_option("--input", flags.input, "JSON array of {x, P} instead of the demo pairs")->check(CLI::ExistingFile);

  auto* track = app.add_subcommand("track", "linear target tracking Monte Carlo benchmark");
  add_common(*track, flags, false, true);

  auto* robot = app.add_subcommand("robot", "nonlinear robot localization benchmark over fusion structures");
  add_common(*robot, flags, true, false);

  auto* consistency = app.add_subcommand("consistency", "Monte Carlo unbiasedness and consistency check");
  add_common(*consistency, flags, false, false);
  flags.given["correlation"].push_back(
      consistency->add_option("--correlation", flags.correlation, "error correlation in [0, 1]"));
  flags.given["scale"].push_back(consistency->add_option("--scale", flags.scale, "claimed / true covariance scale"));

  auto* fuse = app.add_subcommand("fuse", "fuse a JSON file of estimate pairs and print the result");
  add_common(*fuse, flags, false, false);
  fuse->add_option("input", flags.input, "JSON array of {x, P}")->required();
  fuse->add_option("--order", flags.order, "reception order, 1-based comma list");
  fuse->add_option("--batches", flags.batches, "batch sizes, comma list summing to n");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidInput;
  }

  try {
    if (demo->parsed()) return cmd_demo_ellipse(flags, out);
    if (track->parsed()) return cmd_track(flags, out);
    if (robot->parsed()) return cmd_robot(flags, out);
    if (consistency->parsed()) return cmd_consistency(flags, out);
    if (fuse->parsed()) return cmd_fuse(flags, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::Diverged ? kExitFailure : kExitInvalidInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace esci::cli
