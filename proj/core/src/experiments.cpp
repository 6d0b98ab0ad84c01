#include "esci/experiments.hpp"

#include "esci/fusers.hpp"
#include "esci/random.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <memory>
#include <numeric>
#include <sstream>
#include <thread>

namespace esci::experiments {

using fusion::FusionStructure;
using scenarios::TriggerPolicy;

// ---------------------------------------------------------------------------
// Algorithms

std::string AlgorithmSpec::name() const {
  switch (algorithm) {
    case Algorithm::Cbci: return "CBCI";
    case Algorithm::Csci: return "CSCI";
    case Algorithm::Esci: return "ESCI";
  }
  return "?";
}

std::string AlgorithmSpec::importance_name() const {
  return algorithm == Algorithm::Esci ? importance.name() : "-";
}

std::string AlgorithmSpec::label() const {
  return algorithm == Algorithm::Esci ? name() + ":" + importance.name() : name();
}

std::vector<AlgorithmSpec> make_algorithms(const std::vector<std::string>& algorithms,
                                           const std::vector<std::string>& importances) {
  std::vector<AlgorithmSpec> out;
  for (const auto& a : algorithms) {
    if (a == "cbci") {
      out.push_back(AlgorithmSpec::cbci());
    } else if (a == "csci") {
      out.push_back(AlgorithmSpec::csci());
    } else if (a == "esci") {
      if (importances.empty()) throw Error(ErrorCode::InvalidArgument, "esci needs at least one importance function");
      for (const auto& f : importances) out.push_back(AlgorithmSpec::esci(fusion::parse_importance(f)));
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown algorithm '" + a + "' (cbci, csci, esci)");
    }
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "no algorithm selected");
  return out;
}

namespace {

std::unique_ptr<fusion::SequentialFuser> make_fuser(const AlgorithmSpec& a) {
  if (a.algorithm == Algorithm::Esci) return std::make_unique<fusion::IncrementalFuser>(a.importance);
  return std::make_unique<fusion::CsciFuser>();
}

template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double squared_position_error(const Vector& estimate, const Vector& truth, Eigen::Index ix, Eigen::Index iy) {
  const double dx = estimate(ix) - truth(ix);
  const double dy = estimate(iy) - truth(iy);
  return dx * dx + dy * dy;
}

// sq[run][series][k] -> series with RMSE and per-run means.
void reduce_series(const std::vector<std::vector<std::vector<double>>>& sq, const std::vector<bool>& included,
                   std::vector<RmseSeries>& series, std::size_t horizon) {
  std::size_t used = 0;
  for (bool b : included) used += b ? 1 : 0;
  for (std::size_t s = 0; s < series.size(); ++s) {
    std::vector<double> sum(horizon, 0.0);
    for (std::size_t r = 0; r < sq.size(); ++r) {
      if (!included[r]) continue;
      const auto& e = sq[r][s];
      for (std::size_t k = 0; k < horizon; ++k) sum[k] += e[k];
      series[s].run_mse.push_back(std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(horizon));
    }
    series[s].rmse.resize(horizon);
    for (std::size_t k = 0; k < horizon; ++k) {
      series[s].rmse[k] = used ? std::sqrt(sum[k] / static_cast<double>(used)) : 0.0;
    }
  }
}

std::string algorithms_key(const std::vector<AlgorithmSpec>& algs) {
  std::string s;
  for (const auto& a : algs) s += (s.empty() ? "" : ",") + a.label();
  return s;
}

}  // namespace

double RmseSeries::mean_rmse() const {
  if (rmse.empty()) return 0.0;
  return std::accumulate(rmse.begin(), rmse.end(), 0.0) / static_cast<double>(rmse.size());
}

const RmseSeries& RmseReport::find(const std::string& label, std::size_t structure_id) const {
  for (const auto& s : series) {
    if (s.algorithm.label() == label && s.structure_id == structure_id) return s;
  }
  throw Error(ErrorCode::InvalidArgument, "no RMSE series for " + label);
}

PairedComparison compare_runs(const RmseSeries& lo, const RmseSeries& hi) {
  if (lo.run_mse.size() != hi.run_mse.size()) {
    throw Error(ErrorCode::DimensionMismatch, "compare_runs: series cover different runs");
  }
  const std::size_t n = lo.run_mse.size();
  PairedComparison out;
  if (n == 0) return out;
  std::vector<double> d(n);
  for (std::size_t r = 0; r < n; ++r) d[r] = hi.run_mse[r] - lo.run_mse[r];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double v : d) var += (v - mean) * (v - mean);
  var = n > 1 ? var / static_cast<double>(n - 1) : 0.0;
  out.mean_difference = mean;
  out.standard_error = std::sqrt(var / static_cast<double>(n));
  return out;
}

// ---------------------------------------------------------------------------
// Ellipse sweep

std::vector<FusionStructure> sweep_structures(std::size_t n, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw Error(ErrorCode::InvalidArgument, "at least one structure required");
  std::vector<FusionStructure> out{FusionStructure::batch(n)};
  for (std::uint64_t i = 1; out.size() < count && i < 100000; ++i) {
    FusionStructure s = fusion::random_structure(n, derive_seed(seed, "structure", i));
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(std::move(s));
  }
  return out;
}

std::vector<SweepEntry> run_ellipse_sweep(const std::vector<EstimatePair>& pairs,
                                          const std::vector<FusionStructure>& structures,
                                          const std::vector<AlgorithmSpec>& algorithms, int ellipse_points) {
  if (structures.empty()) throw Error(ErrorCode::InvalidArgument, "run_ellipse_sweep: no structures");
  for (const auto& p : pairs) require_valid(p);
  std::vector<SweepEntry> out;
  for (const auto& a : algorithms) {
    for (std::size_t s = 0; s < structures.size(); ++s) {
      SweepEntry e{a, s, structures[s], {}, {}};
      switch (a.algorithm) {
        case Algorithm::Esci: e.fused = fusion::esci_recursive(pairs, structures[s], a.importance); break;
        case Algorithm::Csci: e.fused = fusion::csci_fuse(pairs, structures[s]); break;
        case Algorithm::Cbci: e.fused = fusion::cbci_fuse(pairs); break;
      }
      if (e.fused.dim() == 2) e.ellipse = esci::ellipse_points(e.fused, ellipse_points);
      out.push_back(std::move(e));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tracking benchmark

TrackingResult run_tracking_benchmark(const scenarios::TrackingScenario& scenario, const TrackingOptions& options) {
  if (options.runs == 0) throw Error(ErrorCode::InvalidArgument, "tracking benchmark: runs must be >= 1");
  if (options.algorithms.empty()) throw Error(ErrorCode::InvalidArgument, "tracking benchmark: no algorithms");
  const std::size_t n = scenario.sensor_count();
  const std::size_t horizon = scenario.horizon;
  const std::size_t n_alg = options.algorithms.size();
  std::vector<filters::LinearModel> models;
  for (std::size_t i = 0; i < n; ++i) {
    models.push_back(scenario.model(i));
    models.back().validate();
  }
  const bool periodic = options.trigger.kind() == TriggerPolicy::Kind::Periodic;
  const std::size_t m = options.trigger.intervals();

  struct RunOutput {
    std::vector<std::vector<double>> sq;
    std::vector<CostRecord> costs;
    TrajectorySample trajectory;
  };
  std::vector<RunOutput> outputs(options.runs);

  parallel_for(options.runs, options.threads, [&](std::size_t run) {
    const std::uint64_t run_seed = derive_seed(options.seed, "run", run);
    const scenarios::Simulation sim = scenarios::simulate_truth_and_measurements(scenario, run_seed, options.simulation);
    std::vector<EstimatePair> local;
    for (std::size_t i = 0; i < n; ++i) local.push_back(scenarios::initial_estimate(scenario, i, run_seed));

    std::vector<std::unique_ptr<fusion::SequentialFuser>> fusers;
    for (const auto& a : options.algorithms) fusers.push_back(make_fuser(a));

    RunOutput& out = outputs[run];
    out.sq.assign(n_alg, std::vector<double>(horizon, 0.0));
    const bool record_cost = run < options.cost_profile_runs;
    const bool record_traj = run == 0;
    if (record_traj) {
      for (const auto& x : sim.truth) out.trajectory.truth.emplace_back(x(0), x(2));
    }

    for (std::size_t k = 1; k <= horizon; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        try {
          local[i] = filters::kf_step(local[i], models[i], sim.measurements[i][k - 1]);
        } catch (const Error& e) {
          std::ostringstream os;
          os << "tracking run " << run << ", step " << k << ", sensor " << i + 1 << ": " << e.what();
          throw Error(e.code(), os.str());
        }
      }
      scenarios::ArrivalSchedule schedule =
          scenarios::generate_arrivals(n, scenario.dt, derive_seed(run_seed, "arrivals", k), options.trigger);
      const auto sequential_plan = scenarios::trigger_plan(schedule);
      schedule.policy = TriggerPolicy::after_all();
      const auto batch_plan = scenarios::trigger_plan(schedule);

      for (std::size_t a = 0; a < n_alg; ++a) {
        const bool is_batch = options.algorithms[a].algorithm == Algorithm::Cbci;
        const auto& plan = is_batch ? batch_plan : sequential_plan;
        auto& fuser = *fusers[a];
        fuser.reset();
        for (const auto& tp : plan) {
          for (std::size_t j = tp.first; j < tp.first + tp.count; ++j) {
            fuser.receive(local[schedule.arrivals[j].sensor]);
          }
          const auto t0 = std::chrono::steady_clock::now();
          fuser.trigger();
          const auto t1 = std::chrono::steady_clock::now();
          const fusion::FusionCost cost = fuser.take_cost();
          if (record_cost) {
            CostRecord rec;
            rec.run = run;
            rec.period = k;
            rec.algorithm = options.algorithms[a].label();
            rec.cost = cost;
            rec.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
            if (periodic && !is_batch) {
              rec.tick = k * m + tp.tick;
              rec.trigger_time = static_cast<double>(rec.tick) * scenario.dt / static_cast<double>(m);
            } else {
              rec.trigger_time = static_cast<double>(k) * scenario.dt + tp.offset;
            }
            out.costs.push_back(std::move(rec));
          }
        }
        const EstimatePair fused = *fuser.fused();
        out.sq[a][k - 1] = squared_position_error(fused.x, sim.truth[k], 0, 2);
        if (record_traj) {
          out.trajectory.estimates[options.algorithms[a].label()].emplace_back(fused.x(0), fused.x(2));
        }
      }
    }
  });

  TrackingResult result;
  RmseReport& report = result.rmse;
  report.runs = options.runs;
  report.root_seed = options.seed;
  report.horizon = horizon;
  report.dt = scenario.dt;
  report.structures = {"per-period arrivals, " + options.trigger.name()};
  KeyValueConfig fp;
  scenario.store(fp);
  fp.set("runs", std::to_string(options.runs));
  fp.set("seed", std::to_string(options.seed));
  fp.set("trigger", options.trigger.name());
  fp.set("algorithms", algorithms_key(options.algorithms));
  report.fingerprint = hex64(fp.fingerprint());

  for (const auto& a : options.algorithms) report.series.push_back({a, 0, {}, {}});
  std::vector<std::vector<std::vector<double>>> sq;
  sq.reserve(options.runs);
  for (auto& o : outputs) sq.push_back(std::move(o.sq));
  reduce_series(sq, std::vector<bool>(options.runs, true), report.series, horizon);

  result.cost.dt = scenario.dt;
  result.cost.intervals = periodic ? m : 1;
  for (auto& o : outputs) {
    for (auto& c : o.costs) result.cost.records.push_back(std::move(c));
  }
  result.trajectory = std::move(outputs.front().trajectory);
  return result;
}

// ---------------------------------------------------------------------------
// Robot benchmark

RobotResult run_robot_benchmark(const scenarios::RobotScenario& scenario, const RobotOptions& options) {
  if (options.runs == 0) throw Error(ErrorCode::InvalidArgument, "robot benchmark: runs must be >= 1");
  if (options.algorithms.empty()) throw Error(ErrorCode::InvalidArgument, "robot benchmark: no algorithms");
  if (options.structures.empty()) throw Error(ErrorCode::InvalidArgument, "robot benchmark: no structures");
  const std::size_t n = scenario.sensor_count();
  for (const auto& s : options.structures) {
    if (s.size() != n) throw Error(ErrorCode::InvalidStructure, "robot benchmark: structure size differs from sensor count");
  }
  const std::size_t horizon = scenario.horizon;
  const std::size_t n_alg = options.algorithms.size();
  const std::size_t n_struct = options.structures.size();
  std::vector<filters::NonlinearModel> models;
  for (std::size_t i = 0; i < n; ++i) {
    models.push_back(scenario.model(i));
    models.back().validate();
  }

  struct RunOutput {
    bool diverged = false;
    std::string diagnostic;
    std::vector<std::vector<double>> sq;  // [structure * n_alg + alg][k]
    TrajectorySample trajectory;
  };
  std::vector<RunOutput> outputs(options.runs);

  parallel_for(options.runs, options.threads, [&](std::size_t run) {
    const std::uint64_t run_seed = derive_seed(options.seed, "run", run);
    const scenarios::Simulation sim = scenarios::simulate_truth_and_measurements(scenario, run_seed, options.simulation);
    RunOutput& out = outputs[run];

    // Local CKF estimates for every step, shared by all structures.
    std::vector<std::vector<EstimatePair>> local(horizon, std::vector<EstimatePair>(n));
    for (std::size_t i = 0; i < n; ++i) {
      EstimatePair est = scenarios::initial_estimate(scenario, i, run_seed);
      for (std::size_t k = 1; k <= horizon; ++k) {
        try {
          est = filters::ckf_step(est, models[i], scenario.control(k - 1), sim.measurements[i][k - 1]);
          Vector err = est.x - sim.truth[k];
          err(2) = wrap_angle(err(2));
          const double e = nees({sim.truth[k] + err, est.P}, sim.truth[k]);
          if (!(e <= options.divergence_nees)) {
            std::ostringstream os;
            os << "run " << run << ": sensor " << i + 1 << " diverged at step " << k << " (NEES " << e << ")";
            throw Error(ErrorCode::Diverged, os.str());
          }
        } catch (const Error& e) {
          out.diverged = true;
          out.diagnostic = e.code() == ErrorCode::Diverged
                               ? e.what()
                               : "run " + std::to_string(run) + ": sensor " + std::to_string(i + 1) + " failed: " + e.what();
          return;
        }
        local[k - 1][i] = est;
      }
    }

    std::vector<std::unique_ptr<fusion::SequentialFuser>> fusers;
    for (const auto& a : options.algorithms) fusers.push_back(make_fuser(a));
    out.sq.assign(n_struct * n_alg, std::vector<double>(horizon, 0.0));
    const bool record_traj = run == 0;
    if (record_traj) {
      for (const auto& x : sim.truth) out.trajectory.truth.emplace_back(x(0), x(1));
    }

    for (std::size_t s = 0; s < n_struct; ++s) {
      const FusionStructure& st = options.structures[s];
      for (std::size_t a = 0; a < n_alg; ++a) {
        auto& fuser = *fusers[a];
        const bool is_batch = options.algorithms[a].algorithm == Algorithm::Cbci;
        for (std::size_t k = 1; k <= horizon; ++k) {
          fuser.reset();
          for (std::size_t step = 0; step < st.steps(); ++step) {
            for (std::size_t j = st.prefix(step); j < st.prefix(step + 1); ++j) {
              fuser.receive(local[k - 1][st.order()[j]]);
            }
            if (!is_batch) fuser.trigger();
          }
          if (is_batch) fuser.trigger();
          const EstimatePair fused = *fuser.fused();
          out.sq[s * n_alg + a][k - 1] = squared_position_error(fused.x, sim.truth[k], 0, 1);
          if (record_traj && s == 0) {
            out.trajectory.estimates[options.algorithms[a].label()].emplace_back(fused.x(0), fused.x(1));
          }
        }
      }
    }
  });

  RobotResult result;
  RmseReport& report = result.rmse;
  report.runs = options.runs;
  report.root_seed = options.seed;
  report.horizon = horizon;
  report.dt = scenario.dt;
  for (const auto& s : options.structures) report.structures.push_back(s.describe());
  KeyValueConfig fp;
  scenario.store(fp);
  fp.set("runs", std::to_string(options.runs));
  fp.set("seed", std::to_string(options.seed));
  fp.set("algorithms", algorithms_key(options.algorithms));
  std::string structures;
  for (const auto& s : report.structures) structures += s + ";";
  fp.set("structures", structures);
  report.fingerprint = hex64(fp.fingerprint());

  std::vector<bool> included(options.runs, true);
  std::vector<std::vector<std::vector<double>>> sq(options.runs);
  for (std::size_t r = 0; r < options.runs; ++r) {
    if (outputs[r].diverged) {
      included[r] = false;
      ++report.excluded_runs;
      report.diagnostics.push_back(outputs[r].diagnostic);
    } else {
      sq[r] = std::move(outputs[r].sq);
    }
  }
  for (std::size_t s = 0; s < n_struct; ++s) {
    for (const auto& a : options.algorithms) report.series.push_back({a, s, {}, {}});
  }
  reduce_series(sq, included, report.series, horizon);
  for (auto& o : outputs) {
    if (!o.trajectory.truth.empty()) {
      result.trajectory = std::move(o.trajectory);
      break;
    }
  }
  return result;
}

}  // namespace esci::experiments
