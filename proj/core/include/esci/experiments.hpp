#pragma once

#include "esci/fusion.hpp"
#include "esci/scenarios.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace esci::experiments {

enum class Algorithm { Cbci, Csci, Esci };

/// A fusion algorithm as benchmarked: CBCI (trace-optimal batch CI fired once
/// all estimates arrived), CSCI (trace-optimal weights per sequential step)
/// or ESCI with an importance function.
struct AlgorithmSpec {
  Algorithm algorithm = Algorithm::Esci;
  fusion::ImportanceFunction importance;

  static AlgorithmSpec cbci() { return {Algorithm::Cbci, {}}; }
  static AlgorithmSpec csci() { return {Algorithm::Csci, {}}; }
  static AlgorithmSpec esci(fusion::ImportanceFunction f) { return {Algorithm::Esci, std::move(f)}; }

  std::string name() const;             ///< CBCI, CSCI, ESCI
  std::string importance_name() const;  ///< importance name for ESCI, "-" otherwise
  std::string label() const;            ///< e.g. "ESCI:inv_trace" or "CSCI"
};

/// Cross product of algorithm names (cbci, csci, esci) and importance names;
/// importance names apply to esci only.
std::vector<AlgorithmSpec> make_algorithms(const std::vector<std::string>& algorithms,
                                           const std::vector<std::string>& importances);

/// Mean and standard error of paired per-run differences (hi - lo).
struct PairedComparison {
  double mean_difference = 0.0;
  double standard_error = 0.0;
  /// mean_difference / standard_error
  double z() const { return standard_error > 0.0 ? mean_difference / standard_error : 0.0; }
};

// =============================================================================
// Fusion-ellipse structure sweep
// =============================================================================

struct SweepEntry {
  AlgorithmSpec algorithm;
  std::size_t structure_id = 0;
  fusion::FusionStructure structure;
  EstimatePair fused;
  std::vector<Eigen::Vector2d> ellipse;
};

/// Structure 0 is the batch structure a = {n}; the rest are distinct random
/// structures different from it (as long as enough distinct ones exist).
std::vector<fusion::FusionStructure> sweep_structures(std::size_t n, std::size_t count, std::uint64_t seed);

/// Fuses `pairs` under every (algorithm, structure). CBCI ignores the
/// structure.
std::vector<SweepEntry> run_ellipse_sweep(const std::vector<EstimatePair>& pairs,
                                          const std::vector<fusion::FusionStructure>& structures,
                                          const std::vector<AlgorithmSpec>& algorithms, int ellipse_points = 100);

// =============================================================================
// Monte Carlo RMSE benchmarks
// =============================================================================

struct RmseSeries {
  AlgorithmSpec algorithm;
  std::size_t structure_id = 0;
  /// rmse[k-1] = sqrt(mean over runs of squared position error at step k).
  std::vector<double> rmse;
  /// Per-run time-averaged squared position error (included runs only).
  std::vector<double> run_mse;

  double mean_rmse() const;
};

struct RmseReport {
  std::vector<RmseSeries> series;
  std::size_t runs = 0;
  std::size_t excluded_runs = 0;
  std::uint64_t root_seed = 0;
  std::string fingerprint;
  std::size_t horizon = 0;
  double dt = 0.0;
  std::vector<std::string> structures;  ///< descriptions by structure id
  std::vector<std::string> diagnostics;

  const RmseSeries& find(const std::string& label, std::size_t structure_id = 0) const;
};

/// Paired comparison of per-run mean squared position errors.
PairedComparison compare_runs(const RmseSeries& lo, const RmseSeries& hi);

struct CostRecord {
  std::size_t run = 0;
  std::size_t period = 0;
  double trigger_time = 0.0;
  std::size_t tick = 0;  ///< Periodic: global tick, trigger_time = tick * dt / m
  std::string algorithm;
  fusion::FusionCost cost;
  std::int64_t wall_ns = 0;
};

struct CostProfile {
  double dt = 0.0;
  std::size_t intervals = 0;
  std::vector<CostRecord> records;
};

/// Truth and fused trajectories (positions) of the first run.
struct TrajectorySample {
  std::vector<Eigen::Vector2d> truth;
  std::map<std::string, std::vector<Eigen::Vector2d>> estimates;
};

struct TrackingOptions {
  std::vector<AlgorithmSpec> algorithms;
  std::size_t runs = 500;
  std::uint64_t seed = 1;
  /// Trigger policy for the sequential algorithms; CBCI always fires once
  /// all estimates have arrived.
  scenarios::TriggerPolicy trigger = scenarios::TriggerPolicy::periodic(10);
  std::size_t cost_profile_runs = 1;
  std::size_t threads = 0;  ///< 0: hardware concurrency
  scenarios::SimulationOptions simulation;
};

struct TrackingResult {
  RmseReport rmse;
  CostProfile cost;
  TrajectorySample trajectory;
};

TrackingResult run_tracking_benchmark(const scenarios::TrackingScenario& scenario, const TrackingOptions& options);

struct RobotOptions {
  std::vector<AlgorithmSpec> algorithms;
  std::vector<fusion::FusionStructure> structures;
  std::size_t runs = 100;
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  scenarios::SimulationOptions simulation;
  double divergence_nees = 1000.0;
};

struct RobotResult {
  RmseReport rmse;
  TrajectorySample trajectory;
};

/// Each run simulates the network once; every structure is then applied to
/// the same local estimates. Runs where a local filter diverges (NEES above
/// the threshold or a Cholesky failure) are excluded and counted.
RobotResult run_robot_benchmark(const scenarios::RobotScenario& scenario, const RobotOptions& options);

// =============================================================================
// Unbiasedness / consistency Monte Carlo
// =============================================================================

struct ConsistencyOptions {
  std::size_t trials = 100000;
  std::uint64_t seed = 1;
  /// Common-factor correlation between local errors, in [0, 1].
  double correlation = 0.9;
  /// Claimed covariances are this multiple of the true marginals.
  double covariance_scale = 1.0;
  fusion::ImportanceFunction importance;
  /// True error covariances; defaults to the demo pairs' covariances.
  std::vector<Matrix> covariances;
  double consistency_tol = 0.02;
  double bias_z_limit = 4.0;
};

struct ConsistencyReport {
  std::size_t trials = 0;
  Vector bias;
  Vector bias_z;
  Matrix fused_covariance;
  Matrix sample_mse;
  double min_eigen_margin = 0.0;  ///< lambda_min(P_f - sample MSE)
  double lambda_max = 0.0;        ///< lambda_max(P_f)
  double mean_nees = 0.0;
  bool unbiased = false;
  bool consistent = false;

  bool passed() const { return unbiased && consistent; }
};

/// Local errors e_i = L_i (sqrt(rho) z_0 + sqrt(1 - rho) z_i) with L_i L_i^T
/// the true marginal, fused per trial by the structure-invariant rule under
/// a random structure.
ConsistencyReport consistency_suite(const ConsistencyOptions& options);

}  // namespace esci::experiments
