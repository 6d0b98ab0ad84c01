#pragma once

#include "esci/config.hpp"
#include "esci/estimate.hpp"
#include "esci/filters.hpp"
#include "esci/random.hpp"
#include "esci/structure.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace esci::scenarios {

// =============================================================================
// Static demo
// =============================================================================

/// The four 2-D estimate pairs of the fusion-ellipse demo.
std::vector<EstimatePair> demo_pairs();

// =============================================================================
// Linear target tracking network
// =============================================================================

/// Constant-velocity target observed by position sensors.
/// State [s_x, v_x, s_y, v_y] in m and m/s.
struct TrackingScenario {
  double dt = 0.2;
  std::size_t horizon = 100;
  Vector x0 = (Vector(4) << 100.0, 10.0, 100.0, 5.0).finished();
  double process_noise = 4.0;  ///< Q = process_noise * I_2
  /// R_i = sensor_noise[i] * I_2, one entry per sensor.
  std::vector<double> sensor_noise{1, 1, 1, 4, 4, 4, 9, 9, 9, 9};
  /// Filter prior variances, P_0 = diag(initial_variance).
  Vector initial_variance = (Vector(4) << 100.0, 25.0, 100.0, 25.0).finished();
  /// Use the transition/input matrices exactly as printed (velocity rows
  /// scaled by dt, position input dt^2) instead of the constant-velocity model.
  bool literal_transition = false;

  static TrackingScenario defaults() { return {}; }

  std::size_t sensor_count() const { return sensor_noise.size(); }
  filters::LinearModel model(std::size_t sensor) const;

  /// Reads `tracking.*` keys; missing keys keep their current value.
  void apply(const KeyValueConfig& cfg);
  void store(KeyValueConfig& cfg) const;
};

// =============================================================================
// Nonlinear robot localization network
// =============================================================================

/// Differential-drive robot observed by range-bearing sensors.
/// State [s_x, s_y, theta] in cm and rad; angles are held in radians.
struct RobotScenario {
  double dt = 0.08;
  std::size_t horizon = 250;
  Vector x0 = (Vector(3) << 200.0, 200.0, 0.0).finished();
  /// Q = dt^2 * diag(process_rate_variance), units cm^2/s^2 and rad^2/s^2.
  Vector process_rate_variance;
  /// R_i = sensor_noise_scale[i]^2 * diag(1 cm^2, (1 deg)^2).
  std::vector<double> sensor_noise_scale{0.1, 0.1, 0.2, 0.2};
  std::vector<Eigen::Vector2d> sensor_positions;
  double speed = 25.0;      ///< u_v, cm/s
  double turn_rate = 0.0;   ///< u_theta, rad/s
  Vector initial_variance;  ///< cm^2, cm^2, rad^2

  RobotScenario();
  static RobotScenario defaults() { return {}; }

  std::size_t sensor_count() const { return sensor_noise_scale.size(); }
  Matrix process_noise() const;
  Vector control(std::size_t step) const;
  filters::NonlinearModel model(std::size_t sensor) const;

  /// Noise-free unicycle transition and range-bearing measurement.
  Vector transition(const Vector& state, const Vector& control) const;
  Vector measurement(std::size_t sensor, const Vector& state) const;

  /// Reads `robot.*` keys (angles in degrees); missing keys keep their value.
  void apply(const KeyValueConfig& cfg);
  void store(KeyValueConfig& cfg) const;
};

// =============================================================================
// Simulation
// =============================================================================

struct SimulationOptions {
  bool process_noise = true;
  bool measurement_noise = true;
};

/// truth[0] = x0 and truth[k] for k = 1..horizon; measurements[s][k-1] is
/// sensor s's observation of truth[k].
struct Simulation {
  std::vector<Vector> truth;
  std::vector<std::vector<Vector>> measurements;
};

/// Deterministic given the seed; truth noise and each sensor's noise come
/// from separate named sub-streams.
Simulation simulate_truth_and_measurements(const TrackingScenario& s, std::uint64_t seed,
                                           const SimulationOptions& options = {});
Simulation simulate_truth_and_measurements(const RobotScenario& s, std::uint64_t seed,
                                           const SimulationOptions& options = {});

/// Filter prior for one sensor: x0 + N(0, P0) draw with covariance P0.
EstimatePair initial_estimate(const TrackingScenario& s, std::size_t sensor, std::uint64_t seed);
EstimatePair initial_estimate(const RobotScenario& s, std::size_t sensor, std::uint64_t seed);

/// Multivariate normal draw with covariance `cov` (PSD allowed).
Vector sample_gaussian(const Matrix& cov, Rng& rng);

// =============================================================================
// Arrival schedules and fusion structures
// =============================================================================

class TriggerPolicy {
 public:
  enum class Kind { AfterAll, EveryArrival, Periodic };

  static TriggerPolicy after_all() { return TriggerPolicy(Kind::AfterAll, 1); }
  static TriggerPolicy every_arrival() { return TriggerPolicy(Kind::EveryArrival, 1); }
  /// Fusion once every period/m; m >= 1.
  static TriggerPolicy periodic(std::size_t m);
  /// "after-all", "every" or "periodic:m".
  static TriggerPolicy parse(const std::string& text);

  Kind kind() const { return kind_; }
  std::size_t intervals() const { return intervals_; }
  std::string name() const;

  friend bool operator==(const TriggerPolicy&, const TriggerPolicy&) = default;

 private:
  TriggerPolicy(Kind k, std::size_t m) : kind_(k), intervals_(m) {}
  Kind kind_;
  std::size_t intervals_;
};

struct Arrival {
  std::size_t sensor;
  double offset;  ///< within [0, period)
};

/// Arrivals of one period sorted by (offset, sensor), plus the trigger policy.
struct ArrivalSchedule {
  double period = 0.0;
  std::vector<Arrival> arrivals;
  TriggerPolicy policy = TriggerPolicy::after_all();

  /// Throws unless offsets lie in [0, period) and are sorted.
  void validate() const;
};

/// Offsets uniform on [0, dt), independent per sensor; ties broken by index.
ArrivalSchedule generate_arrivals(std::size_t n_sensors, double dt, std::uint64_t seed,
                                  TriggerPolicy policy = TriggerPolicy::after_all());

/// One fusion instant within a period.
struct TriggerPoint {
  double offset;          ///< time within the period at which fusion runs
  std::size_t tick;       ///< Periodic: bin end index (offset = tick * period / m)
  std::size_t first;      ///< index into arrivals of the first estimate fused
  std::size_t count;      ///< number of estimates fused
};

/// Fusion instants induced by the policy. AfterAll fires at the last
/// arrival, EveryArrival at each arrival, Periodic(m) at the end of every
/// non-empty bin (empty bins produce no fusion step).
std::vector<TriggerPoint> trigger_plan(const ArrivalSchedule& schedule);

/// Order = arrival order, batch sizes = trigger_plan counts. The structure's
/// indices refer to sensor ids.
fusion::FusionStructure structure_from_schedule(const ArrivalSchedule& schedule);

}  // namespace esci::scenarios
