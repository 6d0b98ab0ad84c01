#include "esci/scenarios.hpp"

#include <cmath>
#include <numbers>

namespace esci::scenarios {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector read_vector(const KeyValueConfig& cfg, const std::string& key, const Vector& current,
                   Eigen::Index expected) {
  const Vector v = to_vector(cfg.get_list(key, to_std(current)));
  if (v.size() != expected) {
    throw Error(ErrorCode::InvalidArgument,
                "config key '" + key + "' needs " + std::to_string(expected) + " values");
  }
  return v;
}

}  // namespace

std::vector<EstimatePair> demo_pairs() {
  auto pair = [](double x1, double x2, double p11, double p12, double p22) {
    EstimatePair p;
    p.x = (Vector(2) << x1, x2).finished();
    p.P = (Matrix(2, 2) << p11, p12, p12, p22).finished();
    return p;
  };
  return {
      pair(0.0, -0.1, 2.0, 0.1, 1.5),
      pair(-0.2, 0.3, 3.0, 0.7, 2.0),
      pair(-0.5, -0.35, 1.5, 0.5, 3.2),
      pair(0.3, -0.15, 3.2, 2.0, 3.0),
  };
}

Vector sample_gaussian(const Matrix& cov, Rng& rng) {
  std::normal_distribution<double> normal;
  Vector z(cov.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
  // LDLT tolerates the rank-deficient G Q G^T style covariances.
  Eigen::LDLT<Matrix> ldlt(symmetrize(cov));
  const Vector d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
  Vector y = ldlt.matrixL() * (d.asDiagonal() * z);
  return ldlt.transpositionsP().transpose() * y;
}

// ---------------------------------------------------------------------------
// Tracking

filters::LinearModel TrackingScenario::model(std::size_t sensor) const {
  if (sensor >= sensor_count()) throw Error(ErrorCode::InvalidArgument, "tracking: sensor index out of range");
  filters::LinearModel m;
  const double t = dt;
  if (literal_transition) {
    m.F = (Matrix(4, 4) << 1, t, 0, 0, 0, t, 0, 0, 0, 0, 1, t, 0, 0, 0, t).finished();
    m.G = (Matrix(4, 2) << t * t, 0, t, 0, 0, t * t, 0, t).finished();
  } else {
    m.F = (Matrix(4, 4) << 1, t, 0, 0, 0, 1, 0, 0, 0, 0, 1, t, 0, 0, 0, 1).finished();
    m.G = (Matrix(4, 2) << 0.5 * t * t, 0, t, 0, 0, 0.5 * t * t, 0, t).finished();
  }
  m.H = (Matrix(2, 4) << 1, 0, 0, 0, 0, 0, 1, 0).finished();
  m.Q = process_noise * Matrix::Identity(2, 2);
  m.R = sensor_noise[sensor] * Matrix::Identity(2, 2);
  return m;
}

void TrackingScenario::apply(const KeyValueConfig& cfg) {
  dt = cfg.get_double("tracking.dt", dt);
  horizon = static_cast<std::size_t>(cfg.get_int("tracking.horizon", static_cast<std::int64_t>(horizon)));
  x0 = read_vector(cfg, "tracking.x0", x0, 4);
  process_noise = cfg.get_double("tracking.process_noise", process_noise);
  sensor_noise = cfg.get_list("tracking.sensor_noise", sensor_noise);
  initial_variance = read_vector(cfg, "tracking.initial_variance", initial_variance, 4);
  literal_transition = cfg.get_bool("tracking.literal_transition", literal_transition);
  if (!(dt > 0.0) || horizon == 0 || sensor_noise.empty() || !(process_noise > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "tracking scenario: dt, horizon, noise and sensors must be positive");
  }
  for (double r : sensor_noise) {
    if (!(r > 0.0)) throw Error(ErrorCode::InvalidArgument, "tracking scenario: sensor noise must be positive");
  }
}

void TrackingScenario::store(KeyValueConfig& cfg) const {
  cfg.set("tracking.dt", dt);
  cfg.set("tracking.horizon", std::to_string(horizon));
  cfg.set("tracking.x0", to_std(x0));
  cfg.set("tracking.process_noise", process_noise);
  cfg.set("tracking.sensor_noise", sensor_noise);
  cfg.set("tracking.initial_variance", to_std(initial_variance));
  cfg.set("tracking.literal_transition", literal_transition ? "true" : "false");
}

Simulation simulate_truth_and_measurements(const TrackingScenario& s, std::uint64_t seed,
                                           const SimulationOptions& options) {
  const std::size_t n = s.sensor_count();
  const filters::LinearModel base = s.model(0);
  const Matrix process = base.G * base.Q * base.G.transpose();

  Simulation sim;
  sim.truth.reserve(s.horizon + 1);
  sim.truth.push_back(s.x0);
  Rng truth_rng = make_rng(seed, "truth");
  for (std::size_t k = 1; k <= s.horizon; ++k) {
    Vector next = base.F * sim.truth.back();
    if (options.process_noise) next += sample_gaussian(process, truth_rng);
    sim.truth.push_back(std::move(next));
  }
  sim.measurements.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_rng(seed, "sensor", i);
    const Matrix r = s.sensor_noise[i] * Matrix::Identity(2, 2);
    auto& stream = sim.measurements[i];
    stream.reserve(s.horizon);
    for (std::size_t k = 1; k <= s.horizon; ++k) {
      Vector z = base.H * sim.truth[k];
      if (options.measurement_noise) z += sample_gaussian(r, rng);
      stream.push_back(std::move(z));
    }
  }
  return sim;
}

EstimatePair initial_estimate(const TrackingScenario& s, std::size_t sensor, std::uint64_t seed) {
  Rng rng = make_rng(seed, "init", sensor);
  const Matrix p0 = s.initial_variance.asDiagonal();
  return {s.x0 + sample_gaussian(p0, rng), p0};
}

// ---------------------------------------------------------------------------
// Robot

RobotScenario::RobotScenario()
    : process_rate_variance((Vector(3) << 1.0, 1.0, kDeg * kDeg).finished()),
      sensor_positions{{0.0, 0.0}, {400.0, 0.0}, {0.0, 400.0}, {400.0, 400.0}},
      turn_rate(5.0 * kDeg),
      initial_variance((Vector(3) << 25.0, 25.0, 25.0 * kDeg * kDeg).finished()) {}

Matrix RobotScenario::process_noise() const { return (dt * dt) * Matrix(process_rate_variance.asDiagonal()); }

Vector RobotScenario::control(std::size_t) const { return (Vector(2) << speed, turn_rate).finished(); }

Vector RobotScenario::transition(const Vector& state, const Vector& u) const {
  Vector next(3);
  next(0) = state(0) + u(0) * std::cos(state(2)) * dt;
  next(1) = state(1) + u(0) * std::sin(state(2)) * dt;
  next(2) = wrap_angle(state(2) + u(1) * dt);
  return next;
}

Vector RobotScenario::measurement(std::size_t sensor, const Vector& state) const {
  const Eigen::Vector2d& l = sensor_positions.at(sensor);
  const double dx = state(0) - l.x();
  const double dy = state(1) - l.y();
  return (Vector(2) << std::hypot(dx, dy), std::atan2(dy, dx)).finished();
}

filters::NonlinearModel RobotScenario::model(std::size_t sensor) const {
  if (sensor >= sensor_count() || sensor >= sensor_positions.size()) {
    throw Error(ErrorCode::InvalidArgument, "robot: sensor index out of range");
  }
  filters::NonlinearModel m;
  // Copies keep the model valid independently of this scenario's lifetime.
  m.transition = [self = *this](const Vector& x, const Vector& u) { return self.transition(x, u); };
  m.measurement = [self = *this, sensor](const Vector& x) { return self.measurement(sensor, x); };
  m.Q = process_noise();
  const double scale = sensor_noise_scale[sensor];
  m.R = (scale * scale) * Matrix((Vector(2) << 1.0, kDeg * kDeg).finished().asDiagonal());
  m.angular_state = {2};
  m.angular_measurement = {1};
  return m;
}

void RobotScenario::apply(const KeyValueConfig& cfg) {
  dt = cfg.get_double("robot.dt", dt);
  horizon = static_cast<std::size_t>(cfg.get_int("robot.horizon", static_cast<std::int64_t>(horizon)));
  Vector x0_deg = x0;
  x0_deg(2) /= kDeg;
  x0 = read_vector(cfg, "robot.x0", x0_deg, 3);
  x0(2) = wrap_angle(x0(2) * kDeg);

  Vector rate_deg = process_rate_variance;
  rate_deg(2) /= kDeg * kDeg;
  process_rate_variance = read_vector(cfg, "robot.process_rate_variance", rate_deg, 3);
  process_rate_variance(2) *= kDeg * kDeg;

  sensor_noise_scale = cfg.get_list("robot.sensor_noise_scale", sensor_noise_scale);
  std::vector<double> xs, ys;
  for (const auto& p : sensor_positions) {
    xs.push_back(p.x());
    ys.push_back(p.y());
  }
  xs = cfg.get_list("robot.sensor_x", xs);
  ys = cfg.get_list("robot.sensor_y", ys);
  if (xs.size() != ys.size() || xs.size() != sensor_noise_scale.size()) {
    throw Error(ErrorCode::InvalidArgument, "robot scenario: sensor_x, sensor_y and sensor_noise_scale lengths differ");
  }
  sensor_positions.clear();
  for (std::size_t i = 0; i < xs.size(); ++i) sensor_positions.emplace_back(xs[i], ys[i]);

  speed = cfg.get_double("robot.speed", speed);
  turn_rate = cfg.get_double("robot.turn_rate_deg", turn_rate / kDeg) * kDeg;

  Vector init_deg = initial_variance;
  init_deg(2) /= kDeg * kDeg;
  initial_variance = read_vector(cfg, "robot.initial_variance", init_deg, 3);
  initial_variance(2) *= kDeg * kDeg;
  if (!(dt > 0.0) || horizon == 0 || sensor_noise_scale.empty()) {
    throw Error(ErrorCode::InvalidArgument, "robot scenario: dt, horizon and sensors must be positive");
  }
}

void RobotScenario::store(KeyValueConfig& cfg) const {
  cfg.set("robot.dt", dt);
  cfg.set("robot.horizon", std::to_string(horizon));
  cfg.set("robot.x0", std::vector<double>{x0(0), x0(1), x0(2) / kDeg});
  cfg.set("robot.process_rate_variance",
          std::vector<double>{process_rate_variance(0), process_rate_variance(1),
                              process_rate_variance(2) / (kDeg * kDeg)});
  cfg.set("robot.sensor_noise_scale", sensor_noise_scale);
  std::vector<double> xs, ys;
  for (const auto& p : sensor_positions) {
    xs.push_back(p.x());
    ys.push_back(p.y());
  }
  cfg.set("robot.sensor_x", xs);
  cfg.set("robot.sensor_y", ys);
  cfg.set("robot.speed", speed);
  cfg.set("robot.turn_rate_deg", turn_rate / kDeg);
  cfg.set("robot.initial_variance",
          std::vector<double>{initial_variance(0), initial_variance(1), initial_variance(2) / (kDeg * kDeg)});
}

Simulation simulate_truth_and_measurements(const RobotScenario& s, std::uint64_t seed,
                                           const SimulationOptions& options) {
  const Matrix q = s.process_noise();
  Simulation sim;
  sim.truth.reserve(s.horizon + 1);
  sim.truth.push_back(s.x0);
  Rng truth_rng = make_rng(seed, "truth");
  for (std::size_t k = 1; k <= s.horizon; ++k) {
    Vector next = s.transition(sim.truth.back(), s.control(k - 1));
    if (options.process_noise) next += sample_gaussian(q, truth_rng);
    next(2) = wrap_angle(next(2));
    sim.truth.push_back(std::move(next));
  }
  sim.measurements.resize(s.sensor_count());
  for (std::size_t i = 0; i < s.sensor_count(); ++i) {
    Rng rng = make_rng(seed, "sensor", i);
    const Matrix r = s.model(i).R;
    auto& stream = sim.measurements[i];
    stream.reserve(s.horizon);
    for (std::size_t k = 1; k <= s.horizon; ++k) {
      Vector z = s.measurement(i, sim.truth[k]);
      if (options.measurement_noise) z += sample_gaussian(r, rng);
      z(1) = wrap_angle(z(1));
      stream.push_back(std::move(z));
    }
  }
  return sim;
}

EstimatePair initial_estimate(const RobotScenario& s, std::size_t sensor, std::uint64_t seed) {
  Rng rng = make_rng(seed, "init", sensor);
  const Matrix p0 = s.initial_variance.asDiagonal();
  Vector x = s.x0 + sample_gaussian(p0, rng);
  x(2) = wrap_angle(x(2));
  return {x, p0};
}

}  // namespace esci::scenarios
