#include "esci/config.hpp"
#include "esci/random.hpp"
#include "esci/scenarios.hpp"
#include "esci/structure.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <set>
#include <sstream>

namespace esci {
namespace {

using fusion::FusionStructure;
using scenarios::TriggerPolicy;

constexpr double kDeg = std::numbers::pi / 180.0;

// --------------------------------------------------------------------------
// Fusion structures

TEST(FusionStructure, ValidatesOrderAndComposition) {
  EXPECT_NO_THROW(FusionStructure({3, 1, 0, 2}, {2, 2}));
  EXPECT_THROW(FusionStructure({0, 0, 1}, {3}), Error);
  EXPECT_THROW(FusionStructure({0, 1, 3}, {3}), Error);
  EXPECT_THROW(FusionStructure({0, 1, 2}, {2, 0, 1}), Error);
  EXPECT_THROW(FusionStructure({0, 1, 2}, {2, 2}), Error);
  EXPECT_THROW(FusionStructure({}, {}), Error);
}

TEST(FusionStructure, PrefixAndDescribe) {
  const FusionStructure s({3, 1, 0, 2}, {2, 2});
  EXPECT_EQ(s.prefix(0), 0u);
  EXPECT_EQ(s.prefix(1), 2u);
  EXPECT_EQ(s.prefix(2), 4u);
  EXPECT_EQ(s.describe(), "r={4,2,1,3} a={2,2}");
  EXPECT_EQ(FusionStructure::batch(3).batch_sizes(), std::vector<std::size_t>{3});
  EXPECT_EQ(FusionStructure::sequential(3).batch_sizes(), (std::vector<std::size_t>{1, 1, 1}));
}

TEST(RandomStructure, SingleEstimate) {
  const FusionStructure s = fusion::random_structure(1, 77);
  EXPECT_EQ(s.order(), std::vector<std::size_t>{0});
  EXPECT_EQ(s.batch_sizes(), std::vector<std::size_t>{1});
}

TEST(RandomStructure, CompositionSumsAndDeterminism) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const std::size_t n = 1 + seed % 9;
    const FusionStructure s = fusion::random_structure(n, seed);
    std::size_t sum = 0;
    for (std::size_t a : s.batch_sizes()) sum += a;
    EXPECT_EQ(sum, n);
    EXPECT_EQ(s, fusion::random_structure(n, seed));
  }
  EXPECT_THROW(fusion::random_structure(0, 1), Error);
}

TEST(RandomStructure, KnownStructuresReachable) {
  const FusionStructure three_then_one({0, 1, 2, 3}, {3, 1});
  const FusionStructure two_and_two({3, 1, 0, 2}, {2, 2});
  bool a = false;
  bool b = false;
  for (std::uint64_t seed = 0; seed < 20000 && !(a && b); ++seed) {
    const FusionStructure s = fusion::random_structure(4, seed);
    a = a || s == three_then_one;
    b = b || s == two_and_two;
  }
  EXPECT_TRUE(a);
  EXPECT_TRUE(b);
}

// --------------------------------------------------------------------------
// Seeds

TEST(Seeds, NamedStreamsAreDistinctAndStable) {
  EXPECT_EQ(derive_seed(1, "run", 3), derive_seed(1, "run", 3));
  std::set<std::uint64_t> seen;
  for (const char* name : {"truth", "sensor", "init", "run", "arrivals", "structure"}) {
    for (std::uint64_t i = 0; i < 10; ++i) seen.insert(derive_seed(42, name, i));
  }
  EXPECT_EQ(seen.size(), 60u);
  EXPECT_NE(derive_seed(1, "run", 0), derive_seed(2, "run", 0));
}

// --------------------------------------------------------------------------
// Scenario parameters

TEST(TrackingScenario, Defaults) {
  const auto s = scenarios::TrackingScenario::defaults();
  EXPECT_DOUBLE_EQ(s.dt, 0.2);
  EXPECT_EQ(s.horizon, 100u);
  EXPECT_EQ(s.x0, (Vector(4) << 100, 10, 100, 5).finished());
  EXPECT_EQ(s.sensor_count(), 10u);
  const std::vector<double> tiers{1, 1, 1, 4, 4, 4, 9, 9, 9, 9};
  EXPECT_EQ(s.sensor_noise, tiers);
  EXPECT_EQ(s.initial_variance, (Vector(4) << 100, 25, 100, 25).finished());
  const auto m = s.model(4);
  EXPECT_EQ(m.Q, 4.0 * Matrix::Identity(2, 2));
  EXPECT_EQ(m.R, 4.0 * Matrix::Identity(2, 2));
  EXPECT_EQ(m.H, (Matrix(2, 4) << 1, 0, 0, 0, 0, 0, 1, 0).finished());
  EXPECT_EQ(m.F, (Matrix(4, 4) << 1, 0.2, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0.2, 0, 0, 0, 1).finished());
  EXPECT_TRUE(m.G.isApprox((Matrix(4, 2) << 0.02, 0, 0.2, 0, 0, 0.02, 0, 0.2).finished(), 1e-15));
  EXPECT_NO_THROW(m.validate());
  EXPECT_THROW(s.model(10), Error);
}

TEST(TrackingScenario, LiteralTransitionOption) {
  auto s = scenarios::TrackingScenario::defaults();
  s.literal_transition = true;
  const auto m = s.model(0);
  EXPECT_EQ(m.F, (Matrix(4, 4) << 1, 0.2, 0, 0, 0, 0.2, 0, 0, 0, 0, 1, 0.2, 0, 0, 0, 0.2).finished());
}

TEST(RobotScenario, Defaults) {
  const auto s = scenarios::RobotScenario::defaults();
  EXPECT_DOUBLE_EQ(s.dt, 0.08);
  EXPECT_EQ(s.x0, (Vector(3) << 200, 200, 0).finished());
  EXPECT_EQ(s.sensor_count(), 4u);
  const Matrix Q = s.process_noise();
  EXPECT_TRUE(Q.isApprox(Matrix((Vector(3) << 0.0064, 0.0064, 0.0064 * kDeg * kDeg).finished().asDiagonal()), 1e-14));
  const double scales[] = {0.1, 0.1, 0.2, 0.2};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto m = s.model(i);
    const Matrix R = scales[i] * scales[i] * Matrix((Vector(2) << 1.0, kDeg * kDeg).finished().asDiagonal());
    EXPECT_TRUE(m.R.isApprox(R, 1e-14));
    EXPECT_NO_THROW(m.validate());
  }
  EXPECT_EQ(s.sensor_positions[3], Eigen::Vector2d(400, 400));
  EXPECT_DOUBLE_EQ(s.speed, 25.0);
  EXPECT_DOUBLE_EQ(s.turn_rate, 5 * kDeg);
}

// --------------------------------------------------------------------------
// Config files

TEST(KeyValueConfig, ParseAndTypedAccess) {
  std::istringstream in(
      "# comment\n"
      "tracking.dt = 0.5\n"
      "  runs=12  \n"
      "flag = yes\n"
      "list = 1, 2.5 ,3\n"
      "\n");
  const auto cfg = KeyValueConfig::parse(in);
  EXPECT_DOUBLE_EQ(cfg.get_double("tracking.dt", 0), 0.5);
  EXPECT_EQ(cfg.get_int("runs", 0), 12);
  EXPECT_TRUE(cfg.get_bool("flag", false));
  EXPECT_EQ(cfg.get_list("list", {}), (std::vector<double>{1, 2.5, 3}));
  EXPECT_EQ(cfg.get_int("missing", 7), 7);
}

TEST(KeyValueConfig, Errors) {
  std::istringstream bad_line("just words\n");
  EXPECT_THROW(KeyValueConfig::parse(bad_line), Error);
  std::istringstream bad_value("x = abc\n");
  const auto cfg = KeyValueConfig::parse(bad_value);
  EXPECT_THROW(cfg.get_double("x", 0), Error);
  EXPECT_THROW(cfg.get_int("x", 0), Error);
  EXPECT_THROW(cfg.get_bool("x", false), Error);
  EXPECT_THROW(KeyValueConfig::load("/nonexistent/esci.cfg"), Error);
}

TEST(KeyValueConfig, ScenarioRoundTrip) {
  auto t = scenarios::TrackingScenario::defaults();
  t.dt = 0.1;
  t.sensor_noise = {2, 3};
  auto r = scenarios::RobotScenario::defaults();
  r.turn_rate = 7 * kDeg;
  r.sensor_noise_scale = {0.3, 0.4};
  r.sensor_positions = {{1, 2}, {3, 4}};
  KeyValueConfig cfg;
  t.store(cfg);
  r.store(cfg);
  std::istringstream in(cfg.to_string());
  const auto parsed = KeyValueConfig::parse(in);
  EXPECT_EQ(parsed.fingerprint(), cfg.fingerprint());

  scenarios::TrackingScenario t2;
  t2.apply(parsed);
  EXPECT_EQ(t2.dt, t.dt);
  EXPECT_EQ(t2.sensor_noise, t.sensor_noise);
  EXPECT_EQ(t2.x0, t.x0);
  scenarios::RobotScenario r2;
  r2.apply(parsed);
  EXPECT_NEAR(r2.turn_rate, r.turn_rate, 1e-15);
  EXPECT_EQ(r2.sensor_positions, r.sensor_positions);
  EXPECT_NEAR((r2.initial_variance - r.initial_variance).norm(), 0.0, 1e-15);
}

TEST(KeyValueConfig, RejectsInconsistentRobotSensors) {
  std::istringstream in("robot.sensor_noise_scale = 0.1, 0.2\n");
  scenarios::RobotScenario r;
  EXPECT_THROW(r.apply(KeyValueConfig::parse(in)), Error);
}

// --------------------------------------------------------------------------
// Simulation

TEST(Simulation, DeterministicGivenSeed) {
  const auto s = scenarios::TrackingScenario::defaults();
  const auto a = scenarios::simulate_truth_and_measurements(s, 5);
  const auto b = scenarios::simulate_truth_and_measurements(s, 5);
  const auto c = scenarios::simulate_truth_and_measurements(s, 6);
  ASSERT_EQ(a.truth.size(), s.horizon + 1);
  ASSERT_EQ(a.measurements.size(), s.sensor_count());
  for (std::size_t k = 0; k <= s.horizon; ++k) EXPECT_EQ(a.truth[k], b.truth[k]);
  for (std::size_t i = 0; i < s.sensor_count(); ++i) EXPECT_EQ(a.measurements[i], b.measurements[i]);
  EXPECT_NE(a.truth.back(), c.truth.back());
}

TEST(Simulation, NoiseFreeTrackingIsConstantVelocity) {
  const auto s = scenarios::TrackingScenario::defaults();
  const auto sim = scenarios::simulate_truth_and_measurements(s, 1, {false, false});
  for (std::size_t k = 0; k <= s.horizon; ++k) {
    const double t = static_cast<double>(k) * s.dt;
    EXPECT_NEAR(sim.truth[k](0), 100 + 10 * t, 1e-9);
    EXPECT_NEAR(sim.truth[k](2), 100 + 5 * t, 1e-9);
  }
  EXPECT_NEAR(sim.measurements[3][9](0), sim.truth[10](0), 1e-12);
}

TEST(Simulation, NoiseFreeRobotWithoutTurnIsStraight) {
  auto s = scenarios::RobotScenario::defaults();
  s.turn_rate = 0.0;
  const auto sim = scenarios::simulate_truth_and_measurements(s, 1, {false, false});
  for (std::size_t k = 0; k <= s.horizon; ++k) {
    EXPECT_NEAR(sim.truth[k](0), 200 + 25 * s.dt * static_cast<double>(k), 1e-9);
    EXPECT_NEAR(sim.truth[k](1), 200, 1e-12);
    EXPECT_NEAR(sim.truth[k](2), 0, 1e-15);
  }
}

TEST(Simulation, KfSteadyStateOrderedByNoiseTier) {
  const auto s = scenarios::TrackingScenario::defaults();
  const auto sim = scenarios::simulate_truth_and_measurements(s, 8);
  std::vector<double> traces;
  for (std::size_t i = 0; i < s.sensor_count(); ++i) {
    const auto m = s.model(i);
    EstimatePair est = scenarios::initial_estimate(s, i, 8);
    for (std::size_t k = 1; k <= s.horizon; ++k) est = filters::kf_step(est, m, sim.measurements[i][k - 1]);
    traces.push_back(est.P.trace());
  }
  const double tier1 = *std::max_element(traces.begin(), traces.begin() + 3);
  const double tier2_lo = *std::min_element(traces.begin() + 3, traces.begin() + 6);
  const double tier2_hi = *std::max_element(traces.begin() + 3, traces.begin() + 6);
  const double tier3 = *std::min_element(traces.begin() + 6, traces.end());
  EXPECT_LT(tier1, tier2_lo);
  EXPECT_LT(tier2_hi, tier3);
}

TEST(Simulation, InitialEstimateUsesPriorCovariance) {
  const auto s = scenarios::TrackingScenario::defaults();
  const auto p = scenarios::initial_estimate(s, 2, 4);
  EXPECT_EQ(p.P, Matrix(s.initial_variance.asDiagonal()));
  EXPECT_NE(p.x, s.x0);
  EXPECT_EQ(p.x, scenarios::initial_estimate(s, 2, 4).x);
}

// --------------------------------------------------------------------------
// Arrivals and trigger policies

scenarios::ArrivalSchedule schedule_at(const std::vector<double>& fractions, double dt, TriggerPolicy policy) {
  scenarios::ArrivalSchedule s;
  s.period = dt;
  s.policy = policy;
  for (std::size_t i = 0; i < fractions.size(); ++i) s.arrivals.push_back({i, fractions[i] * dt});
  s.validate();
  return s;
}

TEST(TriggerPolicy, ParseAndName) {
  EXPECT_EQ(TriggerPolicy::parse("after-all"), TriggerPolicy::after_all());
  EXPECT_EQ(TriggerPolicy::parse("every"), TriggerPolicy::every_arrival());
  EXPECT_EQ(TriggerPolicy::parse("periodic:10"), TriggerPolicy::periodic(10));
  EXPECT_EQ(TriggerPolicy::periodic(3).name(), "periodic:3");
  EXPECT_THROW(TriggerPolicy::parse("periodic:"), Error);
  EXPECT_THROW(TriggerPolicy::parse("periodic:0"), Error);
  EXPECT_THROW(TriggerPolicy::parse("sometimes"), Error);
}

TEST(TriggerPlan, PolicyExamples) {
  const std::vector<double> f{0.01, 0.02, 0.03, 0.11};
  EXPECT_EQ(scenarios::structure_from_schedule(schedule_at(f, 0.2, TriggerPolicy::after_all())).batch_sizes(),
            std::vector<std::size_t>{4});
  EXPECT_EQ(scenarios::structure_from_schedule(schedule_at(f, 0.2, TriggerPolicy::every_arrival())).batch_sizes(),
            (std::vector<std::size_t>{1, 1, 1, 1}));
  EXPECT_EQ(scenarios::structure_from_schedule(schedule_at(f, 0.2, TriggerPolicy::periodic(10))).batch_sizes(),
            (std::vector<std::size_t>{3, 1}));
}

TEST(TriggerPlan, PeriodicTicksAndOffsets) {
  const auto plan = scenarios::trigger_plan(schedule_at({0.01, 0.02, 0.03, 0.11, 0.95}, 0.2, TriggerPolicy::periodic(10)));
  ASSERT_EQ(plan.size(), 3u);
  EXPECT_EQ(plan[0].tick, 1u);
  EXPECT_EQ(plan[1].tick, 2u);
  EXPECT_EQ(plan[2].tick, 10u);
  EXPECT_EQ(plan[0].count, 3u);
  EXPECT_EQ(plan[2].first, 4u);
  EXPECT_NEAR(plan[1].offset, 0.04, 1e-15);
  const auto after = scenarios::trigger_plan(schedule_at({0.1, 0.7}, 0.2, TriggerPolicy::after_all()));
  ASSERT_EQ(after.size(), 1u);
  EXPECT_DOUBLE_EQ(after[0].offset, 0.7 * 0.2);
}

TEST(TriggerPlan, GeneratedSchedulesGiveValidStructures) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    for (const auto& policy : {TriggerPolicy::after_all(), TriggerPolicy::every_arrival(), TriggerPolicy::periodic(10),
                               TriggerPolicy::periodic(1)}) {
      const auto s = scenarios::generate_arrivals(1 + seed % 10, 0.2, seed, policy);
      EXPECT_NO_THROW(s.validate());
      const auto st = scenarios::structure_from_schedule(s);
      EXPECT_EQ(st.size(), s.arrivals.size());
      EXPECT_EQ(st.prefix(st.steps()), st.size());
      for (std::size_t j = 0; j < st.size(); ++j) EXPECT_EQ(st.order()[j], s.arrivals[j].sensor);
    }
  }
}

TEST(ArrivalSchedule, RejectsBadOffsets) {
  scenarios::ArrivalSchedule s;
  s.period = 1.0;
  s.arrivals = {{0, 0.5}, {1, 0.2}};
  EXPECT_THROW(s.validate(), Error);
  s.arrivals = {{0, 1.0}};
  EXPECT_THROW(s.validate(), Error);
}

}  // namespace
}  // namespace esci
