#include "esci/experiments.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace esci::experiments {
namespace {

using fusion::FusionStructure;
using fusion::ImportanceKind;

std::vector<AlgorithmSpec> esci_and_csci() {
  return make_algorithms({"csci", "esci"}, {"inv_trace", "inv_det", "trace_info"});
}

TEST(Algorithms, MakeAndLabel) {
  const auto algs = make_algorithms({"cbci", "csci", "esci"}, {"inv_trace", "inv_trace_info"});
  ASSERT_EQ(algs.size(), 4u);
  EXPECT_EQ(algs[0].label(), "CBCI");
  EXPECT_EQ(algs[1].importance_name(), "-");
  EXPECT_EQ(algs[2].label(), "ESCI:inv_trace");
  EXPECT_EQ(algs[3].label(), "ESCI:inv_trace_info");
  EXPECT_THROW(make_algorithms({"xci"}, {"inv_trace"}), Error);
  EXPECT_THROW(make_algorithms({"esci"}, {}), Error);
  EXPECT_THROW(make_algorithms({"esci"}, {"nope"}), Error);
  EXPECT_THROW(make_algorithms({}, {"inv_trace"}), Error);
}

TEST(SweepStructures, BatchFirstAndDistinct) {
  const auto s = sweep_structures(4, 10, 3);
  ASSERT_EQ(s.size(), 10u);
  EXPECT_EQ(s[0], FusionStructure::batch(4));
  std::set<std::string> seen;
  for (const auto& st : s) seen.insert(st.describe());
  EXPECT_EQ(seen.size(), 10u);
  EXPECT_EQ(sweep_structures(4, 10, 3), s);
  EXPECT_EQ(sweep_structures(1, 5, 3).size(), 1u);
}

TEST(EllipseSweep, EsciInvariantCsciNot) {
  Rng rng(11);
  const auto pairs = testing::random_pairs(5, 2, rng);
  const auto structures = sweep_structures(pairs.size(), 10, 17);
  const auto entries = run_ellipse_sweep(pairs, structures, esci_and_csci(), 40);
  ASSERT_EQ(entries.size(), 40u);
  double csci_spread = 0.0;
  for (const auto& e : entries) {
    EXPECT_EQ(e.ellipse.size(), 40u);
    const auto& ref = *std::find_if(entries.begin(), entries.end(), [&](const SweepEntry& o) {
      return o.algorithm.label() == e.algorithm.label() && o.structure_id == 0;
    });
    const double dev = testing::pair_deviation(e.fused, ref.fused);
    if (e.algorithm.algorithm == Algorithm::Esci) {
      EXPECT_LE(dev, 1e-9) << e.algorithm.label() << " structure " << e.structure_id;
      EXPECT_LE(testing::pair_deviation(e.fused, fusion::esci_closed_form(pairs, e.algorithm.importance)), 1e-9);
    } else {
      csci_spread = std::max(csci_spread, dev);
    }
  }
  EXPECT_GT(csci_spread, 1e-6);
}

TEST(EllipseSweep, BatchStructureEqualsBatchFusion) {
  const auto pairs = scenarios::demo_pairs();
  const auto algs = make_algorithms({"cbci", "csci", "esci"}, {"inv_trace", "det_info"});
  const auto entries = run_ellipse_sweep(pairs, {FusionStructure::batch(4)}, algs);
  const EstimatePair cbci = fusion::cbci_fuse(pairs);
  for (const auto& e : entries) {
    const EstimatePair expected =
        e.algorithm.algorithm == Algorithm::Esci ? fusion::esci_closed_form(pairs, e.algorithm.importance) : cbci;
    EXPECT_LE(testing::pair_deviation(e.fused, expected), 1e-9) << e.algorithm.label();
  }
}

TEST(EllipseSweep, RejectsEmptyStructures) {
  EXPECT_THROW(run_ellipse_sweep(scenarios::demo_pairs(), {}, esci_and_csci()), Error);
}

TrackingOptions small_tracking(std::size_t runs, std::uint64_t seed) {
  TrackingOptions o;
  o.algorithms = make_algorithms({"cbci", "csci", "esci"}, {"inv_trace", "inv_trace_info"});
  o.runs = runs;
  o.seed = seed;
  o.cost_profile_runs = runs;
  return o;
}

TEST(TrackingBenchmark, ShapesAndDeterminism) {
  const auto sc = scenarios::TrackingScenario::defaults();
  auto o = small_tracking(3, 7);
  const auto a = run_tracking_benchmark(sc, o);
  o.threads = 1;
  const auto b = run_tracking_benchmark(sc, o);
  ASSERT_EQ(a.rmse.series.size(), 4u);
  for (std::size_t s = 0; s < a.rmse.series.size(); ++s) {
    const auto& sa = a.rmse.series[s];
    ASSERT_EQ(sa.rmse.size(), sc.horizon);
    EXPECT_EQ(sa.run_mse.size(), 3u);
    EXPECT_EQ(sa.rmse, b.rmse.series[s].rmse);
    for (double v : sa.rmse) EXPECT_GE(v, 0.0);
  }
  EXPECT_EQ(a.rmse.fingerprint, b.rmse.fingerprint);
  EXPECT_EQ(a.trajectory.truth.size(), sc.horizon + 1);
  EXPECT_EQ(a.trajectory.estimates.at("CSCI").size(), sc.horizon);
  o.seed = 8;
  EXPECT_NE(run_tracking_benchmark(sc, o).rmse.series[0].rmse, a.rmse.series[0].rmse);
  o.runs = 0;
  EXPECT_THROW(run_tracking_benchmark(sc, o), Error);
}

TEST(TrackingBenchmark, CostTimestampsOnPeriodicGrid) {
  const auto sc = scenarios::TrackingScenario::defaults();
  const auto r = run_tracking_benchmark(sc, small_tracking(2, 3));
  const double quantum = sc.dt / 10.0;
  std::map<std::string, std::map<std::size_t, std::size_t>> per_period;
  for (const auto& rec : r.cost.records) {
    per_period[rec.algorithm][rec.run * 1000 + rec.period] += 1;
    if (rec.algorithm == "CBCI") continue;
    EXPECT_EQ(rec.trigger_time, static_cast<double>(rec.tick) * sc.dt / 10.0);
    const double q = rec.trigger_time / quantum;
    EXPECT_NEAR(q, std::round(q), 1e-9);
  }
  for (const auto& [period, count] : per_period.at("CBCI")) EXPECT_EQ(count, 1u) << period;
  std::size_t esci_triggers = 0;
  for (const auto& [period, count] : per_period.at("ESCI:inv_trace")) esci_triggers += count;
  EXPECT_GT(esci_triggers, 2 * per_period.at("ESCI:inv_trace").size());
  for (const auto& rec : r.cost.records) {
    if (rec.algorithm.starts_with("ESCI")) EXPECT_EQ(rec.cost.optimizer_iterations, 0u);
    if (rec.algorithm == "CBCI") EXPECT_GT(rec.cost.optimizer_iterations, 0u);
  }
}

TEST(TrackingBenchmark, NoMeasurementNoiseGivesSimilarAccuracy) {
  const auto sc = scenarios::TrackingScenario::defaults();
  TrackingOptions o;
  o.algorithms = make_algorithms({"cbci", "csci", "esci"}, {"inv_det", "inv_trace", "inv_trace_info"});
  o.runs = 1;
  o.seed = 5;
  o.simulation.measurement_noise = false;
  const auto r = run_tracking_benchmark(sc, o);
  std::map<std::string, double> mean;
  for (const auto& s : r.rmse.series) {
    // Skip the initial transient from the random filter priors.
    double sum = 0.0;
    for (std::size_t k = 20; k < s.rmse.size(); ++k) sum += s.rmse[k];
    mean[s.algorithm.label()] = sum / static_cast<double>(s.rmse.size() - 20);
    EXPECT_LT(mean[s.algorithm.label()], 1.0) << s.algorithm.label();
  }
  // Near trace-optimal weightings agree; the other importance functions
  // still weight the sensors differently and are not expected to.
  const double lo = std::min({mean["CBCI"], mean["CSCI"], mean["ESCI:inv_det"]});
  const double hi = std::max({mean["CBCI"], mean["CSCI"], mean["ESCI:inv_det"]});
  EXPECT_LE(hi, 1.1 * lo);
}

TEST(RobotBenchmark, EsciIdenticalAcrossStructuresCsciNot) {
  const auto sc = scenarios::RobotScenario::defaults();
  RobotOptions o;
  o.algorithms = esci_and_csci();
  o.structures = sweep_structures(4, 6, 9);
  o.runs = 2;
  o.seed = 4;
  const auto r = run_robot_benchmark(sc, o);
  EXPECT_EQ(r.rmse.excluded_runs, 0u);
  EXPECT_EQ(r.rmse.structures.size(), 6u);
  ASSERT_EQ(r.rmse.series.size(), 4u * 6u);
  for (const auto& a : o.algorithms) {
    const auto& base = r.rmse.find(a.label(), 0);
    double spread = 0.0;
    for (std::size_t s = 1; s < 6; ++s) {
      const auto& other = r.rmse.find(a.label(), s);
      ASSERT_EQ(other.rmse.size(), sc.horizon);
      for (std::size_t k = 0; k < sc.horizon; ++k) {
        spread = std::max(spread, std::abs(other.rmse[k] - base.rmse[k]) / base.rmse[k]);
      }
    }
    if (a.algorithm == Algorithm::Esci) {
      EXPECT_LE(spread, 1e-9) << a.label();
    } else {
      EXPECT_GT(spread, 0.0) << a.label();
    }
  }
  EXPECT_THROW(r.rmse.find("ESCI:det_info", 0), Error);
}

TEST(CompareRuns, PairedDifference) {
  RmseSeries lo;
  RmseSeries hi;
  lo.run_mse = {1, 2, 3, 4};
  hi.run_mse = {2, 3, 4, 6};
  const auto c = compare_runs(lo, hi);
  EXPECT_DOUBLE_EQ(c.mean_difference, 1.25);
  EXPECT_NEAR(c.standard_error, 0.25, 1e-15);
  EXPECT_NEAR(c.z(), 5.0, 1e-12);
  hi.run_mse.pop_back();
  EXPECT_THROW(compare_runs(lo, hi), Error);
}

ConsistencyOptions consistency(double rho, double scale) {
  ConsistencyOptions o;
  o.trials = 20000;
  o.seed = 21;
  o.correlation = rho;
  o.covariance_scale = scale;
  return o;
}

TEST(ConsistencySuite, IndependentErrors) {
  const auto r = consistency_suite(consistency(0.0, 1.0));
  EXPECT_TRUE(r.passed()) << "margin " << r.min_eigen_margin << " bias z " << r.bias_z.transpose();
  EXPECT_EQ(r.trials, 20000u);
}

TEST(ConsistencySuite, CorrelatedErrorsStayConsistent) {
  for (auto kind : {ImportanceKind::InvTrace, ImportanceKind::InvDet, ImportanceKind::InvTraceInfo}) {
    auto o = consistency(0.9, 1.0);
    o.importance = kind;
    const auto r = consistency_suite(o);
    EXPECT_TRUE(r.passed()) << "margin " << r.min_eigen_margin << " bias z " << r.bias_z.transpose();
  }
}

TEST(ConsistencySuite, UnderstatedCovariancesFail) {
  const auto r = consistency_suite(consistency(0.9, 0.1));
  EXPECT_FALSE(r.consistent);
  EXPECT_LT(r.min_eigen_margin, 0.0);
  EXPECT_GT(r.mean_nees, 2.0);
}

TEST(ConsistencySuite, RejectsBadOptions) {
  EXPECT_THROW(consistency_suite(consistency(1.5, 1.0)), Error);
  auto o = consistency(0.5, 1.0);
  o.trials = 1;
  EXPECT_THROW(consistency_suite(o), Error);
}

}  // namespace
}  // namespace esci::experiments
