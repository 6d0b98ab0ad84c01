#include "esci/scenarios.hpp"

#include <algorithm>
#include <cmath>

namespace esci::scenarios {

TriggerPolicy TriggerPolicy::periodic(std::size_t m) {
  if (m == 0) throw Error(ErrorCode::InvalidArgument, "periodic trigger needs m >= 1");
  return TriggerPolicy(Kind::Periodic, m);
}

TriggerPolicy TriggerPolicy::parse(const std::string& text) {
  if (text == "after-all") return after_all();
  if (text == "every") return every_arrival();
  const std::string prefix = "periodic:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string tail = text.substr(prefix.size());
    if (!tail.empty() && std::all_of(tail.begin(), tail.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      return periodic(std::stoul(tail));
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown trigger policy '" + text + "' (after-all, every, periodic:m)");
}

std::string TriggerPolicy::name() const {
  switch (kind_) {
    case Kind::AfterAll: return "after-all";
    case Kind::EveryArrival: return "every";
    case Kind::Periodic: return "periodic:" + std::to_string(intervals_);
  }
  return "unknown";
}

void ArrivalSchedule::validate() const {
  if (!(period > 0.0)) throw Error(ErrorCode::InvalidArgument, "arrival schedule: period must be positive");
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    const double o = arrivals[i].offset;
    if (!(o >= 0.0 && o < period)) throw Error(ErrorCode::InvalidArgument, "arrival offset outside [0, period)");
    if (i > 0 && o < arrivals[i - 1].offset) throw Error(ErrorCode::InvalidArgument, "arrivals not sorted");
  }
}

ArrivalSchedule generate_arrivals(std::size_t n_sensors, double dt, std::uint64_t seed, TriggerPolicy policy) {
  if (n_sensors == 0) throw Error(ErrorCode::InvalidArgument, "generate_arrivals: need at least one sensor");
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "generate_arrivals: dt must be positive");
  Rng rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, dt);
  ArrivalSchedule s;
  s.period = dt;
  s.policy = policy;
  for (std::size_t i = 0; i < n_sensors; ++i) {
    double o = uniform(rng);
    if (o >= dt) o = std::nextafter(dt, 0.0);
    s.arrivals.push_back({i, o});
  }
  std::stable_sort(s.arrivals.begin(), s.arrivals.end(),
                   [](const Arrival& a, const Arrival& b) { return a.offset < b.offset; });
  return s;
}

std::vector<TriggerPoint> trigger_plan(const ArrivalSchedule& schedule) {
  schedule.validate();
  const auto& arr = schedule.arrivals;
  std::vector<TriggerPoint> plan;
  if (arr.empty()) return plan;
  switch (schedule.policy.kind()) {
    case TriggerPolicy::Kind::AfterAll:
      plan.push_back({arr.back().offset, 0, 0, arr.size()});
      break;
    case TriggerPolicy::Kind::EveryArrival:
      for (std::size_t i = 0; i < arr.size(); ++i) plan.push_back({arr[i].offset, i, i, 1});
      break;
    case TriggerPolicy::Kind::Periodic: {
      const std::size_t m = schedule.policy.intervals();
      const double width = schedule.period / static_cast<double>(m);
      auto bin_of = [&](double offset) {
        const auto b = static_cast<std::size_t>(std::floor(offset * static_cast<double>(m) / schedule.period));
        return std::min(b, m - 1);
      };
      for (std::size_t i = 0; i < arr.size();) {
        const std::size_t bin = bin_of(arr[i].offset);
        const std::size_t first = i;
        while (i < arr.size() && bin_of(arr[i].offset) == bin) ++i;
        plan.push_back({static_cast<double>(bin + 1) * width, bin + 1, first, i - first});
      }
      break;
    }
  }
  return plan;
}

fusion::FusionStructure structure_from_schedule(const ArrivalSchedule& schedule) {
  const auto plan = trigger_plan(schedule);
  std::vector<std::size_t> order;
  for (const auto& a : schedule.arrivals) order.push_back(a.sensor);
  std::vector<std::size_t> sizes;
  for (const auto& t : plan) sizes.push_back(t.count);
  return {std::move(order), std::move(sizes)};
}

}  // namespace esci::scenarios
