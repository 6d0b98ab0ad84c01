#pragma once

#include "esci/experiments.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace esci::experiments {

/// Embedded in every output: CSVs start with a `# command=... seed=...
/// config=...` comment line, JSON files carry the same fields.
struct Provenance {
  std::string command;
  std::uint64_t seed = 0;
  std::string config_hash;
};

/// step,algorithm,f,structure_id,rmse
void write_rmse_csv(std::ostream& out, const RmseReport& report, const Provenance& prov);
/// trigger_time,algorithm,inversions,optimizer_iters,wall_ns
void write_cost_csv(std::ostream& out, const CostProfile& profile, const Provenance& prov);
/// algorithm,f,structure_id,point,x,y
void write_ellipse_csv(std::ostream& out, const std::vector<SweepEntry>& entries, const Provenance& prov);
/// step,source,x,y (source is "truth" or an algorithm label)
void write_trajectory_csv(std::ostream& out, const TrajectorySample& sample, const Provenance& prov);

/// {"x": [...], "P": [[...], ...]}
std::string pair_to_json(const EstimatePair& p, int indent = -1);
/// Fused pairs of a sweep, with structure descriptions.
std::string sweep_to_json(const std::vector<SweepEntry>& entries, const Provenance& prov);

/// Parses a JSON array of {"x": [...], "P": [[...]]}. Throws
/// Error(InvalidArgument) on malformed input; does not validate covariances.
std::vector<EstimatePair> pairs_from_json(const std::string& text);

struct Summary {
  Provenance provenance;
  std::string config_text;
  std::size_t runs = 0;
  std::size_t excluded_runs = 0;
  std::vector<std::string> structures;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::string> files;
  std::vector<std::string> diagnostics;
};

void write_summary_json(std::ostream& out, const Summary& summary);

/// Shortest round-trip decimal form.
std::string format_number(double v);

}  // namespace esci::experiments
