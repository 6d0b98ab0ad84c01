#include "esci/report_io.hpp"

#include <json.hpp>

#include <charconv>
#include <ostream>

namespace esci::experiments {
namespace {

using nlohmann::json;

void provenance_line(std::ostream& out, const Provenance& prov) {
  out << "# command=" << prov.command << " seed=" << prov.seed << " config=" << prov.config_hash << '\n';
}

json provenance_json(const Provenance& prov) {
  return {{"command", prov.command}, {"seed", prov.seed}, {"config_hash", prov.config_hash}};
}

json pair_json(const EstimatePair& p) {
  json x = json::array();
  for (Eigen::Index i = 0; i < p.x.size(); ++i) x.push_back(p.x(i));
  json rows = json::array();
  for (Eigen::Index r = 0; r < p.P.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < p.P.cols(); ++c) row.push_back(p.P(r, c));
    rows.push_back(std::move(row));
  }
  return {{"x", std::move(x)}, {"P", std::move(rows)}};
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_rmse_csv(std::ostream& out, const RmseReport& report, const Provenance& prov) {
  provenance_line(out, prov);
  out << "step,algorithm,f,structure_id,rmse\n";
  for (const auto& s : report.series) {
    for (std::size_t k = 0; k < s.rmse.size(); ++k) {
      out << k + 1 << ',' << s.algorithm.name() << ',' << s.algorithm.importance_name() << ',' << s.structure_id
          << ',' << format_number(s.rmse[k]) << '\n';
    }
  }
}

void write_cost_csv(std::ostream& out, const CostProfile& profile, const Provenance& prov) {
  provenance_line(out, prov);
  out << "trigger_time,algorithm,inversions,optimizer_iters,wall_ns\n";
  for (const auto& r : profile.records) {
    out << format_number(r.trigger_time) << ',' << r.algorithm << ',' << r.cost.inversions << ','
        << r.cost.optimizer_iterations << ',' << r.wall_ns << '\n';
  }
}

void write_ellipse_csv(std::ostream& out, const std::vector<SweepEntry>& entries, const Provenance& prov) {
  provenance_line(out, prov);
  out << "algorithm,f,structure_id,point,x,y\n";
  for (const auto& e : entries) {
    for (std::size_t i = 0; i < e.ellipse.size(); ++i) {
      out << e.algorithm.name() << ',' << e.algorithm.importance_name() << ',' << e.structure_id << ',' << i << ','
          << format_number(e.ellipse[i].x()) << ',' << format_number(e.ellipse[i].y()) << '\n';
    }
  }
}

void write_trajectory_csv(std::ostream& out, const TrajectorySample& sample, const Provenance& prov) {
  provenance_line(out, prov);
  out << "step,source,x,y\n";
  for (std::size_t k = 0; k < sample.truth.size(); ++k) {
    out << k << ",truth," << format_number(sample.truth[k].x()) << ',' << format_number(sample.truth[k].y()) << '\n';
  }
  for (const auto& [label, points] : sample.estimates) {
    for (std::size_t k = 0; k < points.size(); ++k) {
      out << k + 1 << ',' << label << ',' << format_number(points[k].x()) << ',' << format_number(points[k].y())
          << '\n';
    }
  }
}

std::string pair_to_json(const EstimatePair& p, int indent) { return pair_json(p).dump(indent); }

std::string sweep_to_json(const std::vector<SweepEntry>& entries, const Provenance& prov) {
  json doc = provenance_json(prov);
  json results = json::array();
  for (const auto& e : entries) {
    json item = pair_json(e.fused);
    item["algorithm"] = e.algorithm.name();
    item["f"] = e.algorithm.importance_name();
    item["structure_id"] = e.structure_id;
    item["structure"] = e.structure.describe();
    results.push_back(std::move(item));
  }
  doc["results"] = std::move(results);
  return doc.dump(2);
}

std::vector<EstimatePair> pairs_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorCode::InvalidArgument, "expected a JSON array of {x, P} objects");
  std::vector<EstimatePair> out;
  try {
    for (const auto& item : doc) {
      const auto x = item.at("x").get<std::vector<double>>();
      const auto rows = item.at("P").get<std::vector<std::vector<double>>>();
      EstimatePair p;
      p.x = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
      p.P.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows.size()) throw Error(ErrorCode::DimensionMismatch, "covariance must be square");
        for (std::size_t c = 0; c < rows.size(); ++c) {
          p.P(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
      }
      out.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed estimate pair: ") + e.what());
  }
  return out;
}

void write_summary_json(std::ostream& out, const Summary& summary) {
  json doc = provenance_json(summary.provenance);
  doc["config"] = summary.config_text;
  doc["runs"] = summary.runs;
  doc["excluded_runs"] = summary.excluded_runs;
  doc["structures"] = summary.structures;
  json metrics = json::object();
  for (const auto& [k, v] : summary.metrics) metrics[k] = v;
  doc["metrics"] = std::move(metrics);
  doc["files"] = summary.files;
  doc["diagnostics"] = summary.diagnostics;
  out << doc.dump(2) << '\n';
}

}  // namespace esci::experiments
