#include "esci/fusion.hpp"

#include <cmath>
#include <numeric>

namespace esci::fusion {

ImportanceFunction ImportanceFunction::weighted_inv_trace(Vector diagonal) {
  if (diagonal.size() > 0 && (diagonal.array() <= 0.0).any()) {
    throw Error(ErrorCode::InvalidArgument, "weighted_inv_trace: D must have a positive diagonal");
  }
  ImportanceFunction f(ImportanceKind::WeightedInvTrace);
  f.diagonal_ = std::move(diagonal);
  return f;
}

std::string ImportanceFunction::name() const {
  switch (kind_) {
    case ImportanceKind::InvTrace: return "inv_trace";
    case ImportanceKind::InvDet: return "inv_det";
    case ImportanceKind::TraceInfo: return "trace_info";
    case ImportanceKind::DetInfo: return "det_info";
    case ImportanceKind::WeightedInvTrace: return "weighted_inv_trace";
    case ImportanceKind::InvTraceInfo: return "inv_trace_info";
  }
  return "unknown";
}

ImportanceFunction parse_importance(std::string_view name) {
  if (name == "inv_trace") return ImportanceKind::InvTrace;
  if (name == "inv_det") return ImportanceKind::InvDet;
  if (name == "trace_info") return ImportanceKind::TraceInfo;
  if (name == "det_info") return ImportanceKind::DetInfo;
  if (name == "weighted_inv_trace") return ImportanceFunction::weighted_inv_trace(Vector());
  if (name == "inv_trace_info") return ImportanceKind::InvTraceInfo;
  throw Error(ErrorCode::InvalidArgument, "unknown importance function '" + std::string(name) + "'");
}

double CiWeights::sum() const { return std::accumulate(values.begin(), values.end(), 0.0); }

bool CiWeights::is_valid(double tol) const {
  if (values.empty()) return false;
  for (double v : values) {
    if (!(v >= -tol && v <= 1.0 + tol)) return false;
  }
  return std::abs(sum() - 1.0) <= tol;
}

CiWeights CiWeights::normalized(std::vector<double> raw) {
  double total = 0.0;
  for (double v : raw) {
    if (!(v >= 0.0)) throw Error(ErrorCode::InvalidArgument, "CI weights must be nonnegative");
    total += v;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidArgument, "CI weights sum to zero");
  for (double& v : raw) v /= total;
  return {std::move(raw)};
}

double StepWeights::sum() const { return prior + std::accumulate(batch.begin(), batch.end(), 0.0); }

double importance(const EstimatePair& p, const ImportanceFunction& f, FusionCost* cost) {
  const Matrix& P = p.P;
  double value = 0.0;
  switch (f.kind()) {
    case ImportanceKind::InvTrace:
      value = 1.0 / P.trace();
      break;
    case ImportanceKind::InvDet:
      value = 1.0 / P.determinant();
      break;
    case ImportanceKind::TraceInfo:
      value = spd_inverse(P).trace();
      if (cost) ++cost->inversions;
      break;
    case ImportanceKind::DetInfo:
      // Det(P^-1) = 1 / Det(P); no inverse needed.
      value = 1.0 / P.determinant();
      break;
    case ImportanceKind::WeightedInvTrace: {
      const Vector& d = f.diagonal();
      if (d.size() == 0) {
        value = 1.0 / P.trace();
      } else {
        if (d.size() != P.rows()) {
          throw Error(ErrorCode::DimensionMismatch, "weighted_inv_trace: D has the wrong dimension");
        }
        value = 1.0 / d.dot(P.diagonal());
      }
      break;
    }
    case ImportanceKind::InvTraceInfo:
      value = 1.0 / spd_inverse(P).trace();
      if (cost) ++cost->inversions;
      break;
  }
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(ErrorCode::NotPositiveDefinite,
                "importance " + f.name() + " is not a positive finite value; covariance not positive definite");
  }
  return value;
}

}  // namespace esci::fusion
