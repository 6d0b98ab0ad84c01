#include "esci/fusion.hpp"

#include <numeric>

namespace esci::fusion {
namespace {

void check_uniform_dimension(std::span<const EstimatePair> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyInput, "fusion requires at least one estimate");
  const Eigen::Index d = pairs.front().dim();
  for (const auto& p : pairs) {
    if (p.dim() != d || p.P.rows() != d || p.P.cols() != d) {
      throw Error(ErrorCode::DimensionMismatch, "estimates to fuse must share one dimension");
    }
  }
}

// Accumulates w * P^-1 and w * P^-1 x into (info, info_state).
void accumulate(const EstimatePair& p, double w, Matrix& info, Vector& info_state, FusionCost* cost) {
  if (w == 0.0) return;
  const Matrix p_inv = spd_inverse(p.P);
  if (cost) ++cost->inversions;
  info.noalias() += w * p_inv;
  info_state.noalias() += w * (p_inv * p.x);
}

EstimatePair from_information(const Matrix& info, const Vector& info_state, FusionCost* cost) {
  EstimatePair out;
  out.P = spd_inverse(info);
  if (cost) ++cost->inversions;
  out.x = out.P * info_state;
  return out;
}

}  // namespace

EstimatePair bci_fuse(std::span<const EstimatePair> pairs, const CiWeights& weights, FusionCost* cost) {
  check_uniform_dimension(pairs);
  if (weights.size() != pairs.size()) {
    throw Error(ErrorCode::DimensionMismatch, "bci_fuse: one weight per estimate required");
  }
  if (!(weights.sum() > 0.0)) throw Error(ErrorCode::InvalidArgument, "bci_fuse: weights sum to zero");
  const Eigen::Index d = pairs.front().dim();
  Matrix info = Matrix::Zero(d, d);
  Vector info_state = Vector::Zero(d);
  for (std::size_t j = 0; j < pairs.size(); ++j) accumulate(pairs[j], weights.values[j], info, info_state, cost);
  return from_information(info, info_state, cost);
}

EstimatePair fuse_step(const std::optional<EstimatePair>& prior, std::span<const EstimatePair> batch,
                       const StepWeights& weights, FusionCost* cost) {
  check_uniform_dimension(batch);
  if (weights.batch.size() != batch.size()) {
    throw Error(ErrorCode::DimensionMismatch, "fuse_step: one weight per batch estimate required");
  }
  const Eigen::Index d = batch.front().dim();
  if (prior && prior->dim() != d) throw Error(ErrorCode::DimensionMismatch, "fuse_step: prior dimension");
  if (!(weights.sum() > 0.0)) throw Error(ErrorCode::InvalidArgument, "fuse_step: weights sum to zero");
  Matrix info = Matrix::Zero(d, d);
  Vector info_state = Vector::Zero(d);
  // The first step has no prior; its (zero) information contributes nothing.
  if (prior) accumulate(*prior, weights.prior, info, info_state, cost);
  for (std::size_t j = 0; j < batch.size(); ++j) accumulate(batch[j], weights.batch[j], info, info_state, cost);
  return from_information(info, info_state, cost);
}

EstimatePair esci_closed_form(std::span<const EstimatePair> pairs, const ImportanceFunction& f,
                              FusionCost* cost) {
  check_uniform_dimension(pairs);
  std::vector<double> raw;
  raw.reserve(pairs.size());
  for (const auto& p : pairs) raw.push_back(importance(p, f, cost));
  return bci_fuse(pairs, CiWeights::normalized(std::move(raw)), cost);
}

std::vector<StepWeights> analytical_step_weights(const FusionStructure& structure,
                                                 std::span<const double> f_values) {
  if (f_values.size() != structure.size()) {
    throw Error(ErrorCode::DimensionMismatch, "analytical_step_weights: one f value per estimate required");
  }
  for (double v : f_values) {
    if (!(v > 0.0)) throw Error(ErrorCode::InvalidArgument, "importance values must be positive");
  }
  std::vector<StepWeights> steps;
  steps.reserve(structure.steps());
  double previous_sum = 0.0;
  for (std::size_t i = 0; i < structure.steps(); ++i) {
    double batch_sum = 0.0;
    for (std::size_t j = structure.prefix(i); j < structure.prefix(i + 1); ++j) {
      batch_sum += f_values[structure.order()[j]];
    }
    const double total = previous_sum + batch_sum;
    StepWeights w;
    w.prior = previous_sum / total;
    for (std::size_t j = structure.prefix(i); j < structure.prefix(i + 1); ++j) {
      w.batch.push_back(f_values[structure.order()[j]] / total);
    }
    steps.push_back(std::move(w));
    previous_sum = total;
  }
  return steps;
}

EstimatePair sequential_fuse(std::span<const EstimatePair> pairs, const FusionStructure& structure,
                             std::span<const StepWeights> step_weights, FusionCost* cost) {
  check_uniform_dimension(pairs);
  if (structure.size() != pairs.size()) {
    throw Error(ErrorCode::InvalidStructure, "structure size differs from the number of estimates");
  }
  if (step_weights.size() != structure.steps()) {
    throw Error(ErrorCode::InvalidArgument, "one weight set per fusion step required");
  }
  std::optional<EstimatePair> fused;
  std::vector<EstimatePair> batch;
  for (std::size_t i = 0; i < structure.steps(); ++i) {
    batch.clear();
    for (std::size_t j = structure.prefix(i); j < structure.prefix(i + 1); ++j) {
      batch.push_back(pairs[structure.order()[j]]);
    }
    fused = fuse_step(fused, batch, step_weights[i], cost);
  }
  return *fused;
}

EstimatePair esci_recursive(std::span<const EstimatePair> pairs, const FusionStructure& structure,
                            const ImportanceFunction& f, FusionCost* cost) {
  check_uniform_dimension(pairs);
  if (structure.size() != pairs.size()) {
    throw Error(ErrorCode::InvalidStructure, "structure size differs from the number of estimates");
  }
  std::vector<double> f_values;
  f_values.reserve(pairs.size());
  for (const auto& p : pairs) f_values.push_back(importance(p, f, cost));
  const auto steps = analytical_step_weights(structure, f_values);
  return sequential_fuse(pairs, structure, steps, cost);
}

CiWeights unroll_step_weights(const FusionStructure& structure, std::span<const StepWeights> steps) {
  if (steps.size() != structure.steps()) {
    throw Error(ErrorCode::InvalidArgument, "one weight set per fusion step required");
  }
  std::vector<double> u(structure.size(), 0.0);
  // Weight of step i's batch in the final result: w_{i,j} times the prior
  // weights of every later step.
  double carry = 1.0;
  for (std::size_t i = structure.steps(); i-- > 0;) {
    const StepWeights& w = steps[i];
    if (w.batch.size() != structure.batch_sizes()[i]) {
      throw Error(ErrorCode::InvalidArgument, "step weight count differs from the batch size");
    }
    for (std::size_t k = 0; k < w.batch.size(); ++k) {
      u[structure.order()[structure.prefix(i) + k]] = carry * w.batch[k];
    }
    carry *= w.prior;
  }
  return {std::move(u)};
}

CiWeights unrolled_weights(const FusionStructure& structure, std::span<const double> f_values) {
  const auto steps = analytical_step_weights(structure, f_values);
  return unroll_step_weights(structure, steps);
}

}  // namespace esci::fusion
