#include "esci/fusers.hpp"

namespace esci::fusion {

IncrementalFuser::IncrementalFuser(ImportanceFunction f, SpdCheckPolicy policy)
    : f_(std::move(f)), policy_(policy) {}

void IncrementalFuser::reset() {
  dim_ = 0;
  received_ = fusions_ = last_fused_ = 0;
  importance_sum_ = 0.0;
  pending_.clear();
  info_.resize(0, 0);
  info_state_.resize(0);
  fused_.reset();
  cost_ = {};
}

void IncrementalFuser::receive(EstimatePair p) {
  require_valid(p, policy_);
  if (dim_ == 0) {
    dim_ = p.dim();
    info_ = Matrix::Zero(dim_, dim_);
    info_state_ = Vector::Zero(dim_);
  } else if (p.dim() != dim_) {
    throw Error(ErrorCode::DimensionMismatch, "IncrementalFuser: estimate dimension differs from earlier ones");
  }
  const double w = importance(p, f_, &cost_);
  pending_.push_back({std::move(p), w});
  ++received_;
}

std::optional<EstimatePair> IncrementalFuser::trigger() {
  if (pending_.empty()) return std::nullopt;

  double batch_sum = 0.0;
  for (const auto& item : pending_) batch_sum += item.importance;
  const double total = importance_sum_ + batch_sum;

  info_ *= importance_sum_ / total;
  info_state_ *= importance_sum_ / total;
  for (const auto& item : pending_) {
    const Matrix p_inv = spd_inverse(item.pair.P);
    ++cost_.inversions;
    const double w = item.importance / total;
    info_.noalias() += w * p_inv;
    info_state_.noalias() += w * (p_inv * item.pair.x);
  }
  info_ = symmetrize(info_);

  EstimatePair out;
  out.P = spd_inverse(info_);
  ++cost_.inversions;
  out.x = out.P * info_state_;

  importance_sum_ = total;
  ++fusions_;
  last_fused_ = received_;
  pending_.clear();
  fused_ = out;
  return out;
}

CsciFuser::CsciFuser(CbciOptions options, SpdCheckPolicy policy) : options_(options), policy_(policy) {}

void CsciFuser::reset() {
  fusions_ = 0;
  pending_.clear();
  fused_.reset();
  cost_ = {};
}

void CsciFuser::receive(EstimatePair p) {
  require_valid(p, policy_);
  const Eigen::Index d = fused_ ? fused_->dim() : (pending_.empty() ? p.dim() : pending_.front().dim());
  if (p.dim() != d) throw Error(ErrorCode::DimensionMismatch, "CsciFuser: estimate dimension differs");
  pending_.push_back(std::move(p));
}

std::optional<EstimatePair> CsciFuser::trigger() {
  if (pending_.empty()) return std::nullopt;
  std::vector<EstimatePair> operands;
  operands.reserve(pending_.size() + 1);
  if (fused_) operands.push_back(*fused_);
  operands.insert(operands.end(), pending_.begin(), pending_.end());

  const CbciResult opt = cbci_optimal_weights(operands, options_, &cost_);
  StepWeights step;
  std::size_t k = 0;
  if (fused_) step.prior = opt.weights.values[k++];
  step.batch.assign(opt.weights.values.begin() + static_cast<std::ptrdiff_t>(k), opt.weights.values.end());

  fused_ = fuse_step(fused_, pending_, step, &cost_);
  ++fusions_;
  pending_.clear();
  return fused_;
}

EstimatePair csci_fuse(std::span<const EstimatePair> pairs, const FusionStructure& structure,
                       const CbciOptions& options, FusionCost* cost) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyInput, "csci_fuse: no estimates");
  if (structure.size() != pairs.size()) {
    throw Error(ErrorCode::InvalidStructure, "structure size differs from the number of estimates");
  }
  CsciFuser fuser(options);
  for (std::size_t i = 0; i < structure.steps(); ++i) {
    for (std::size_t j = structure.prefix(i); j < structure.prefix(i + 1); ++j) {
      fuser.receive(pairs[structure.order()[j]]);
    }
    fuser.trigger();
  }
  if (cost) *cost += fuser.take_cost();
  return *fuser.fused();
}

}  // namespace esci::fusion
