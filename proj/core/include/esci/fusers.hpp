#pragma once

#include "esci/fusion.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace esci::fusion {

/// Receive/trigger state machine shared by the sequential fusers. Estimates
/// are buffered on receive; a trigger fuses everything pending into the
/// running result. Single owner; not safe for concurrent mutation.
class SequentialFuser {
 public:
  virtual ~SequentialFuser() = default;

  virtual void receive(EstimatePair p) = 0;
  /// Fuses the pending estimates. Returns std::nullopt (and does nothing)
  /// when nothing is pending.
  virtual std::optional<EstimatePair> trigger() = 0;
  /// Latest fused pair, if any fusion has happened.
  virtual std::optional<EstimatePair> fused() const = 0;
  virtual std::size_t pending() const = 0;
  virtual void reset() = 0;

  /// Work accumulated since the previous call.
  FusionCost take_cost() { return std::exchange(cost_, FusionCost{}); }

 protected:
  FusionCost cost_;
};

/// Incremental structure-invariant fuser. Keeps the running result in
/// information form (P^-1, P^-1 x) and the running importance sum W. Each
/// trigger rescales the information state by W_{t-1}/W_t and adds the new
/// estimates with weights w_j/W_t, so the output after any sequence of
/// receives and triggers equals the closed-form fusion of everything fused.
class IncrementalFuser final : public SequentialFuser {
 public:
  explicit IncrementalFuser(ImportanceFunction f, SpdCheckPolicy policy = {});

  void receive(EstimatePair p) override;
  std::optional<EstimatePair> trigger() override;
  std::optional<EstimatePair> fused() const override { return fused_; }
  std::size_t pending() const override { return pending_.size(); }
  void reset() override;

  std::size_t received() const { return received_; }      ///< i
  std::size_t fusions() const { return fusions_; }        ///< t
  std::size_t last_fused() const { return last_fused_; }  ///< b_t
  double importance_sum() const { return importance_sum_; }  ///< W_t
  const ImportanceFunction& importance_function() const { return f_; }

 private:
  struct Pending {
    EstimatePair pair;
    double importance;
  };

  ImportanceFunction f_;
  SpdCheckPolicy policy_;
  Eigen::Index dim_ = 0;
  std::size_t received_ = 0;
  std::size_t fusions_ = 0;
  std::size_t last_fused_ = 0;
  double importance_sum_ = 0.0;
  std::vector<Pending> pending_;
  Matrix info_;
  Vector info_state_;
  std::optional<EstimatePair> fused_;
};

/// Sequential fuser that picks each step's weights (previous result plus the
/// new batch) by trace minimization. With a single trigger after all
/// estimates it is plain trace-optimal batch CI.
class CsciFuser final : public SequentialFuser {
 public:
  explicit CsciFuser(CbciOptions options = {}, SpdCheckPolicy policy = {});

  void receive(EstimatePair p) override;
  std::optional<EstimatePair> trigger() override;
  std::optional<EstimatePair> fused() const override { return fused_; }
  std::size_t pending() const override { return pending_.size(); }
  void reset() override;

  std::size_t fusions() const { return fusions_; }

 private:
  CbciOptions options_;
  SpdCheckPolicy policy_;
  std::size_t fusions_ = 0;
  std::vector<EstimatePair> pending_;
  std::optional<EstimatePair> fused_;
};

}  // namespace esci::fusion
