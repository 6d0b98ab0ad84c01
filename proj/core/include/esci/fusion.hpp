#pragma once

#include "esci/estimate.hpp"
#include "esci/structure.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace esci::fusion {

// =============================================================================
// Importance functions
// =============================================================================

enum class ImportanceKind {
  InvTrace,          ///< 1 / Tr(P)
  InvDet,            ///< 1 / Det(P)
  TraceInfo,         ///< Tr(P^-1)
  DetInfo,           ///< Det(P^-1)
  WeightedInvTrace,  ///< 1 / Tr(D P), D diagonal with positive entries
  InvTraceInfo,      ///< 1 / Tr(P^-1), the sequential-fast-CI choice
};

/// Positive scalar functional of an estimate pair that sets its relative
/// weight in the structure-invariant weighting.
class ImportanceFunction {
 public:
  ImportanceFunction(ImportanceKind kind = ImportanceKind::InvTrace) : kind_(kind) {}  // NOLINT

  /// WeightedInvTrace with D = diag(weights). An empty vector means D = I.
  static ImportanceFunction weighted_inv_trace(Vector diagonal);

  ImportanceKind kind() const { return kind_; }
  const Vector& diagonal() const { return diagonal_; }

  /// Canonical short name: inv_trace, inv_det, trace_info, det_info,
  /// weighted_inv_trace, inv_trace_info.
  std::string name() const;

 private:
  ImportanceKind kind_;
  Vector diagonal_;
};

/// Parses the names produced by ImportanceFunction::name().
ImportanceFunction parse_importance(std::string_view name);

// =============================================================================
// Weights and bookkeeping
// =============================================================================

/// Work done by a fusion call. Inversions count Cholesky-based inverses (and
/// factorizations used for objective evaluation); optimizer iterations count
/// gradient evaluations of the trace-minimizing weight optimizer.
struct FusionCost {
  std::size_t inversions = 0;
  std::size_t optimizer_iterations = 0;

  FusionCost& operator+=(const FusionCost& o) {
    inversions += o.inversions;
    optimizer_iterations += o.optimizer_iterations;
    return *this;
  }
};

/// Convex-combination weights: each entry in [0, 1], entries sum to 1.
struct CiWeights {
  std::vector<double> values;

  /// Scales nonnegative values to sum to one; throws on a zero or negative sum.
  static CiWeights normalized(std::vector<double> raw);

  std::size_t size() const { return values.size(); }
  double sum() const;
  /// True iff entries lie in [0, 1] and sum to 1 within tol.
  bool is_valid(double tol = 1e-12) const;
};

/// Weights of one sequential step: the weight on the previous fused pair and
/// one weight per newly fused estimate. They sum to one.
struct StepWeights {
  double prior = 0.0;
  std::vector<double> batch;

  double sum() const;
};

// =============================================================================
// Fusion rules
// =============================================================================

/// f({x, P}); strictly positive for a valid pair.
double importance(const EstimatePair& p, const ImportanceFunction& f, FusionCost* cost = nullptr);

/// Batch CI: P = (sum w_j P_j^-1)^-1, x = P sum w_j P_j^-1 x_j.
EstimatePair bci_fuse(std::span<const EstimatePair> pairs, const CiWeights& weights,
                      FusionCost* cost = nullptr);

/// One sequential CI step fusing the previous fused pair (absent on the first
/// step) with a batch of new estimates under the given step weights.
EstimatePair fuse_step(const std::optional<EstimatePair>& prior, std::span<const EstimatePair> batch,
                       const StepWeights& weights, FusionCost* cost = nullptr);

/// Structure-free evaluation: u_i = f_i / sum_j f_j, fused by batch CI.
EstimatePair esci_closed_form(std::span<const EstimatePair> pairs, const ImportanceFunction& f,
                              FusionCost* cost = nullptr);

/// Per-step weights of the structure-invariant criterion:
///   prior_i = S_{b_{i-1}} / S_{b_i},  batch_{i,j} = f_{r_j} / S_{b_i},
/// where S_b sums f over the first b received estimates.
/// f_values is indexed by estimate (not by reception position).
std::vector<StepWeights> analytical_step_weights(const FusionStructure& structure,
                                                 std::span<const double> f_values);

/// Runs the general sequential recursion with explicit per-step weights.
EstimatePair sequential_fuse(std::span<const EstimatePair> pairs, const FusionStructure& structure,
                             std::span<const StepWeights> step_weights, FusionCost* cost = nullptr);

/// Sequential fusion over `structure` with analytical importance weights.
EstimatePair esci_recursive(std::span<const EstimatePair> pairs, const FusionStructure& structure,
                            const ImportanceFunction& f, FusionCost* cost = nullptr);

/// Unrolls arbitrary per-step weights into the equivalent batch weights u.
/// The result is indexed by estimate: u[r_j] is the weight of the j-th
/// received estimate.
CiWeights unroll_step_weights(const FusionStructure& structure, std::span<const StepWeights> steps);

/// Unrolled weights for the analytical criterion; equals f / sum(f).
CiWeights unrolled_weights(const FusionStructure& structure, std::span<const double> f_values);

// =============================================================================
// Trace-minimizing CI (CBCI) and its sequential use (CSCI)
// =============================================================================

struct CbciOptions {
  double gradient_tol = 1e-10;  ///< stop when ||w - proj(w - grad)|| <= tol
  std::size_t max_iterations = 500;
};

struct CbciResult {
  CiWeights weights;
  double objective = 0.0;  ///< Tr((sum w_j P_j^-1)^-1)
  std::size_t iterations = 0;
  bool converged = false;
};

/// Euclidean projection onto the probability simplex.
std::vector<double> project_to_simplex(std::span<const double> v);

/// Tr((sum w_j P_j^-1)^-1).
double ci_trace_objective(std::span<const EstimatePair> pairs, std::span<const double> weights);

/// Minimizes the fused trace over the simplex by projected gradient descent
/// with backtracking, starting from uniform weights. Never throws on hitting
/// the iteration cap; `converged` reports it and the best iterate is returned.
CbciResult cbci_optimal_weights(std::span<const EstimatePair> pairs, const CbciOptions& options = {},
                                FusionCost* cost = nullptr);

/// Batch CI with trace-optimal weights.
EstimatePair cbci_fuse(std::span<const EstimatePair> pairs, const CbciOptions& options = {},
                       FusionCost* cost = nullptr);

/// Sequential fusion where each step jointly optimizes the weights of the
/// previous fused pair and the new batch by trace minimization.
EstimatePair csci_fuse(std::span<const EstimatePair> pairs, const FusionStructure& structure,
                       const CbciOptions& options = {}, FusionCost* cost = nullptr);

}  // namespace esci::fusion
