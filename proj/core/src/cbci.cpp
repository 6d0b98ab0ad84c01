#include "esci/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace esci::fusion {

std::vector<double> project_to_simplex(std::span<const double> v) {
  if (v.empty()) return {};
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) theta = candidate;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - theta, 0.0);
  return out;
}

namespace {

class TraceObjective {
 public:
  TraceObjective(std::span<const EstimatePair> pairs, FusionCost* cost) : cost_(cost) {
    if (pairs.empty()) throw Error(ErrorCode::EmptyInput, "trace-minimizing CI needs at least one estimate");
    const Eigen::Index d = pairs.front().dim();
    info_.reserve(pairs.size());
    for (const auto& p : pairs) {
      if (p.dim() != d || p.P.rows() != d) {
        throw Error(ErrorCode::DimensionMismatch, "estimates to fuse must share one dimension");
      }
      info_.push_back(spd_inverse(p.P));
      count_inversion();
    }
  }

  std::size_t size() const { return info_.size(); }

  // Fused covariance for the given weights.
  Matrix fused(std::span<const double> w) const {
    Matrix y = Matrix::Zero(info_.front().rows(), info_.front().cols());
    for (std::size_t j = 0; j < info_.size(); ++j) {
      if (w[j] != 0.0) y.noalias() += w[j] * info_[j];
    }
    count_inversion();
    return spd_inverse(y);
  }

  double value(std::span<const double> w) const { return fused(w).trace(); }

  // d Tr(P_f) / d w_j = -Tr(P_f I_j P_f).
  std::vector<double> gradient(const Matrix& p_fused) const {
    const Matrix sq = p_fused * p_fused;
    std::vector<double> g(info_.size());
    for (std::size_t j = 0; j < info_.size(); ++j) g[j] = -sq.cwiseProduct(info_[j]).sum();
    return g;
  }

 private:
  void count_inversion() const {
    if (cost_) ++cost_->inversions;
  }

  std::vector<Matrix> info_;
  FusionCost* cost_;
};

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

double ci_trace_objective(std::span<const EstimatePair> pairs, std::span<const double> weights) {
  if (weights.size() != pairs.size()) throw Error(ErrorCode::DimensionMismatch, "one weight per estimate required");
  return TraceObjective(pairs, nullptr).value(weights);
}

CbciResult cbci_optimal_weights(std::span<const EstimatePair> pairs, const CbciOptions& options,
                                FusionCost* cost) {
  const TraceObjective objective(pairs, cost);
  const std::size_t n = objective.size();

  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  Matrix p_fused = objective.fused(w);
  double f = p_fused.trace();

  CbciResult result;
  std::vector<double> prev_w, prev_g, trial(n), step(n);
  double alpha = 0.0;
  constexpr double armijo = 1e-4;
  constexpr int max_halvings = 60;

  while (result.iterations < options.max_iterations) {
    const std::vector<double> g = objective.gradient(p_fused);
    ++result.iterations;
    if (cost) ++cost->optimizer_iterations;

    // Projected-gradient residual at unit step.
    for (std::size_t j = 0; j < n; ++j) trial[j] = w[j] - g[j];
    const std::vector<double> unit = project_to_simplex(trial);
    double residual = 0.0;
    for (std::size_t j = 0; j < n; ++j) residual += (w[j] - unit[j]) * (w[j] - unit[j]);
    if (std::sqrt(residual) <= options.gradient_tol) {
      result.converged = true;
      break;
    }

    // Barzilai-Borwein initial step, then backtracking.
    if (!prev_w.empty()) {
      double ss = 0.0, sy = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double s = w[j] - prev_w[j];
        const double y = g[j] - prev_g[j];
        ss += s * s;
        sy += s * y;
      }
      alpha = sy > 0.0 ? ss / sy : 2.0 * alpha;
    } else {
      double gmax = 0.0;
      for (double gj : g) gmax = std::max(gmax, std::abs(gj));
      alpha = gmax > 0.0 ? 1.0 / gmax : 1.0;
    }

    bool accepted = false;
    std::vector<double> candidate;
    Matrix candidate_p;
    double candidate_f = f;
    for (int h = 0; h < max_halvings; ++h, alpha *= 0.5) {
      for (std::size_t j = 0; j < n; ++j) trial[j] = w[j] - alpha * g[j];
      candidate = project_to_simplex(trial);
      for (std::size_t j = 0; j < n; ++j) step[j] = candidate[j] - w[j];
      const double decrease = dot(g, step);
      if (decrease >= 0.0) continue;
      candidate_p = objective.fused(candidate);
      candidate_f = candidate_p.trace();
      if (candidate_f <= f + armijo * decrease) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No descent is representable at this precision: stationary.
      result.converged = true;
      break;
    }
    prev_w = std::move(w);
    prev_g = g;
    w = std::move(candidate);
    p_fused = std::move(candidate_p);
    f = candidate_f;
  }

  result.weights = CiWeights{std::move(w)};
  result.objective = f;
  return result;
}

EstimatePair cbci_fuse(std::span<const EstimatePair> pairs, const CbciOptions& options, FusionCost* cost) {
  const CbciResult opt = cbci_optimal_weights(pairs, options, cost);
  return bci_fuse(pairs, opt.weights, cost);
}

}  // namespace esci::fusion
