#include "esci/experiments.hpp"

#include "esci/random.hpp"

#include <cmath>

namespace esci::experiments {

ConsistencyReport consistency_suite(const ConsistencyOptions& options) {
  if (options.trials < 2) throw Error(ErrorCode::InvalidArgument, "consistency_suite: need at least two trials");
  if (!(options.correlation >= 0.0 && options.correlation <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "consistency_suite: correlation must lie in [0, 1]");
  }
  std::vector<Matrix> truth_cov = options.covariances;
  if (truth_cov.empty()) {
    for (const auto& p : scenarios::demo_pairs()) truth_cov.push_back(p.P);
  }
  const std::size_t n = truth_cov.size();
  const Eigen::Index d = truth_cov.front().rows();
  std::vector<Matrix> factors;
  for (const auto& c : truth_cov) {
    if (c.rows() != d) throw Error(ErrorCode::DimensionMismatch, "consistency_suite: covariances differ in size");
    factors.push_back(cholesky_lower(c));
  }

  const double shared = std::sqrt(options.correlation);
  const double own = std::sqrt(1.0 - options.correlation);
  const Vector truth = Vector::LinSpaced(d, 1.0, static_cast<double>(d));

  Rng rng = make_rng(options.seed, "consistency");
  std::normal_distribution<double> normal;
  auto draw = [&] {
    Vector z(d);
    for (Eigen::Index i = 0; i < d; ++i) z(i) = normal(rng);
    return z;
  };

  Vector err_sum = Vector::Zero(d);
  Vector err_sq = Vector::Zero(d);
  Matrix outer = Matrix::Zero(d, d);
  double nees_sum = 0.0;
  Matrix fused_cov;
  std::vector<EstimatePair> pairs(n);

  for (std::size_t t = 0; t < options.trials; ++t) {
    const Vector common = draw();
    for (std::size_t i = 0; i < n; ++i) {
      pairs[i].x = truth + factors[i] * (shared * common + own * draw());
      pairs[i].P = options.covariance_scale * truth_cov[i];
    }
    const auto structure = fusion::random_structure(n, derive_seed(options.seed, "structure", t));
    const EstimatePair fused = fusion::esci_recursive(pairs, structure, options.importance);
    if (t == 0) fused_cov = fused.P;
    const Vector e = fused.x - truth;
    err_sum += e;
    err_sq += e.cwiseProduct(e);
    outer.noalias() += e * e.transpose();
    nees_sum += nees(fused, truth);
  }

  const double count = static_cast<double>(options.trials);
  ConsistencyReport report;
  report.trials = options.trials;
  report.bias = err_sum / count;
  const Vector variance = (err_sq - count * report.bias.cwiseProduct(report.bias)) / (count - 1.0);
  report.bias_z = report.bias.array() / (variance.array() / count).sqrt();
  report.fused_covariance = fused_cov;
  report.sample_mse = outer / count;
  report.mean_nees = nees_sum / count;

  Eigen::SelfAdjointEigenSolver<Matrix> margin(symmetrize(fused_cov - report.sample_mse), Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Matrix> claimed(symmetrize(fused_cov), Eigen::EigenvaluesOnly);
  report.min_eigen_margin = margin.eigenvalues().minCoeff();
  report.lambda_max = claimed.eigenvalues().maxCoeff();
  report.unbiased = report.bias_z.cwiseAbs().maxCoeff() <= options.bias_z_limit;
  report.consistent = is_conservative(fused_cov, report.sample_mse, options.consistency_tol);
  return report;
}

}  // namespace esci::experiments
