#include "esci/estimate.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace esci {

Validation validate_pair(const EstimatePair& p, const SpdCheckPolicy& policy) {
  if (p.P.rows() != p.P.cols() || p.P.rows() != p.x.size() || p.x.size() == 0) {
    std::ostringstream os;
    os << "dimension mismatch: x has " << p.x.size() << " entries, P is " << p.P.rows() << "x"
       << p.P.cols();
    return {PairDefect::DimensionMismatch, os.str()};
  }
  if (!p.x.allFinite() || !p.P.allFinite()) {
    return {PairDefect::NotPositiveDefinite, "non-finite entries; not positive definite"};
  }
  const double scale = p.P.cwiseAbs().maxCoeff();
  const double asym = (p.P - p.P.transpose()).cwiseAbs().maxCoeff();
  if (asym > policy.symmetry_tol * scale) {
    std::ostringstream os;
    os << "covariance not symmetric (max asymmetry " << asym << ")";
    return {PairDefect::NotSymmetric, os.str()};
  }
  const Matrix sym = symmetrize(p.P);
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() != Eigen::Success) {
    return {PairDefect::NotPositiveDefinite, "covariance not positive definite"};
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  const Vector& ev = eig.eigenvalues();
  if (ev(0) <= policy.psd_tol * ev.cwiseAbs().maxCoeff()) {
    std::ostringstream os;
    os << "covariance not positive definite (min eigenvalue " << ev(0) << ")";
    return {PairDefect::NotPositiveDefinite, os.str()};
  }
  return {};
}

void require_valid(const EstimatePair& p, const SpdCheckPolicy& policy) {
  const Validation v = validate_pair(p, policy);
  switch (v.defect) {
    case PairDefect::None:
      return;
    case PairDefect::DimensionMismatch:
      throw Error(ErrorCode::DimensionMismatch, v.message);
    case PairDefect::NotSymmetric:
      throw Error(ErrorCode::NotSymmetric, v.message);
    case PairDefect::NotPositiveDefinite:
      throw Error(ErrorCode::NotPositiveDefinite, v.message);
  }
}

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

Matrix cholesky_lower(const Matrix& a) {
  Eigen::LLT<Matrix> llt(symmetrize(a));
  if (llt.info() != Eigen::Success) {
    std::ostringstream os;
    os << "Cholesky factorization failed; matrix not positive definite:\n" << a;
    throw Error(ErrorCode::NotPositiveDefinite, os.str());
  }
  return llt.matrixL();
}

Matrix spd_inverse(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "spd_inverse: matrix not square");
  }
  Eigen::LLT<Matrix> llt(symmetrize(a));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "spd_inverse: matrix not positive definite");
  }
  return symmetrize(llt.solve(Matrix::Identity(a.rows(), a.cols())));
}

double relative_deviation(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "relative_deviation: shape mismatch");
  }
  const double diff = (a - b).cwiseAbs().maxCoeff();
  const double scale = b.cwiseAbs().maxCoeff();
  return scale > 0.0 ? diff / scale : diff;
}

bool is_conservative(const Matrix& claimed, const Matrix& actual, double tol) {
  if (claimed.rows() != actual.rows() || claimed.cols() != actual.cols() ||
      claimed.rows() != claimed.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "is_conservative: shape mismatch");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> diff(symmetrize(claimed - actual), Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Matrix> ref(symmetrize(claimed), Eigen::EigenvaluesOnly);
  const double lambda_max = ref.eigenvalues().maxCoeff();
  return diff.eigenvalues().minCoeff() >= -tol * lambda_max;
}

std::vector<Eigen::Vector2d> ellipse_points(const EstimatePair& p, int n_points,
                                            double start_angle) {
  if (p.dim() != 2) throw Error(ErrorCode::DimensionMismatch, "ellipse_points: pair must be 2-D");
  if (n_points < 3) throw Error(ErrorCode::InvalidArgument, "ellipse_points: need at least 3 points");
  const Matrix l = cholesky_lower(p.P);
  std::vector<Eigen::Vector2d> out;
  out.reserve(static_cast<std::size_t>(n_points));
  for (int k = 0; k < n_points; ++k) {
    const double angle = start_angle + 2.0 * std::numbers::pi * k / n_points;
    const Eigen::Vector2d u(std::cos(angle), std::sin(angle));
    out.emplace_back(p.x + l * u);
  }
  return out;
}

double nees(const EstimatePair& estimate, const Vector& truth) {
  if (truth.size() != estimate.dim()) throw Error(ErrorCode::DimensionMismatch, "nees: dimension mismatch");
  Eigen::LLT<Matrix> llt(symmetrize(estimate.P));
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, "nees: singular covariance");
  const Vector e = estimate.x - truth;
  return std::max(0.0, e.dot(llt.solve(e)));
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(a, two_pi);  // [-pi, pi]
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

}  // namespace esci
