#include "esci/filters.hpp"

#include <cmath>
#include <sstream>

namespace esci::filters {
namespace {

void wrap_components(Vector& v, const std::vector<Eigen::Index>& indices) {
  for (Eigen::Index i : indices) v(i) = wrap_angle(v(i));
}

// Mean of the columns of `points`. Angular components are averaged as
// offsets from the first column so that a cloud straddling +-pi is handled.
Vector circular_mean(const Matrix& points, const std::vector<Eigen::Index>& angular) {
  Vector mean = points.rowwise().mean();
  for (Eigen::Index a : angular) {
    const double ref = points(a, 0);
    double acc = 0.0;
    for (Eigen::Index c = 0; c < points.cols(); ++c) acc += wrap_angle(points(a, c) - ref);
    mean(a) = wrap_angle(ref + acc / static_cast<double>(points.cols()));
  }
  return mean;
}

Matrix deviations(const Matrix& points, const Vector& mean, const std::vector<Eigen::Index>& angular) {
  Matrix dev = points.colwise() - mean;
  for (Eigen::Index a : angular) {
    for (Eigen::Index c = 0; c < dev.cols(); ++c) dev(a, c) = wrap_angle(dev(a, c));
  }
  return dev;
}

Matrix factor_or_throw(const Matrix& p, const char* stage) {
  Eigen::LLT<Matrix> llt(symmetrize(p));
  if (llt.info() != Eigen::Success) {
    std::ostringstream os;
    os << "ckf_step: Cholesky failure of the " << stage << " covariance:\n" << p;
    throw Error(ErrorCode::NotPositiveDefinite, os.str());
  }
  return llt.matrixL();
}

Matrix points_from_factor(const Vector& mean, const Matrix& l) {
  const Eigen::Index d = mean.size();
  const double scale = std::sqrt(static_cast<double>(d));
  Matrix pts(d, 2 * d);
  for (Eigen::Index i = 0; i < d; ++i) {
    pts.col(i) = mean + scale * l.col(i);
    pts.col(d + i) = mean - scale * l.col(i);
  }
  return pts;
}

}  // namespace

void NonlinearModel::validate() const {
  if (!transition || !measurement) throw Error(ErrorCode::InvalidArgument, "NonlinearModel: missing function");
  if (Q.rows() != Q.cols() || R.rows() != R.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "NonlinearModel: Q and R must be square");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> q(symmetrize(Q), Eigen::EigenvaluesOnly);
  if (q.eigenvalues().minCoeff() < -1e-12 * q.eigenvalues().cwiseAbs().maxCoeff()) {
    throw Error(ErrorCode::NotPositiveDefinite, "NonlinearModel: Q must be positive semidefinite");
  }
  Eigen::LLT<Matrix> r(symmetrize(R));
  if (r.info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, "NonlinearModel: R not positive definite");
  for (Eigen::Index a : angular_state) {
    if (a < 0 || a >= Q.rows()) throw Error(ErrorCode::InvalidArgument, "angular state index out of range");
  }
  for (Eigen::Index a : angular_measurement) {
    if (a < 0 || a >= R.rows()) throw Error(ErrorCode::InvalidArgument, "angular measurement index out of range");
  }
}

Matrix cubature_points(const EstimatePair& p) {
  return points_from_factor(p.x, factor_or_throw(p.P, "prior"));
}

EstimatePair ckf_step(const EstimatePair& prior, const NonlinearModel& model, const Vector& control,
                      const Vector& z, Innovation* innovation) {
  const Eigen::Index d = prior.dim();
  if (model.Q.rows() != d || z.size() != model.R.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "ckf_step: dimension mismatch");
  }
  const double w = 1.0 / static_cast<double>(2 * d);

  // Time update.
  const Matrix prior_pts = cubature_points(prior);
  Matrix propagated(d, prior_pts.cols());
  for (Eigen::Index c = 0; c < prior_pts.cols(); ++c) {
    Vector next = model.transition(prior_pts.col(c), control);
    wrap_components(next, model.angular_state);
    propagated.col(c) = next;
  }
  const Vector x_pred = circular_mean(propagated, model.angular_state);
  const Matrix dx_pred = deviations(propagated, x_pred, model.angular_state);
  const Matrix p_pred = symmetrize(w * dx_pred * dx_pred.transpose() + model.Q);

  // Measurement update from points regenerated at the predicted moments.
  const Matrix pred_pts = points_from_factor(x_pred, factor_or_throw(p_pred, "predicted"));
  const Eigen::Index m = z.size();
  Matrix z_pts(m, pred_pts.cols());
  for (Eigen::Index c = 0; c < pred_pts.cols(); ++c) z_pts.col(c) = model.measurement(pred_pts.col(c));
  const Vector z_pred = circular_mean(z_pts, model.angular_measurement);
  const Matrix dz = deviations(z_pts, z_pred, model.angular_measurement);
  const Matrix dx = deviations(pred_pts, x_pred, model.angular_state);

  const Matrix s = symmetrize(w * dz * dz.transpose() + model.R);
  const Matrix cross = w * dx * dz.transpose();
  Eigen::LLT<Matrix> s_llt(s);
  if (s_llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "ckf_step: innovation covariance not positive definite");
  }
  const Matrix gain = s_llt.solve(cross.transpose()).transpose();

  Vector residual = z - z_pred;
  wrap_components(residual, model.angular_measurement);

  EstimatePair out;
  out.x = x_pred + gain * residual;
  wrap_components(out.x, model.angular_state);
  out.P = symmetrize(p_pred - gain * s * gain.transpose());
  if (innovation) *innovation = {residual, s};
  return out;
}

}  // namespace esci::filters
