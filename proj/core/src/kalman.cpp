#include "esci/filters.hpp"

#include <sstream>

namespace esci::filters {
namespace {

void require_pd(const Matrix& m, const char* name) {
  EstimatePair probe{Vector::Zero(m.rows()), m};
  const Validation v = validate_pair(probe);
  if (!v) throw Error(ErrorCode::NotPositiveDefinite, std::string(name) + ": " + v.message);
}

}  // namespace

void LinearModel::validate() const {
  const Eigen::Index d = F.rows();
  if (F.cols() != d || G.rows() != d || H.cols() != d || Q.rows() != G.cols() || Q.cols() != G.cols() ||
      R.rows() != H.rows() || R.cols() != H.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "LinearModel: inconsistent matrix dimensions");
  }
  require_pd(Q, "LinearModel Q");
  require_pd(R, "LinearModel R");
}

double Innovation::normalized_squared() const {
  Eigen::LLT<Matrix> llt(symmetrize(covariance));
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, "innovation covariance");
  return residual.dot(llt.solve(residual));
}

EstimatePair kf_step(const EstimatePair& prior, const LinearModel& model, const Vector& z,
                     Innovation* innovation) {
  if (prior.dim() != model.state_dim() || z.size() != model.measurement_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "kf_step: dimension mismatch");
  }
  const Vector x_pred = model.F * prior.x;
  const Matrix p_pred =
      symmetrize(model.F * prior.P * model.F.transpose() + model.G * model.Q * model.G.transpose());

  const Vector residual = z - model.H * x_pred;
  const Matrix s = symmetrize(model.H * p_pred * model.H.transpose() + model.R);
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) {
    std::ostringstream os;
    os << "kf_step: innovation covariance not positive definite:\n" << s;
    throw Error(ErrorCode::NotPositiveDefinite, os.str());
  }
  // K = P H^T S^-1
  const Matrix gain = llt.solve(model.H * p_pred).transpose();

  EstimatePair out;
  out.x = x_pred + gain * residual;
  // Joseph form keeps the update PSD under round-off.
  const Matrix i_kh = Matrix::Identity(prior.dim(), prior.dim()) - gain * model.H;
  out.P = symmetrize(i_kh * p_pred * i_kh.transpose() + gain * model.R * gain.transpose());
  if (innovation) *innovation = {residual, s};
  return out;
}

}  // namespace esci::filters
