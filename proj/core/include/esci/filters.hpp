#pragma once

#include "esci/estimate.hpp"

#include <functional>
#include <vector>

namespace esci::filters {

/// x_k = F x_{k-1} + G w,  z_k = H x_k + v,  w ~ N(0, Q),  v ~ N(0, R).
struct LinearModel {
  Matrix F;
  Matrix G;
  Matrix H;
  Matrix Q;
  Matrix R;

  Eigen::Index state_dim() const { return F.rows(); }
  Eigen::Index measurement_dim() const { return H.rows(); }
  /// Throws on inconsistent dimensions or non-PD Q/R.
  void validate() const;
};

/// Additive-noise nonlinear model:
///   x_k = transition(x_{k-1}, u) + w,  z_k = measurement(x_k) + v.
/// Q is the state-space process noise covariance (d x d, PSD allowed).
struct NonlinearModel {
  std::function<Vector(const Vector& state, const Vector& control)> transition;
  std::function<Vector(const Vector& state)> measurement;
  Matrix Q;
  Matrix R;
  std::vector<Eigen::Index> angular_state;        ///< wrapped to (-pi, pi] after transition
  std::vector<Eigen::Index> angular_measurement;  ///< innovations wrapped to (-pi, pi]

  void validate() const;
};

/// Innovation of the last update, for consistency statistics.
struct Innovation {
  Vector residual;
  Matrix covariance;

  /// residual^T S^-1 residual
  double normalized_squared() const;
};

/// Predict with (F, GQG^T), then update with z. Throws NotPositiveDefinite
/// when the innovation covariance is singular.
EstimatePair kf_step(const EstimatePair& prior, const LinearModel& model, const Vector& z,
                     Innovation* innovation = nullptr);

/// Third-degree spherical-radial cubature points x +- sqrt(d) L e_i
/// (columns, 2d of them), each with weight 1/(2d).
Matrix cubature_points(const EstimatePair& p);

/// One cubature Kalman filter predict/update cycle.
EstimatePair ckf_step(const EstimatePair& prior, const NonlinearModel& model, const Vector& control,
                      const Vector& z, Innovation* innovation = nullptr);

}  // namespace esci::filters
