#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace esci {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  NotSymmetric,
  NotPositiveDefinite,
  EmptyInput,
  InvalidStructure,
  Diverged,
};

/// Exception type for every failure raised by the library. The code lets
/// callers (the CLI in particular) map failures onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// A state estimate together with its claimed error covariance.
struct EstimatePair {
  Vector x;
  Matrix P;

  Eigen::Index dim() const { return x.size(); }
};

/// Relative tolerances used when validating covariances.
struct SpdCheckPolicy {
  double symmetry_tol = 1e-9;  ///< max|P - P^T| <= symmetry_tol * max|P|
  double psd_tol = 1e-12;      ///< min eigenvalue > psd_tol * max|eigenvalue|
};

enum class PairDefect { None, DimensionMismatch, NotSymmetric, NotPositiveDefinite };

struct Validation {
  PairDefect defect = PairDefect::None;
  std::string message;

  bool ok() const { return defect == PairDefect::None; }
  explicit operator bool() const { return ok(); }
};

Validation validate_pair(const EstimatePair& p, const SpdCheckPolicy& policy = {});

/// Throws Error with the matching code when validation fails.
void require_valid(const EstimatePair& p, const SpdCheckPolicy& policy = {});

/// (A + A^T) / 2
Matrix symmetrize(const Matrix& a);

/// Inverse of a symmetric positive definite matrix via Cholesky. Never falls
/// back to a pseudo-inverse; a failed factorization throws NotPositiveDefinite.
Matrix spd_inverse(const Matrix& a);

/// Lower Cholesky factor L with A = L L^T; throws NotPositiveDefinite.
Matrix cholesky_lower(const Matrix& a);

/// max|a - b| / max|b| (absolute when b is zero).
double relative_deviation(const Matrix& a, const Matrix& b);

/// True iff lambda_min(claimed - actual) >= -tol * lambda_max(claimed).
bool is_conservative(const Matrix& claimed, const Matrix& actual, double tol);

/// Samples {X | (X-x)^T P^-1 (X-x) = 1} at n_points angles starting at
/// start_angle. Requires a 2-D pair.
std::vector<Eigen::Vector2d> ellipse_points(const EstimatePair& p, int n_points,
                                            double start_angle = 0.0);

/// Normalized estimation error squared.
double nees(const EstimatePair& estimate, const Vector& truth);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

}  // namespace esci
