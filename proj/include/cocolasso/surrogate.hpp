#pragma once

#include "cocolasso/common.hpp"

#include <optional>
#include <variant>
#include <vector>

namespace cocolasso {

/// Observed covariates Z (n x p) and response y. Missing covariate entries
/// are stored as 0 with mask(i, j) == false.
class CorruptedDataset {
 public:
  CorruptedDataset() = default;
  /// Validates shapes and finiteness. Without a mask, every entry is
  /// considered observed. Masked-out entries of z are forced to 0.
  CorruptedDataset(Matrix z, Vector y, std::optional<Mask> mask = std::nullopt);

  const Matrix& z() const { return z_; }
  const Vector& y() const { return y_; }
  const Mask& mask() const { return mask_; }
  Index n() const { return z_.rows(); }
  Index p() const { return z_.cols(); }
  bool fully_observed() const { return mask_.all(); }

  /// Rows in the given order; used to form CV training/validation splits.
  CorruptedDataset rows(const std::vector<Index>& idx) const;

 private:
  Matrix z_;
  Vector y_;
  Mask mask_;
};

struct AdditiveError {
  Matrix sigma_a;  // covariance of the additive error rows, assumed known
};

struct MultiplicativeError {
  Vector mu;       // mean of the multiplicative factors
  Matrix sigma_m;  // covariance of the multiplicative factors
};

struct MissingError {
  Vector rates;  // per-column missing probability r_j in [0, 1)
};

using ErrorModel = std::variant<AdditiveError, MultiplicativeError, MissingError>;

/// Throws InvalidInput when the model parameters violate their domain or do
/// not match p.
void validate(const ErrorModel& model, Index p);

/// Unbiased plug-in estimates of X'X/n and X'y/n. sigma_hat is exactly
/// symmetric but may be indefinite.
struct SurrogatePair {
  Matrix sigma_hat;
  Vector rho_tilde;
};

SurrogatePair surrogate_additive(const CorruptedDataset& data, const Matrix& sigma_a);
SurrogatePair surrogate_multiplicative(const CorruptedDataset& data, const Vector& mu,
                                       const Matrix& sigma_m);
SurrogatePair surrogate_missing(const CorruptedDataset& data, const Vector& rates);

/// Dispatches on the model variant.
SurrogatePair build_surrogate(const CorruptedDataset& data, const ErrorModel& model);

/// Fraction of masked entries per column. Throws if a column is fully missing.
Vector estimate_missing_rates(const CorruptedDataset& data);

/// The (mu_M, Sigma_M) pair induced by independent Bernoulli(1 - r_j)
/// observation indicators.
MultiplicativeError missing_as_multiplicative(const Vector& rates);

/// Broadcasts a scalar missing rate to p columns.
inline Vector uniform_rates(Index p, double r) { return Vector::Constant(p, r); }

/// Subtracts column means (over observed entries only) from z and the mean
/// from y. Masked entries stay 0. Columns are never rescaled.
CorruptedDataset center(const CorruptedDataset& data);

}  // namespace cocolasso
