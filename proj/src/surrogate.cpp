#include "cocolasso/surrogate.hpp"

#include <cmath>
#include <string>

namespace cocolasso {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidInput(msg);
}

// Z'Z/n and Z'y/n with the Gram part symmetrized.
SurrogatePair sample_moments(const CorruptedDataset& data) {
  const double n = static_cast<double>(data.n());
  SurrogatePair out;
  out.sigma_hat = symmetrize(data.z().transpose() * data.z() / n);
  out.rho_tilde = data.z().transpose() * data.y() / n;
  return out;
}

void require_fully_observed(const CorruptedDataset& data, const char* model) {
  require(data.fully_observed(),
          std::string("dataset has missing entries; the ") + model +
              " error model requires a fully observed design");
}

}  // namespace

CorruptedDataset::CorruptedDataset(Matrix z, Vector y, std::optional<Mask> mask)
    : z_(std::move(z)), y_(std::move(y)) {
  require(z_.rows() > 0 && z_.cols() > 0, "design matrix must be non-empty");
  require(y_.size() == z_.rows(), "response length " + std::to_string(y_.size()) +
                                      " does not match " + std::to_string(z_.rows()) +
                                      " design rows");
  if (mask) {
    require(mask->rows() == z_.rows() && mask->cols() == z_.cols(),
            "mask shape does not match the design matrix");
    mask_ = std::move(*mask);
  } else {
    mask_ = Mask::Constant(z_.rows(), z_.cols(), true);
  }
  z_ = mask_.select(z_, 0.0);
  require(z_.allFinite(), "design matrix has non-finite observed entries");
  require(y_.allFinite(), "response has non-finite entries");
}

CorruptedDataset CorruptedDataset::rows(const std::vector<Index>& idx) const {
  Matrix z(static_cast<Index>(idx.size()), p());
  Vector y(static_cast<Index>(idx.size()));
  Mask m(static_cast<Index>(idx.size()), p());
  for (Index r = 0; r < static_cast<Index>(idx.size()); ++r) {
    z.row(r) = z_.row(idx[r]);
    y(r) = y_(idx[r]);
    m.row(r) = mask_.row(idx[r]);
  }
  return CorruptedDataset(std::move(z), std::move(y), std::move(m));
}

void validate(const ErrorModel& model, Index p) {
  std::visit(
      [p](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, AdditiveError>) {
          require(m.sigma_a.rows() == p && m.sigma_a.cols() == p,
                  "additive error covariance must be " + std::to_string(p) + "x" +
                      std::to_string(p));
          require(m.sigma_a.allFinite(), "additive error covariance has non-finite entries");
          require((m.sigma_a - m.sigma_a.transpose()).cwiseAbs().maxCoeff() <=
                      1e-10 * std::max(1.0, max_norm(m.sigma_a)),
                  "additive error covariance must be symmetric");
          require((m.sigma_a.diagonal().array() >= 0.0).all(),
                  "additive error covariance must have a non-negative diagonal");
        } else if constexpr (std::is_same_v<T, MultiplicativeError>) {
          require(m.mu.size() == p, "multiplicative mean must have length " + std::to_string(p));
          require(m.sigma_m.rows() == p && m.sigma_m.cols() == p,
                  "multiplicative covariance must be " + std::to_string(p) + "x" +
                      std::to_string(p));
          require(m.mu.allFinite() && m.sigma_m.allFinite(),
                  "multiplicative error parameters must be finite");
          require((m.mu.array() > 0.0).all(), "multiplicative mean entries must be positive");
          const Matrix second = m.sigma_m + m.mu * m.mu.transpose();
          require((second.array() > 0.0).all(),
                  "entries of Sigma_M + mu_M mu_M' must be strictly positive");
        } else {
          require(m.rates.size() == p, "missing rates must have length " + std::to_string(p));
          for (Index j = 0; j < p; ++j) {
            require(std::isfinite(m.rates(j)) && m.rates(j) >= 0.0 && m.rates(j) < 1.0,
                    "missing rate for column " + std::to_string(j) + " must lie in [0, 1)");
          }
        }
      },
      model);
}

SurrogatePair surrogate_additive(const CorruptedDataset& data, const Matrix& sigma_a) {
  validate(AdditiveError{sigma_a}, data.p());
  require_fully_observed(data, "additive");
  SurrogatePair out = sample_moments(data);
  out.sigma_hat = symmetrize(out.sigma_hat - sigma_a);
  return out;
}

SurrogatePair surrogate_multiplicative(const CorruptedDataset& data, const Vector& mu,
                                       const Matrix& sigma_m) {
  validate(MultiplicativeError{mu, sigma_m}, data.p());
  require_fully_observed(data, "multiplicative");
  SurrogatePair out = sample_moments(data);
  const Matrix divisor = sigma_m + mu * mu.transpose();
  out.sigma_hat = symmetrize(out.sigma_hat.cwiseQuotient(divisor));
  out.rho_tilde = out.rho_tilde.cwiseQuotient(mu);
  return out;
}

SurrogatePair surrogate_missing(const CorruptedDataset& data, const Vector& rates) {
  validate(MissingError{rates}, data.p());
  SurrogatePair out = sample_moments(data);
  const Vector keep = (1.0 - rates.array()).matrix();
  Matrix divisor = keep * keep.transpose();
  divisor.diagonal() = keep;
  out.sigma_hat = symmetrize(out.sigma_hat.cwiseQuotient(divisor));
  out.rho_tilde = out.rho_tilde.cwiseQuotient(keep);
  return out;
}

SurrogatePair build_surrogate(const CorruptedDataset& data, const ErrorModel& model) {
  return std::visit(
      [&data](const auto& m) -> SurrogatePair {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, AdditiveError>) {
          return surrogate_additive(data, m.sigma_a);
        } else if constexpr (std::is_same_v<T, MultiplicativeError>) {
          return surrogate_multiplicative(data, m.mu, m.sigma_m);
        } else {
          return surrogate_missing(data, m.rates);
        }
      },
      model);
}

Vector estimate_missing_rates(const CorruptedDataset& data) {
  const double n = static_cast<double>(data.n());
  Vector rates(data.p());
  for (Index j = 0; j < data.p(); ++j) {
    const auto missing = (!data.mask().col(j)).count();
    if (missing == data.n()) {
      throw InvalidInput("column " + std::to_string(j) +
                         " is entirely missing; its surrogate is undefined");
    }
    rates(j) = static_cast<double>(missing) / n;
  }
  return rates;
}

MultiplicativeError missing_as_multiplicative(const Vector& rates) {
  const Vector keep = (1.0 - rates.array()).matrix();
  Matrix sigma_m = Matrix::Zero(rates.size(), rates.size());
  sigma_m.diagonal() = (keep.array() * rates.array()).matrix();
  return {keep, sigma_m};
}

CorruptedDataset center(const CorruptedDataset& data) {
  Matrix z = data.z();
  for (Index j = 0; j < data.p(); ++j) {
    const auto observed = data.mask().col(j).count();
    if (observed == 0) continue;
    const double mean = z.col(j).sum() / static_cast<double>(observed);
    for (Index i = 0; i < data.n(); ++i)
      if (data.mask()(i, j)) z(i, j) -= mean;
  }
  Vector y = data.y().array() - data.y().mean();
  return CorruptedDataset(std::move(z), std::move(y), data.mask());
}

}  // namespace cocolasso
