// Exponentially weighted, regularized least squares with a UCB bonus.
//
// With count = t - 1 absorbed observations phi_0..phi_{t-2} (oldest first),
// the weighted Gram pair is held in rescaled form
//
//   A       = sum_k eta^(t-2-k)     phi_k phi_k^T,     S  = A       + lambda I
//   A_tilde = sum_k eta^(2(t-2-k))  phi_k phi_k^T,     S~ = A_tilde + lambda I
//
// so that S = eta^(t-1) Sigma_t and S~ = eta^(2(t-1)) Sigma~_t, where Sigma_t
// and Sigma~_t carry the growing eta^(-tau) weights. Every stored entry stays
// bounded by count + lambda, and both the estimator Sigma^-1 b and the bonus
// form Sigma^-1 Sigma~ Sigma^-1 are invariant under this rescaling.
#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace optwlsvi {

/// Thrown when a numerical invariant (positive definiteness, iterate bounds)
/// is broken.
class NumericalFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
class RescaledGramState {
 public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  RescaledGramState(int dim, Scalar eta, Scalar lambda)
      : dim_(dim), eta_(eta), lambda_(lambda) {
    if (dim < 1) throw std::invalid_argument("RescaledGramState: dim must be >= 1");
    if (!(eta > Scalar(0) && eta <= Scalar(1))) {
      throw std::invalid_argument("RescaledGramState: eta must lie in (0, 1]");
    }
    if (!(lambda > Scalar(0))) {
      throw std::invalid_argument("RescaledGramState: lambda must be > 0");
    }
    data_ = Matrix::Zero(dim, dim);
    data_tilde_ = Matrix::Zero(dim, dim);
  }

  /// Absorbs one feature vector: A <- eta A + phi phi^T and
  /// A_tilde <- eta^2 A_tilde + phi phi^T.
  template <typename Derived>
  void update(const Eigen::MatrixBase<Derived>& phi) {
    if (phi.size() != dim_) throw std::invalid_argument("gram update: wrong dimension");
    const Vector v = phi.template cast<Scalar>();
    if (v.norm() > Scalar(1) + Scalar(1e-9)) {
      throw std::invalid_argument("gram update: feature norm exceeds 1");
    }
    data_ *= eta_;
    data_.noalias() += v * v.transpose();
    data_tilde_ *= eta_ * eta_;
    data_tilde_.noalias() += v * v.transpose();
    ++count_;
  }

  int dim() const { return dim_; }
  Scalar eta() const { return eta_; }
  Scalar lambda() const { return lambda_; }
  int count() const { return count_; }

  const Matrix& data() const { return data_; }
  const Matrix& data_tilde() const { return data_tilde_; }

  Matrix regularized() const { return data_ + lambda_ * Matrix::Identity(dim_, dim_); }
  Matrix regularized_tilde() const {
    return data_tilde_ + lambda_ * Matrix::Identity(dim_, dim_);
  }

  /// Gram pair with the original eta^(-tau) weighting. Only usable while
  /// eta^(-2 count) is representable; throws std::overflow_error otherwise.
  std::pair<Matrix, Matrix> unrescaled_pair() const {
    using std::log;
    using std::pow;
    const Scalar exponent = Scalar(2 * count_) * log(Scalar(1) / eta_);
    if (!(exponent < Scalar(700))) {
      throw std::overflow_error("unrescaled_pair: eta^(-2 count) overflows");
    }
    const Scalar scale = pow(eta_, -Scalar(count_));
    return {scale * regularized(), scale * scale * regularized_tilde()};
  }

 private:
  int dim_;
  Scalar eta_;
  Scalar lambda_;
  int count_ = 0;
  Matrix data_;
  Matrix data_tilde_;
};

/// Cholesky factor of S together with the bonus form S^-1 S~ S^-1, for
/// repeated solves and bonus queries against one Gram state.
template <typename Scalar>
class GramFactor {
 public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  explicit GramFactor(const RescaledGramState<Scalar>& state)
      : lambda_(state.lambda()), llt_(state.regularized()) {
    if (llt_.info() != Eigen::Success) {
      throw NumericalFault("Gram matrix is not positive definite");
    }
    const Matrix left = llt_.solve(state.regularized_tilde());  // S^-1 S~
    Matrix form = llt_.solve(left.transpose());                // S^-1 S~ S^-1
    bonus_form_ = Scalar(0.5) * (form + form.transpose());
  }

  /// S^-1 rhs for a vector or matrix right-hand side.
  template <typename Derived>
  Eigen::Matrix<Scalar, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime> solve(
      const Eigen::MatrixBase<Derived>& rhs) const {
    return llt_.solve(rhs.template cast<Scalar>());
  }

  /// beta * sqrt(phi^T S^-1 S~ S^-1 phi).
  template <typename Derived>
  Scalar bonus(const Eigen::MatrixBase<Derived>& phi, Scalar beta) const {
    using std::sqrt;
    if (beta < Scalar(0)) throw std::invalid_argument("bonus: beta must be >= 0");
    const Vector v = phi.template cast<Scalar>();
    const Scalar quad = v.dot(bonus_form_ * v);
    return beta * sqrt(quad > Scalar(0) ? quad : Scalar(0));
  }

  const Matrix& bonus_form() const { return bonus_form_; }
  Scalar lambda() const { return lambda_; }

 private:
  Scalar lambda_;
  Eigen::LLT<Matrix> llt_;
  Matrix bonus_form_;
};

/// One absorbed transition at a fixed step index.
template <typename Scalar>
struct StepRecord {
  VectorX<Scalar> phi;
  Scalar reward;
  int next_state;
};

template <typename Scalar>
using StepHistory = std::vector<StepRecord<Scalar>>;

/// Right-hand side b = sum_k eta^(count-1-k) phi_k (r_k + value(s'_k)),
/// accumulated oldest-first by Horner's rule.
template <typename Scalar, typename ValueFn>
VectorX<Scalar> weighted_targets(const RescaledGramState<Scalar>& state,
                                 const StepHistory<Scalar>& history, ValueFn&& value) {
  if (static_cast<int>(history.size()) != state.count()) {
    throw std::invalid_argument("wls_solve: history length differs from Gram count");
  }
  VectorX<Scalar> b = VectorX<Scalar>::Zero(state.dim());
  for (const auto& rec : history) {
    b *= state.eta();
    b.noalias() += rec.phi * (rec.reward + Scalar(value(rec.next_state)));
  }
  return b;
}

/// Weighted ridge estimate w = S^-1 b, equal to Sigma_t^-1 sum_tau eta^(-tau)
/// phi_tau (r_tau + V(s'_tau)) since the eta^(t-1) factors cancel.
template <typename Scalar, typename ValueFn>
VectorX<Scalar> wls_solve(const GramFactor<Scalar>& factor,
                          const RescaledGramState<Scalar>& state,
                          const StepHistory<Scalar>& history, ValueFn&& value) {
  return factor.solve(weighted_targets(state, history, std::forward<ValueFn>(value)));
}

template <typename Scalar, typename ValueFn>
VectorX<Scalar> wls_solve(const RescaledGramState<Scalar>& state,
                          const StepHistory<Scalar>& history, ValueFn&& value) {
  return wls_solve(GramFactor<Scalar>(state), state, history,
                   std::forward<ValueFn>(value));
}

template <typename Scalar, typename Derived>
Scalar bonus(const RescaledGramState<Scalar>& state, const Eigen::MatrixBase<Derived>& phi,
             Scalar beta) {
  return GramFactor<Scalar>(state).bonus(phi, beta);
}

/// log det of a symmetric positive-definite matrix via its Cholesky factor.
template <typename Scalar>
Scalar log_determinant(const MatrixX<Scalar>& m) {
  using std::log;
  const Eigen::LLT<MatrixX<Scalar>> llt(m);
  if (llt.info() != Eigen::Success) throw NumericalFault("log_determinant: not positive definite");
  const MatrixX<Scalar> l = llt.matrixL();
  Scalar total(0);
  for (Eigen::Index i = 0; i < l.rows(); ++i) total += log(l(i, i));
  return Scalar(2) * total;
}

/// Upper bound on ||w|| when every regression target lies in [-2H, 2H]:
/// 2H sqrt(d (1 - eta^count) / (lambda (1 - eta))), with the eta -> 1 limit
/// 2H sqrt(d count / lambda).
inline double weight_norm_bound(int dim, int horizon, double eta, double lambda,
                                int count) {
  const double mass = eta < 1.0 ? (1.0 - std::pow(eta, count)) / (1.0 - eta)
                                : static_cast<double>(count);
  return 2.0 * horizon * std::sqrt(dim * mass / lambda);
}

using GramState = RescaledGramState<double>;
using GramFactord = GramFactor<double>;
using History = StepHistory<double>;
using Record = StepRecord<double>;

}  // namespace optwlsvi
