#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "cotlearn/errors.hpp"
#include "cotlearn/rational.hpp"

namespace cotlearn {

// Feasibility of { y : A y <= c, y >= 0 } by phase-one dictionary simplex with a
// single auxiliary variable and Bland's rule. With an exact Scalar the verdict
// is exact; the returned point is re-checked against every row.
template <class Scalar = Rational>
class FeasibilitySimplex {
 public:
  FeasibilitySimplex(std::vector<std::vector<Scalar>> a, std::vector<Scalar> c)
      : a_(std::move(a)), c_(std::move(c)) {
    if (a_.size() != c_.size()) throw InputError("simplex: row count mismatch");
    n_ = a_.empty() ? 0 : a_.front().size();
    for (const auto& row : a_) {
      if (row.size() != n_) throw InputError("simplex: ragged constraint matrix");
    }
  }

  // Column count when there are no rows to infer it from.
  FeasibilitySimplex& with_columns(std::size_t n) {
    if (!a_.empty() && n != n_) throw InputError("simplex: column count mismatch");
    n_ = n;
    return *this;
  }

  std::optional<std::vector<Scalar>> solve() {
    const std::size_t m = a_.size();
    pivots_ = 0;
    std::size_t worst = m;
    for (std::size_t i = 0; i < m; ++i) {
      if (c_[i] < 0 && (worst == m || c_[i] < c_[worst])) worst = i;
    }
    if (worst == m) return verified(std::vector<Scalar>(n_, Scalar(0)));

    // Labels: 0..n-1 original, n..n+m-1 slacks, n+m auxiliary x0.
    const std::size_t aux = n_ + m;
    nonbasic_.resize(n_ + 1);
    for (std::size_t j = 0; j < n_; ++j) nonbasic_[j] = j;
    nonbasic_[n_] = aux;
    basic_.resize(m);
    beta_ = c_;
    alpha_.assign(m, std::vector<Scalar>(n_ + 1));
    for (std::size_t i = 0; i < m; ++i) {
      basic_[i] = n_ + i;
      for (std::size_t j = 0; j < n_; ++j) alpha_[i][j] = -a_[i][j];
      alpha_[i][n_] = 1;
    }
    zeta_ = 0;
    gamma_.assign(n_ + 1, Scalar(0));
    gamma_[n_] = -1;  // maximise -x0

    pivot(worst, n_);
    for (;;) {
      std::size_t e = n_ + 1;
      for (std::size_t j = 0; j <= n_; ++j) {
        if (gamma_[j] > 0 && (e == n_ + 1 || nonbasic_[j] < nonbasic_[e])) e = j;
      }
      if (e == n_ + 1) break;
      std::size_t r = m;
      Scalar best;
      for (std::size_t i = 0; i < m; ++i) {
        if (!(alpha_[i][e] < 0)) continue;
        Scalar ratio = beta_[i] / -alpha_[i][e];
        if (r == m || ratio < best || (ratio == best && basic_[i] < basic_[r])) {
          r = i;
          best = ratio;
        }
      }
      if (r == m) throw InvariantViolation("simplex: auxiliary problem reported unbounded");
      pivot(r, e);
    }
    if (zeta_ != 0) return std::nullopt;

    std::vector<Scalar> y(n_, Scalar(0));
    for (std::size_t i = 0; i < m; ++i) {
      if (basic_[i] < n_) y[basic_[i]] = beta_[i];
    }
    return verified(std::move(y));
  }

  std::size_t pivots() const { return pivots_; }

 private:
  void pivot(std::size_t r, std::size_t e) {
    ++pivots_;
    const Scalar are = alpha_[r][e];
    auto& row = alpha_[r];
    beta_[r] = -beta_[r] / are;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j != e) row[j] = -row[j] / are;
    }
    row[e] = Scalar(1) / are;
    std::swap(basic_[r], nonbasic_[e]);

    auto eliminate = [&](Scalar& b, std::vector<Scalar>& coeffs) {
      const Scalar k = coeffs[e];
      if (k == 0) return;
      b += k * beta_[r];
      for (std::size_t j = 0; j < coeffs.size(); ++j) {
        if (j != e) coeffs[j] += k * row[j];
      }
      coeffs[e] = k * row[e];
    };
    for (std::size_t i = 0; i < alpha_.size(); ++i) {
      if (i != r) eliminate(beta_[i], alpha_[i]);
    }
    eliminate(zeta_, gamma_);
  }

  std::vector<Scalar> verified(std::vector<Scalar> y) const {
    for (const Scalar& v : y) {
      if (v < 0) throw InvariantViolation("simplex: negative coordinate in solution");
    }
    for (std::size_t i = 0; i < a_.size(); ++i) {
      Scalar s = 0;
      for (std::size_t j = 0; j < n_; ++j) s += a_[i][j] * y[j];
      if (s > c_[i]) throw InvariantViolation("simplex: solution violates a constraint");
    }
    return y;
  }

  std::vector<std::vector<Scalar>> a_;
  std::vector<Scalar> c_;
  std::size_t n_ = 0;

  std::vector<std::size_t> basic_, nonbasic_;
  std::vector<Scalar> beta_, gamma_;
  std::vector<std::vector<Scalar>> alpha_;
  Scalar zeta_;
  std::size_t pivots_ = 0;
};

}  // namespace cotlearn
