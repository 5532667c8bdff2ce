#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cotlearn/datasets.hpp"
#include "cotlearn/errors.hpp"
#include "cotlearn/rational.hpp"
#include "cotlearn/seqcore.hpp"
#include "cotlearn/simplex.hpp"

namespace cotlearn {

// 1[ sum_{i <= d ^ |x|} w[-i] x[-i] + b >= 0 ]; w.back() pairs with the newest bit.
struct LinearThreshold {
  std::vector<Rational> w;
  Rational b;

  std::size_t dim() const { return w.size(); }
  std::size_t alphabet_size() const { return 2; }

  Rational score(TokenView x) const {
    Rational s = b;
    const std::size_t d = w.size();
    const std::size_t n = std::min(d, x.size());
    for (std::size_t i = 1; i <= n; ++i) {
      Token t = x[x.size() - i];
      if (t > 1) throw InputError("linear threshold applied to a non-binary token");
      if (t) s += w[d - i];
    }
    return s;
  }
  Token operator()(TokenView x) const { return score(x) >= 0 ? 1 : 0; }

  bool operator==(const LinearThreshold&) const = default;
};

inline Token eval_threshold(const LinearThreshold& f, TokenView x) { return f(x); }

namespace detail {

// The last-d window of u as a dense 0/1 vector aligned with w.
inline std::vector<int> window_bits(TokenView u, std::size_t d) {
  std::vector<int> bits(d, 0);
  const std::size_t n = std::min(d, u.size());
  for (std::size_t i = 1; i <= n; ++i) {
    Token t = u[u.size() - i];
    if (t > 1) throw InputError("non-binary token in threshold dataset");
    bits[d - i] = static_cast<int>(t);
  }
  return bits;
}

// Distinct (window, label) constraints; nullopt if one window carries both labels.
inline std::optional<std::map<std::vector<int>, int>> window_constraints(const PrefixDataset& s, std::size_t d) {
  std::map<std::vector<int>, int> rows;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (s.label(j) > 1) throw InputError("non-binary label in threshold dataset");
    auto [it, fresh] = rows.emplace(window_bits(s.input(j), d), static_cast<int>(s.label(j)));
    if (!fresh && it->second != static_cast<int>(s.label(j))) return std::nullopt;
  }
  return rows;
}

// Solves for (w, b) over the columns listed in `cols` (others fixed to zero).
// "< 0" is encoded as "<= -1"; y = (w+, w-, b+, b-) >= 0.
inline std::optional<LinearThreshold> solve_threshold_lp(const std::map<std::vector<int>, int>& rows,
                                                         std::size_t d, const std::vector<std::size_t>& cols) {
  const std::size_t k = cols.size();
  std::vector<std::vector<Rational>> a;
  std::vector<Rational> c;
  a.reserve(rows.size());
  for (const auto& [bits, label] : rows) {
    std::vector<Rational> row(2 * k + 2);
    const int sgn = label ? -1 : 1;
    for (std::size_t j = 0; j < k; ++j) {
      row[j] = sgn * bits[cols[j]];
      row[k + j] = -sgn * bits[cols[j]];
    }
    row[2 * k] = sgn;
    row[2 * k + 1] = -sgn;
    a.push_back(std::move(row));
    c.emplace_back(label ? 0 : -1);
  }
  FeasibilitySimplex<Rational> lp(std::move(a), std::move(c));
  lp.with_columns(2 * k + 2);
  auto y = lp.solve();
  if (!y) return std::nullopt;
  LinearThreshold f{std::vector<Rational>(d), (*y)[2 * k] - (*y)[2 * k + 1]};
  for (std::size_t j = 0; j < k; ++j) f.w[cols[j]] = (*y)[j] - (*y)[k + j];
  return f;
}

inline void verify_threshold(const PrefixDataset& s, const auto& f) {
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (f(s.input(j)) != s.label(j)) throw InvariantViolation("learned threshold violates a training pair");
  }
}

}  // namespace detail

inline std::optional<LinearThreshold> try_cons_lp(const PrefixDataset& s, std::size_t d) {
  auto rows = detail::window_constraints(s, d);
  if (!rows) return std::nullopt;
  std::vector<std::size_t> cols(d);
  for (std::size_t j = 0; j < d; ++j) cols[j] = j;
  auto f = detail::solve_threshold_lp(*rows, d, cols);
  if (f) detail::verify_threshold(s, *f);
  return f;
}

inline LinearThreshold cons_lp(const PrefixDataset& s, std::size_t d) {
  if (auto f = try_cons_lp(s, d)) return *f;
  throw NotRealizable("dataset is not realizable by F_d,lin with d=" + std::to_string(d));
}

// Truth-table masks of every threshold function on {0,1}^d. Point p has
// x_j = bit (d-j) of p, so x_1 is the most significant and x_d the newest token.
inline std::vector<std::uint64_t> enumerate_threshold_functions(std::size_t d) {
  if (d > 4) throw GuardExceeded("enumerate_threshold_functions supports d <= 4");
  const std::size_t points = std::size_t{1} << d;
  const std::uint64_t masks = std::uint64_t{1} << points;
  std::vector<std::vector<int>> windows(points, std::vector<int>(d));
  for (std::size_t p = 0; p < points; ++p) {
    for (std::size_t j = 0; j < d; ++j) windows[p][j] = static_cast<int>((p >> (d - 1 - j)) & 1U);
  }
  std::vector<std::size_t> cols(d);
  for (std::size_t j = 0; j < d; ++j) cols[j] = j;
  std::vector<std::uint64_t> out;
  for (std::uint64_t mask = 0; mask < masks; ++mask) {
    std::map<std::vector<int>, int> rows;
    for (std::size_t p = 0; p < points; ++p) rows.emplace(windows[p], static_cast<int>((mask >> p) & 1U));
    if (detail::solve_threshold_lp(rows, d, cols)) out.push_back(mask);
  }
  return out;
}

// ---- sparse variant --------------------------------------------------------

struct SparseLinearThreshold {
  std::size_t d = 0;
  std::size_t k = 0;
  std::vector<std::size_t> support;  // 0-based positions in the d-window, increasing
  std::vector<Rational> weights;     // parallel to support
  Rational b;

  LinearThreshold dense() const {
    LinearThreshold f{std::vector<Rational>(d), b};
    for (std::size_t j = 0; j < support.size(); ++j) f.w[support[j]] = weights[j];
    return f;
  }
  std::size_t alphabet_size() const { return 2; }
  Token operator()(TokenView x) const { return dense()(x); }
};

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > (std::uint64_t{1} << 62)) return r;
  }
  return r;
}

// Supports of size min(k, d) in lexicographic order; the first feasible restricted
// LP wins. Smaller supports are covered since weights may be zero.
inline SparseLinearThreshold cons_sparse(const PrefixDataset& s, std::size_t d, std::size_t k) {
  const std::size_t r = std::min(k, d);
  if (binomial(d, r) > 100000) throw GuardExceeded("cons_sparse: C(d,k) exceeds 1e5 supports");
  auto rows = detail::window_constraints(s, d);
  if (!rows) throw NotRealizable("conflicting labels on one window");
  std::vector<std::size_t> cols(r);
  for (std::size_t j = 0; j < r; ++j) cols[j] = j;
  for (;;) {
    if (auto f = detail::solve_threshold_lp(*rows, d, cols)) {
      SparseLinearThreshold out{d, k, cols, {}, f->b};
      for (std::size_t c : cols) out.weights.push_back(f->w[c]);
      detail::verify_threshold(s, out);
      return out;
    }
    // next combination
    std::size_t i = r;
    while (i > 0 && cols[i - 1] == d - r + i - 1) --i;
    if (i == 0) break;
    ++cols[i - 1];
    for (std::size_t j = i; j < r; ++j) cols[j] = cols[j - 1] + 1;
  }
  throw NotRealizable("dataset is not realizable by any " + std::to_string(k) + "-sparse threshold");
}

// ---- families ----------------------------------------------------------------

struct LinearThresholdFamily {
  using member_type = LinearThreshold;
  std::size_t d = 1;

  std::string name() const { return "lin:d=" + std::to_string(d); }
  member_type default_member() const { return {std::vector<Rational>(d), Rational(0)}; }
  member_type cons(const PrefixDataset& s) const { return cons_lp(s, d); }
};

struct SparseThresholdFamily {
  using member_type = SparseLinearThreshold;
  std::size_t d = 1;
  std::size_t k = 1;

  std::string name() const { return "sparse:d=" + std::to_string(d) + ",k=" + std::to_string(k); }
  member_type default_member() const {
    std::vector<std::size_t> sup;
    for (std::size_t j = 0; j < std::min(k, d); ++j) sup.push_back(j);
    return {d, k, sup, std::vector<Rational>(sup.size()), Rational(0)};
  }
  member_type cons(const PrefixDataset& s) const { return cons_sparse(s, d, k); }
};

}  // namespace cotlearn
