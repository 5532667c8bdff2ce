#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cotlearn/datasets.hpp"
#include "cotlearn/errors.hpp"
#include "cotlearn/seqcore.hpp"

namespace cotlearn {

inline std::size_t ceil_log2(std::size_t m) {
  std::size_t b = 0;
  while ((std::size_t{1} << b) < m) ++b;
  return b;
}

// The three explicit binary families. Members are indexed by a bit vector b of
// length M; b[0] is the most significant bit of the canonical member index.
class LookupFamily {
 public:
  enum class Kind { e1, ldim, collapse };

  static LookupFamily e1(std::size_t D, std::size_t T) {
    if (D == 0 || T == 0) throw InputError("e1 needs D, T >= 1");
    if (D * T > 30) throw GuardExceeded("e1 family limited to D*T <= 30");
    return LookupFamily(Kind::e1, D, T, D * T, ceil_log2(D * T));
  }
  static LookupFamily ldim(std::size_t D) {
    if (D == 0) throw InputError("ldim needs D >= 1");
    if (D > 8) throw GuardExceeded("ldim family limited to D <= 8");
    return LookupFamily(Kind::ldim, D, 0, D, ceil_log2(D));
  }
  static LookupFamily collapse(std::size_t D) {
    if (D == 0) throw InputError("collapse needs D >= 1");
    if (D > 10) throw GuardExceeded("collapse family limited to D <= 10");
    return LookupFamily(Kind::collapse, D, 0, D, ceil_log2(D));
  }

  // "e1:D=2,T=4", "ldim:D=3", "collapse:D=4"
  static LookupFamily parse(const std::string& spec) {
    auto colon = spec.find(':');
    if (colon == std::string::npos) throw InputError("family spec needs 'kind:key=value,...'");
    const std::string kind = spec.substr(0, colon);
    std::map<std::string, std::size_t> kv;
    std::string rest = spec.substr(colon + 1);
    std::size_t start = 0;
    while (start <= rest.size()) {
      std::size_t end = rest.find(',', start);
      if (end == std::string::npos) end = rest.size();
      std::string item = rest.substr(start, end - start);
      auto eq = item.find('=');
      if (eq == std::string::npos) throw InputError("bad family parameter '" + item + "'");
      try {
        kv[item.substr(0, eq)] = std::stoul(item.substr(eq + 1));
      } catch (const std::exception&) {
        throw InputError("bad family parameter '" + item + "'");
      }
      start = end + 1;
    }
    auto need = [&](const char* k) {
      auto it = kv.find(k);
      if (it == kv.end()) throw InputError(std::string("family spec missing ") + k);
      return it->second;
    };
    std::size_t expected = 1;
    LookupFamily f = [&] {
      if (kind == "e1") {
        expected = 2;
        return e1(need("D"), need("T"));
      }
      if (kind == "ldim") return ldim(need("D"));
      if (kind == "collapse") return collapse(need("D"));
      throw InputError("unknown family kind '" + kind + "'");
    }();
    if (kv.size() != expected) throw InputError("unexpected parameters in family spec '" + spec + "'");
    return f;
  }

  Kind kind() const { return kind_; }
  std::size_t D() const { return D_; }
  std::size_t T() const { return T_; }
  std::size_t bits() const { return M_; }
  std::size_t point_length() const { return 1 + width_ + (kind_ == Kind::collapse ? 1 : 0); }
  std::size_t point_count() const { return M_; }

  std::string name() const {
    switch (kind_) {
      case Kind::e1: return "e1:D=" + std::to_string(D_) + ",T=" + std::to_string(T_);
      case Kind::ldim: return "ldim:D=" + std::to_string(D_);
      default: return "collapse:D=" + std::to_string(D_);
    }
  }

  // x_i = 1 . bits(i-1) [. 1 for collapse], for i = 1..M.
  TokenSeq point(std::size_t i) const {
    if (i < 1 || i > M_) throw InputError("point index out of range");
    TokenSeq x{1};
    for (std::size_t j = width_; j-- > 0;) x.push_back(static_cast<Token>(((i - 1) >> j) & 1U));
    if (kind_ == Kind::collapse) x.push_back(1);
    return x;
  }
  std::vector<TokenSeq> points() const {
    std::vector<TokenSeq> out;
    for (std::size_t i = 1; i <= M_; ++i) out.push_back(point(i));
    return out;
  }

  // Generic evaluation; `bit(k)` supplies b[k] (0-based) on demand.
  template <class Reader>
  Token eval(TokenView x, Reader&& bit) const {
    std::size_t p = 0;
    while (p < x.size() && x[p] == 0) ++p;
    const std::size_t n = point_length();
    if (x.size() - p < n) return 0;
    for (std::size_t q = p; q < x.size(); ++q) {
      if (x[q] > 1) throw InputError("lookup family applied to a non-binary token");
    }
    std::size_t i0 = 0;
    for (std::size_t j = 1; j <= width_; ++j) i0 = (i0 << 1) | x[p + j];
    if (i0 >= M_) return 0;
    if (kind_ == Kind::collapse && x[p + n - 1] != 1) return 0;
    TokenView c = x.subspan(p + n);
    const std::size_t j = c.size();

    switch (kind_) {
      case Kind::e1: {
        const std::size_t k = i0 % D_;
        if (j + 1 < T_) {
          for (std::size_t l = 0; l < j; ++l)
            if (static_cast<int>(c[l]) != bit(l * D_ + k)) return 0;
          return static_cast<Token>(bit(j * D_ + k));
        }
        if (j + 1 == T_) {
          for (std::size_t l = 0; l < j; ++l)
            if (static_cast<int>(c[l]) != bit(l * D_ + k)) return 0;
          return static_cast<Token>(bit(i0));
        }
        return 0;
      }
      case Kind::ldim: {
        if (j < D_) {
          for (std::size_t l = 0; l < j; ++l)
            if (static_cast<int>(c[l]) != bit(l)) return 0;
          return static_cast<Token>(bit(j));
        }
        for (std::size_t l = 0; l < D_; ++l)
          if (static_cast<int>(c[l]) != bit(l)) return 0;
        const int bi = bit(i0);
        for (std::size_t l = D_; l < j; ++l)
          if (static_cast<int>(c[l]) != bi) return 0;
        return static_cast<Token>(bi);
      }
      default:
        return j == 0 ? static_cast<Token>(bit(i0)) : 0;
    }
  }

  // Guard for explicit enumeration of all 2^M members.
  std::uint64_t enumeration_size() const {
    const std::size_t cap = kind_ == Kind::e1 ? 16 : kind_ == Kind::ldim ? 8 : 10;
    if (M_ > cap) throw GuardExceeded(name() + " has too many members to enumerate");
    return std::uint64_t{1} << M_;
  }

 private:
  LookupFamily(Kind k, std::size_t D, std::size_t T, std::size_t M, std::size_t w)
      : kind_(k), D_(D), T_(T), M_(M), width_(w) {}

  Kind kind_;
  std::size_t D_, T_, M_, width_;
};

struct LookupMember {
  std::shared_ptr<const LookupFamily> family;
  std::vector<std::uint8_t> b;

  std::size_t alphabet_size() const { return 2; }
  Token operator()(TokenView x) const {
    return family->eval(x, [this](std::size_t k) { return static_cast<int>(b[k]); });
  }
  std::uint64_t index() const {
    std::uint64_t idx = 0;
    for (auto v : b) idx = (idx << 1) | v;
    return idx;
  }
  std::string bit_string() const {
    std::string s;
    for (auto v : b) s += static_cast<char>('0' + v);
    return s;
  }
};

inline LookupMember lookup_member(std::shared_ptr<const LookupFamily> f, std::uint64_t idx) {
  const std::size_t M = f->bits();
  LookupMember m{f, std::vector<std::uint8_t>(M)};
  for (std::size_t k = 0; k < M; ++k) m.b[k] = static_cast<std::uint8_t>((idx >> (M - 1 - k)) & 1U);
  return m;
}

// f(x) = label when steps == 0, else e2e(f, x, steps) = label.
struct LookupConstraint {
  TokenSeq x;
  std::size_t steps = 0;
  int label = 0;
};

namespace detail {

template <class Reader>
Token eval_constraint(const LookupFamily& f, const LookupConstraint& c, Reader&& bit) {
  if (c.steps == 0) return f.eval(c.x, bit);
  TokenSeq z = c.x;
  for (std::size_t t = 0; t < c.steps; ++t) z.push_back(f.eval(z, bit));
  return z.back();
}

struct Completion {
  bool can_sat = false;
  bool can_viol = false;
  std::vector<std::size_t> touched;  // unknown bits read on some completion
};

// Enumerates every completion path of the partial assignment by replaying the
// evaluation with a list of choices for the unknown bits it meets.
inline Completion enumerate_completions(const LookupFamily& f, const LookupConstraint& c,
                                        const std::vector<std::int8_t>& assign) {
  Completion out;
  std::vector<std::vector<std::uint8_t>> pending{{}};
  std::set<std::size_t> touched;
  while (!pending.empty()) {
    std::vector<std::uint8_t> choices = std::move(pending.back());
    pending.pop_back();
    std::vector<std::pair<std::size_t, std::uint8_t>> ext;
    auto reader = [&](std::size_t k) -> int {
      if (assign[k] >= 0) return assign[k];
      for (const auto& [idx, v] : ext)
        if (idx == k) return v;
      const std::size_t pos = ext.size();
      std::uint8_t v = 0;
      if (pos < choices.size()) {
        v = choices[pos];
      } else {
        std::vector<std::uint8_t> alt;
        for (const auto& e : ext) alt.push_back(e.second);
        alt.push_back(1);
        pending.push_back(std::move(alt));
      }
      ext.emplace_back(k, v);
      touched.insert(k);
      return v;
    };
    const int y = static_cast<int>(eval_constraint(f, c, reader));
    (y == c.label ? out.can_sat : out.can_viol) = true;
  }
  out.touched.assign(touched.begin(), touched.end());
  return out;
}

}  // namespace detail

// Lexicographically smallest b (b[0] first) satisfying every constraint, i.e. the
// first consistent member of the canonical enumeration. Depth-first over bits
// with per-constraint completion tracking; constraints are re-examined only
// when a bit they can read gets fixed.
inline std::optional<std::vector<std::uint8_t>> solve_lookup(const LookupFamily& f,
                                                             const std::vector<LookupConstraint>& raw) {
  std::map<std::pair<TokenSeq, std::size_t>, int> uniq;
  for (const auto& c : raw) {
    if (c.label != 0 && c.label != 1) throw InputError("lookup constraint label must be a bit");
    auto [it, fresh] = uniq.emplace(std::make_pair(c.x, c.steps), c.label);
    if (!fresh && it->second != c.label) return std::nullopt;
  }
  std::vector<LookupConstraint> cons;
  for (const auto& [key, label] : uniq) cons.push_back({key.first, key.second, label});

  const std::size_t M = f.bits();
  std::vector<std::int8_t> assign(M, -1);
  std::vector<detail::Completion> state(cons.size());
  std::vector<bool> open(cons.size(), false);
  std::size_t open_count = 0;
  for (std::size_t i = 0; i < cons.size(); ++i) {
    state[i] = detail::enumerate_completions(f, cons[i], assign);
    if (!state[i].can_sat) return std::nullopt;
    if (state[i].can_viol) {
      open[i] = true;
      ++open_count;
    }
  }

  struct Undo {
    std::size_t idx;
    detail::Completion prev;
    bool was_open;
  };

  auto dfs = [&](auto&& self, std::size_t pos) -> bool {
    if (open_count == 0) {
      for (std::size_t k = pos; k < M; ++k) assign[k] = 0;
      return true;
    }
    if (pos == M) return false;
    for (std::int8_t v = 0; v <= 1; ++v) {
      assign[pos] = v;
      std::vector<Undo> undo;
      bool dead = false;
      for (std::size_t i = 0; i < cons.size() && !dead; ++i) {
        if (!open[i] || !std::binary_search(state[i].touched.begin(), state[i].touched.end(), pos)) continue;
        undo.push_back({i, state[i], true});
        state[i] = detail::enumerate_completions(f, cons[i], assign);
        if (!state[i].can_sat) dead = true;
        else if (!state[i].can_viol) {
          open[i] = false;
          --open_count;
        }
      }
      if (!dead && self(self, pos + 1)) return true;
      for (auto it = undo.rbegin(); it != undo.rend(); ++it) {
        if (!open[it->idx]) ++open_count;
        open[it->idx] = true;
        state[it->idx] = std::move(it->prev);
      }
    }
    assign[pos] = -1;
    return false;
  };
  if (!dfs(dfs, 0)) return std::nullopt;
  std::vector<std::uint8_t> b(M);
  for (std::size_t k = 0; k < M; ++k) b[k] = static_cast<std::uint8_t>(assign[k]);
  return b;
}

// Reference: scan members in canonical order.
inline std::optional<std::vector<std::uint8_t>> brute_force_lookup(const LookupFamily& f,
                                                                   const std::vector<LookupConstraint>& cons) {
  const std::uint64_t total = f.enumeration_size();
  auto fp = std::make_shared<const LookupFamily>(f);
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    LookupMember m = lookup_member(fp, idx);
    auto rd = [&](std::size_t k) { return static_cast<int>(m.b[k]); };
    bool ok = true;
    for (const auto& c : cons) {
      if (static_cast<int>(detail::eval_constraint(f, c, rd)) != c.label) {
        ok = false;
        break;
      }
    }
    if (ok) return m.b;
  }
  return std::nullopt;
}

// Family wrapper exposing the learner interface used by the harness.
struct LookupFamilyLearner {
  using member_type = LookupMember;
  std::shared_ptr<const LookupFamily> family;

  explicit LookupFamilyLearner(LookupFamily f) : family(std::make_shared<const LookupFamily>(std::move(f))) {}

  std::string name() const { return family->name(); }
  member_type default_member() const { return lookup_member(family, 0); }
  std::uint64_t enumeration_size() const { return family->enumeration_size(); }
  member_type member(std::uint64_t idx) const { return lookup_member(family, idx); }

  member_type cons(const PrefixDataset& s) const {
    std::vector<LookupConstraint> cs;
    for (std::size_t j = 0; j < s.size(); ++j) {
      auto u = s.input(j);
      cs.push_back({TokenSeq(u.begin(), u.end()), 0, static_cast<int>(s.label(j))});
    }
    return finish(solve_lookup(*family, cs));
  }
  member_type solve_e2e(const E2EDataset& s) const {
    std::vector<LookupConstraint> cs;
    for (const auto& ex : s.examples) cs.push_back({ex.input, s.steps, static_cast<int>(ex.label)});
    return finish(solve_lookup(*family, cs));
  }

 private:
  member_type finish(std::optional<std::vector<std::uint8_t>> b) const {
    if (!b) throw NotRealizable("no member of " + family->name() + " is consistent with the data");
    return LookupMember{family, std::move(*b)};
  }
};

// Canonical points first, then their continuations x_i c by increasing |c|
// (c in lexicographic order), capped at `cap` points.
inline std::vector<TokenSeq> default_pool(const LookupFamily& f, std::size_t cap = 20) {
  std::vector<TokenSeq> pool = f.points();
  std::size_t max_len = f.kind() == LookupFamily::Kind::e1 ? f.T() - 1
                        : f.kind() == LookupFamily::Kind::ldim ? f.D() + 1
                                                               : 1;
  for (std::size_t len = 1; len <= max_len && pool.size() < cap; ++len) {
    for (std::size_t i = 1; i <= f.point_count() && pool.size() < cap; ++i) {
      for (std::size_t c = 0; c < (std::size_t{1} << len) && pool.size() < cap; ++c) {
        TokenSeq x = f.point(i);
        for (std::size_t j = len; j-- > 0;) x.push_back(static_cast<Token>((c >> j) & 1U));
        pool.push_back(std::move(x));
      }
    }
  }
  if (pool.size() > cap) pool.resize(cap);
  return pool;
}

// ---- brute-force combinatorics --------------------------------------------------

template <class F>
concept EnumerableFamily = requires(const F& f, std::uint64_t i) {
  { f.enumeration_size() } -> std::convertible_to<std::uint64_t>;
  { f.member(i) } -> NextTokenGenerator;
};

// An explicit finite list of generators.
template <NextTokenGenerator G>
struct ExplicitFamily {
  std::vector<G> members;
  std::uint64_t enumeration_size() const { return members.size(); }
  const G& member(std::uint64_t i) const { return members[i]; }
};

namespace detail {
template <class G>
int behaviour(const G& g, TokenView x, std::size_t steps) {
  return static_cast<int>(steps == 0 ? g(x) : e2e(g, x, steps));
}
}  // namespace detail

// Number of distinct label vectors (h(x_1), ..., h(x_m)); steps == 0 is base
// mode, otherwise labels are e2e(h, x, steps).
template <EnumerableFamily F>
std::size_t growth_count(const F& family, const std::vector<TokenSeq>& points, std::size_t steps = 0) {
  std::set<std::vector<int>> seen;
  const std::uint64_t total = family.enumeration_size();
  for (std::uint64_t i = 0; i < total; ++i) {
    const auto& g = family.member(i);
    std::vector<int> row;
    row.reserve(points.size());
    for (const auto& x : points) row.push_back(detail::behaviour(g, x, steps));
    seen.insert(std::move(row));
  }
  return seen.size();
}

// Largest shattered subset of the pool, by increasing size with early exit
// (shattering is hereditary, so no k-set shattered means no larger one is).
template <EnumerableFamily F>
std::size_t vcdim_bruteforce(const F& family, const std::vector<TokenSeq>& pool, std::size_t steps = 0) {
  if (pool.size() > 20) throw GuardExceeded("vcdim_bruteforce needs a pool of at most 20 points");
  const std::uint64_t total = family.enumeration_size();
  std::set<std::uint32_t> masks;
  for (std::uint64_t i = 0; i < total; ++i) {
    const auto& g = family.member(i);
    std::uint32_t m = 0;
    for (std::size_t p = 0; p < pool.size(); ++p) {
      const int y = detail::behaviour(g, pool[p], steps);
      if (y > 1) throw InputError("vcdim_bruteforce needs binary outputs");
      if (y) m |= std::uint32_t{1} << p;
    }
    masks.insert(m);
  }
  const std::vector<std::uint32_t> behaviours(masks.begin(), masks.end());
  const std::size_t n = pool.size();
  std::size_t best = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    if ((std::size_t{1} << k) > behaviours.size()) break;
    bool found = false;
    std::vector<bool> seen;
    for (std::uint32_t subset = (1U << k) - 1; subset < (1U << n) && !found;) {
      seen.assign(std::size_t{1} << k, false);
      std::size_t distinct = 0;
      for (std::uint32_t m : behaviours) {
        std::uint32_t proj = 0, bitpos = 0;
        for (std::uint32_t s = subset; s; s &= s - 1) {
          const std::uint32_t low = s & -s;
          if (m & low) proj |= 1U << bitpos;
          ++bitpos;
        }
        if (!seen[proj]) {
          seen[proj] = true;
          if (++distinct == seen.size()) break;
        }
      }
      found = distinct == seen.size();
      // next subset with the same popcount
      const std::uint32_t c = subset & -subset;
      const std::uint32_t r = subset + c;
      if (r == 0) break;
      subset = (((r ^ subset) >> 2) / c) | r;
    }
    if (!found) break;
    best = k;
  }
  return best;
}

// Distinct CoT-loss vectors (1[cot(h, x_i, T) != z_i])_i over the family.
template <EnumerableFamily F>
std::size_t cot_loss_behaviours(const F& family, const CoTDataset& s) {
  s.validate();
  std::set<std::vector<int>> seen;
  const std::uint64_t total = family.enumeration_size();
  for (std::uint64_t i = 0; i < total; ++i) {
    const auto& g = family.member(i);
    std::vector<int> row;
    for (std::size_t c = 0; c < s.chains.size(); ++c) {
      row.push_back(cot(g, s.prompt(c), s.steps) != s.chains[c] ? 1 : 0);
    }
    seen.insert(std::move(row));
  }
  return seen.size();
}

}  // namespace cotlearn
