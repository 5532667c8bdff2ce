#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cotlearn/datasets.hpp"
#include "cotlearn/errors.hpp"
#include "cotlearn/rational.hpp"
#include "cotlearn/seqcore.hpp"
#include "cotlearn/turing.hpp"

namespace cotlearn {

// ---- consistency rules -----------------------------------------------------------

// Cons_CoT through one call to a base-class oracle on the prefix expansion.
template <class Oracle>
auto cons_cot(const CoTDataset& s, Oracle&& oracle) {
  PrefixDataset pfx = prefix_expand(s);
  auto f = oracle(pfx);
  for (std::size_t i = 0; i < s.chains.size(); ++i) {
    if (cot(f, s.prompt(i), s.steps) != s.chains[i]) {
      throw InvariantViolation("oracle output does not reproduce training chain " + std::to_string(i));
    }
  }
  return f;
}

template <class F>
concept HasE2ESolver = requires(const F& f, const E2EDataset& s) { f.solve_e2e(s); };

template <class F>
concept HasEnumeration = requires(const F& f, std::uint64_t i) {
  { f.enumeration_size() } -> std::convertible_to<std::uint64_t>;
  f.member(i);
};

inline constexpr std::uint64_t kMaxBruteForceMembers = std::uint64_t{1} << 20;

// Cons_e2e: a family-provided structured search when present, otherwise the
// first consistent member of the canonical enumeration.
template <class Family>
auto cons_e2e(const E2EDataset& s, const Family& family) {
  if (s.steps == 0) throw InputError("e2e dataset needs T >= 1");
  auto check = [&](const auto& f) {
    for (const auto& ex : s.examples)
      if (e2e(f, ex.input, s.steps) != ex.label) return false;
    return true;
  };
  if constexpr (HasE2ESolver<Family>) {
    auto f = family.solve_e2e(s);
    if (!check(f)) throw InvariantViolation("e2e solver returned an inconsistent member");
    return f;
  } else if constexpr (HasEnumeration<Family>) {
    const std::uint64_t total = family.enumeration_size();
    if (total > kMaxBruteForceMembers) throw GuardExceeded("family too large for brute-force e2e search");
    for (std::uint64_t i = 0; i < total; ++i) {
      auto f = family.member(i);
      if (check(f)) return f;
    }
    throw NotRealizable("no member of the family is e2e-consistent with the data");
  } else {
    throw InputError("family " + family.name() + " is not enumerable; e2e learning unsupported");
    return family.default_member();
  }
}

// ---- loss -------------------------------------------------------------------------

template <class H>
Rational zero_one_error(const H& h, const E2EDataset& eval) {
  if (eval.examples.empty()) throw InputError("zero_one_error needs a non-empty evaluation set");
  long wrong = 0;
  for (const auto& ex : eval.examples) {
    if (static_cast<Token>(h(TokenView(ex.input))) != ex.label) ++wrong;
  }
  return fraction(wrong, static_cast<long>(eval.examples.size()));
}

// ---- input distributions ----------------------------------------------------------

using WeightedSupport = std::vector<std::pair<TokenSeq, Rational>>;
inline constexpr std::size_t kExactSupportLimit = 4096;

// Uniform over a fixed list of prompts.
struct UniformPoints {
  std::vector<TokenSeq> points;

  TokenSeq sample(std::mt19937_64& rng) const {
    std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
    return points[pick(rng)];
  }
  std::optional<WeightedSupport> support() const {
    if (points.size() > kExactSupportLimit) return std::nullopt;
    WeightedSupport out;
    for (const auto& p : points) out.emplace_back(p, Rational(1, static_cast<long>(points.size())));
    return out;
  }
};

// Length uniform in [min_len, max_len], then uniform bits. With tm_prompt the
// bit string w is handed over as Pre(w).
struct BitStrings {
  std::size_t min_len = 0;
  std::size_t max_len = 6;
  bool tm_prompt = false;

  TokenSeq wrap(const std::vector<int>& w) const {
    if (tm_prompt) return pre(w);
    return TokenSeq(w.begin(), w.end());
  }
  TokenSeq sample(std::mt19937_64& rng) const {
    std::uniform_int_distribution<std::size_t> len(min_len, max_len);
    std::uniform_int_distribution<int> bit(0, 1);
    std::vector<int> w(len(rng));
    for (auto& b : w) b = bit(rng);
    return wrap(w);
  }
  std::optional<WeightedSupport> support() const {
    std::size_t size = 0;
    for (std::size_t l = min_len; l <= max_len; ++l) {
      if (l > 12) return std::nullopt;
      size += std::size_t{1} << l;
    }
    if (size > kExactSupportLimit) return std::nullopt;
    WeightedSupport out;
    const long lengths = static_cast<long>(max_len - min_len + 1);
    for (std::size_t l = min_len; l <= max_len; ++l) {
      const Rational p(1, lengths * (1L << l));
      for (std::size_t mask = 0; mask < (std::size_t{1} << l); ++mask) {
        std::vector<int> w(l);
        for (std::size_t j = 0; j < l; ++j) w[j] = static_cast<int>((mask >> (l - 1 - j)) & 1U);
        out.emplace_back(wrap(w), p);
      }
    }
    return out;
  }
};

template <class D>
concept InputDistribution = requires(const D& d, std::mt19937_64& rng) {
  { d.sample(rng) } -> std::convertible_to<TokenSeq>;
  { d.support() } -> std::convertible_to<std::optional<WeightedSupport>>;
};

// ---- PAC harness ----------------------------------------------------------------

enum class Mode { cot, e2e };

inline std::string mode_name(Mode m) { return m == Mode::cot ? "cot" : "e2e"; }
inline Mode parse_mode(const std::string& s) {
  if (s == "cot") return Mode::cot;
  if (s == "e2e") return Mode::e2e;
  throw InputError("mode must be 'cot' or 'e2e', got '" + s + "'");
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

struct TrialResult {
  Rational error;
  bool exact = false;
};

// Held-out e2e disagreement with the target: exact over an enumerable support,
// otherwise a Monte-Carlo estimate over eval_n fresh prompts.
template <class H, class G, InputDistribution D>
TrialResult heldout_error(const H& h, const G& f_star, const D& dist, std::size_t steps, std::size_t eval_n,
                          std::uint64_t seed) {
  if (auto sup = dist.support()) {
    Rational err = 0;
    for (const auto& [x, p] : *sup) {
      if (e2e(h, x, steps) != e2e(f_star, x, steps)) err += p;
    }
    return {err, true};
  }
  if (eval_n == 0) throw InputError("eval_n must be positive when the support is not enumerable");
  std::mt19937_64 rng(seed);
  long wrong = 0;
  for (std::size_t i = 0; i < eval_n; ++i) {
    TokenSeq x = dist.sample(rng);
    if (e2e(h, x, steps) != e2e(f_star, x, steps)) ++wrong;
  }
  return {fraction(wrong, static_cast<long>(eval_n)), false};
}

template <class Family, class G>
auto learn_from(const Family& family, const G& f_star, const std::vector<TokenSeq>& prompts, std::size_t steps,
                Mode mode) {
  if (mode == Mode::cot) {
    CoTDataset s{{}, steps};
    for (const auto& x : prompts) s.chains.push_back(cot(f_star, x, steps));
    return cons_cot(s, [&](const PrefixDataset& p) { return family.cons(p); });
  }
  E2EDataset s{{}, steps};
  for (const auto& x : prompts) s.examples.push_back({x, e2e(f_star, x, steps)});
  return cons_e2e(s, family);
}

// One trial: m prompts from the sample stream seeded by `seed`, the mode's
// learner, then held-out error. Streams are nested across m.
template <class Family, class G, InputDistribution D>
TrialResult pac_trial(const Family& family, const G& f_star, const D& dist, std::size_t m, std::size_t steps,
                      Mode mode, std::size_t eval_n, std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, 2));
  std::vector<TokenSeq> prompts;
  for (std::size_t i = 0; i < m; ++i) prompts.push_back(dist.sample(rng));
  auto h = learn_from(family, f_star, prompts, steps, mode);
  return heldout_error(h, f_star, dist, steps, eval_n, derive_seed(seed, 3));
}

// Smallest m in [0, max_m] at which the learner trained on the first m stream
// samples has zero held-out error; duplicates of earlier prompts leave the
// (set-determined) hypothesis unchanged and are not re-learned.
template <class Family, class G, InputDistribution D>
std::optional<std::size_t> samples_to_zero_error(const Family& family, const G& f_star, const D& dist,
                                                 std::size_t steps, Mode mode, std::size_t max_m,
                                                 std::size_t eval_n, std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, 2));
  std::vector<TokenSeq> prompts;
  std::set<TokenSeq> seen;
  for (std::size_t m = 0; m <= max_m; ++m) {
    if (m > 0) {
      TokenSeq x = dist.sample(rng);
      if (!seen.insert(x).second) continue;
      prompts.push_back(std::move(x));
    }
    auto h = learn_from(family, f_star, prompts, steps, mode);
    if (heldout_error(h, f_star, dist, steps, eval_n, derive_seed(seed, 3)).error == 0) return m;
  }
  return std::nullopt;
}

}  // namespace cotlearn
