#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cotlearn/errors.hpp"

namespace cotlearn {

using Token = std::uint32_t;
using TokenSeq = std::vector<Token>;
using TokenView = std::span<const Token>;

// Ordered finite token set with a canonical text name per token. Extra spellings
// may be registered as aliases; they parse but never render.
class Alphabet {
 public:
  explicit Alphabet(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.empty()) throw InputError("alphabet must be non-empty");
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (!index_.emplace(names_[i], static_cast<Token>(i)).second) {
        throw InputError("duplicate alphabet symbol '" + names_[i] + "'");
      }
    }
  }

  static Alphabet binary() { return Alphabet({"0", "1"}); }

  void add_alias(const std::string& alias, Token t) {
    if (t >= names_.size()) throw InputError("alias target out of range");
    if (!index_.emplace(alias, t).second) throw InputError("alias '" + alias + "' already bound");
  }

  std::size_t size() const { return names_.size(); }
  const std::string& name(Token t) const {
    if (t >= names_.size()) throw InputError("token " + std::to_string(t) + " outside alphabet");
    return names_[t];
  }
  std::optional<Token> find(std::string_view s) const {
    auto it = index_.find(std::string(s));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  Token index_of(std::string_view s) const {
    if (auto t = find(s)) return *t;
    throw InputError("unknown symbol '" + std::string(s) + "'");
  }
  bool contains(Token t) const { return t < names_.size(); }

  bool operator==(const Alphabet& o) const { return names_ == o.names_; }

 private:
  std::vector<std::string> names_;
  std::map<std::string, Token, std::less<>> index_;
};

// ---- 1-based inclusive slicing --------------------------------------------
//
// s[i] for i >= 1 is the i-th token, s[-k] is s[n-k+1]. slice(s, i, j) keeps
// s[i..j] inclusive; omitted ends default to the sequence ends and out-of-range
// ends are clamped, so s[:-k] is the first n-k+1 tokens.

namespace detail {
inline long resolve_index(long i, std::size_t n) {
  return i < 0 ? static_cast<long>(n) + 1 + i : i;
}
}  // namespace detail

inline Token at(TokenView s, long i) {
  long r = detail::resolve_index(i, s.size());
  if (i == 0 || r < 1 || r > static_cast<long>(s.size())) {
    throw InputError("index " + std::to_string(i) + " out of range for length " +
                     std::to_string(s.size()));
  }
  return s[static_cast<std::size_t>(r - 1)];
}

inline TokenView slice(TokenView s, std::optional<long> from, std::optional<long> to) {
  const long n = static_cast<long>(s.size());
  long i = from ? detail::resolve_index(*from, s.size()) : 1;
  long j = to ? detail::resolve_index(*to, s.size()) : n;
  i = std::max(i, 1L);
  j = std::min(j, n);
  if (j < i) return s.subspan(0, 0);
  return s.subspan(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - i + 1));
}

// z[:-(t+1)], i.e. everything before the last t tokens.
inline TokenView drop_last(TokenView s, std::size_t t) {
  return s.subspan(0, t >= s.size() ? 0 : s.size() - t);
}

// ---- Generators -------------------------------------------------------------

template <class G>
concept NextTokenGenerator = requires(const G& g, TokenView x) {
  { g(x) } -> std::convertible_to<Token>;
  { g.alphabet_size() } -> std::convertible_to<std::size_t>;
};

namespace detail {
inline void check_tokens(TokenView x, std::size_t alphabet_size) {
  for (Token t : x) {
    if (t >= alphabet_size) {
      throw InputError("token " + std::to_string(t) + " outside alphabet of size " +
                       std::to_string(alphabet_size));
    }
  }
}

template <NextTokenGenerator G>
Token checked_step(const G& g, TokenView x) {
  Token y = static_cast<Token>(g(x));
  if (y >= g.alphabet_size()) throw InvariantViolation("generator emitted a token outside its alphabet");
  return y;
}
}  // namespace detail

template <NextTokenGenerator G>
TokenSeq apply_and_append(const G& g, TokenView x) {
  detail::check_tokens(x, g.alphabet_size());
  TokenSeq out(x.begin(), x.end());
  out.push_back(detail::checked_step(g, x));
  return out;
}

template <NextTokenGenerator G>
TokenSeq cot(const G& g, TokenView x, std::size_t steps) {
  if (steps == 0) throw InputError("step count T must be at least 1");
  detail::check_tokens(x, g.alphabet_size());
  TokenSeq z(x.begin(), x.end());
  z.reserve(x.size() + steps);
  for (std::size_t t = 0; t < steps; ++t) z.push_back(detail::checked_step(g, TokenView(z)));
  return z;
}

template <NextTokenGenerator G>
Token e2e(const G& g, TokenView x, std::size_t steps) {
  return cot(g, x, steps).back();
}

template <NextTokenGenerator G>
TokenSeq cot_time_dependent(std::span<const G> gs, TokenView x) {
  if (gs.empty()) throw InputError("time-dependent generation needs at least one generator");
  const std::size_t sigma = gs.front().alphabet_size();
  for (const G& g : gs) {
    if (g.alphabet_size() != sigma) throw InputError("generators disagree on alphabet");
  }
  detail::check_tokens(x, sigma);
  TokenSeq z(x.begin(), x.end());
  for (const G& g : gs) z.push_back(detail::checked_step(g, TokenView(z)));
  return z;
}

// Type-erased generator with a kind tag and a canonical parameter string;
// two generators with equal kind and parameters compute the same function.
class Generator {
 public:
  enum class Kind { linear_threshold, sparse_linear_threshold, tm_transition, lookup_family_member, other };

  Generator(Kind kind, std::shared_ptr<const Alphabet> alphabet, std::string params,
            std::function<Token(TokenView)> fn)
      : kind_(kind), alphabet_(std::move(alphabet)), params_(std::move(params)), fn_(std::move(fn)) {}

  template <NextTokenGenerator G>
  static Generator wrap(Kind kind, std::shared_ptr<const Alphabet> alphabet, std::string params, G g) {
    if (g.alphabet_size() != alphabet->size()) throw InputError("alphabet size mismatch");
    return Generator(kind, std::move(alphabet), std::move(params),
                     [g = std::move(g)](TokenView x) { return static_cast<Token>(g(x)); });
  }

  Token operator()(TokenView x) const { return fn_(x); }
  std::size_t alphabet_size() const { return alphabet_->size(); }
  const Alphabet& alphabet() const { return *alphabet_; }
  Kind kind() const { return kind_; }
  const std::string& params() const { return params_; }

  bool same_parameters(const Generator& o) const { return kind_ == o.kind_ && params_ == o.params_; }

 private:
  Kind kind_;
  std::shared_ptr<const Alphabet> alphabet_;
  std::string params_;
  std::function<Token(TokenView)> fn_;
};

// ---- Text I/O ---------------------------------------------------------------

inline std::string format_sequence(TokenView s, const Alphabet& a) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ',';
    out += a.name(s[i]);
  }
  return out;
}

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Comma-separated symbols; an empty or all-blank line is the empty sequence.
inline TokenSeq parse_sequence(std::string_view line, const Alphabet& a) {
  TokenSeq out;
  std::string body = trim(line);
  if (body.empty()) return out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(a.index_of(trim(item)));
  if (body.back() == ',') throw InputError("trailing comma in sequence");
  return out;
}

// Accepts either "0110" or "0,1,1,0"; the empty string is the empty word.
inline std::vector<int> parse_bits(std::string_view text) {
  std::vector<int> bits;
  for (char c : text) {
    if (c == '0' || c == '1') bits.push_back(c - '0');
    else if (c == ',' || c == ' ') continue;
    else throw InputError("expected a bit string, got '" + std::string(text) + "'");
  }
  return bits;
}

}  // namespace cotlearn
