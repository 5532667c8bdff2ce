#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cotlearn/datasets.hpp"
#include "cotlearn/errors.hpp"
#include "cotlearn/seqcore.hpp"

namespace cotlearn {

// Tape symbols 0, 1 and the blank.
enum class TapeSymbol : std::uint8_t { zero = 0, one = 1, blank = 2 };

inline std::string symbol_name(TapeSymbol a) {
  switch (a) {
    case TapeSymbol::zero: return "0";
    case TapeSymbol::one: return "1";
    default: return "_";
  }
}

inline TapeSymbol parse_symbol(std::string_view s) {
  if (s == "0") return TapeSymbol::zero;
  if (s == "1") return TapeSymbol::one;
  if (s == "_" || s == "⊔") return TapeSymbol::blank;
  throw InputError("unknown tape symbol '" + std::string(s) + "'");
}

struct TMToken {
  int state = 1;  // 1-based
  TapeSymbol symb = TapeSymbol::zero;
  int move = 0;  // -1, 0, +1

  bool operator==(const TMToken&) const = default;

  Token encode() const {
    return static_cast<Token>(((state - 1) * 3 + static_cast<int>(symb)) * 3 + (move + 1));
  }
  static TMToken decode(Token t) {
    TMToken x;
    x.move = static_cast<int>(t % 3) - 1;
    t /= 3;
    x.symb = static_cast<TapeSymbol>(t % 3);
    x.state = static_cast<int>(t / 3) + 1;
    return x;
  }
};

inline std::string token_name(const TMToken& x) {
  return std::to_string(x.state) + ":" + symbol_name(x.symb) + ":" + (x.move > 0 ? "+1" : std::to_string(x.move));
}

// Flat alphabet of 9S tokens rendered "s:a:b"; "⊔" and an unsigned "1" move parse as aliases.
inline std::shared_ptr<const Alphabet> tm_alphabet(int states) {
  if (states < 1) throw InputError("state count must be >= 1");
  std::vector<std::string> names;
  for (Token t = 0; t < static_cast<Token>(9 * states); ++t) names.push_back(token_name(TMToken::decode(t)));
  auto a = std::make_shared<Alphabet>(std::move(names));
  for (Token t = 0; t < static_cast<Token>(9 * states); ++t) {
    TMToken x = TMToken::decode(t);
    std::string st = std::to_string(x.state) + ":";
    std::string mv = x.move > 0 ? "1" : std::to_string(x.move);
    if (x.symb == TapeSymbol::blank) {
      a->add_alias(st + "⊔:" + (x.move > 0 ? "+1" : std::to_string(x.move)), t);
      if (x.move > 0) a->add_alias(st + "⊔:1", t);
    }
    if (x.move > 0) a->add_alias(st + symbol_name(x.symb) + ":" + mv, t);
  }
  return a;
}

// <S, T, tau> with tau stored at index (s-1)*3 + r.
struct TMSpec {
  int states = 1;
  std::size_t steps = 1;
  std::vector<TMToken> table;

  const TMToken& rule(int s, TapeSymbol r) const {
    return table[static_cast<std::size_t>((s - 1) * 3 + static_cast<int>(r))];
  }
  TMToken& rule(int s, TapeSymbol r) { return table[static_cast<std::size_t>((s - 1) * 3 + static_cast<int>(r))]; }

  void validate() const {
    if (states < 1) throw InputError("TM needs at least one state");
    if (steps < 1) throw InputError("TM runtime T must be >= 1");
    if (table.size() != static_cast<std::size_t>(3 * states)) throw InputError("TM table must have 3S entries");
    for (const TMToken& x : table) {
      if (x.state < 1 || x.state > states) throw InputError("TM transition targets an unknown state");
      if (x.symb == TapeSymbol::blank) throw InputError("TM may only write 0 or 1");
      if (x.move < -1 || x.move > 1) throw InputError("TM move must be -1, 0 or +1");
    }
  }
  bool operator==(const TMSpec&) const = default;
};

struct TMStep {
  int state;        // s_t
  TapeSymbol write; // a_t
  int move;         // b_t
  long head;        // p_t
  TapeSymbol read;  // r_t
};

struct TMTrace {
  int initial_state = 1;
  long initial_head = 1;
  std::vector<TMStep> steps;
};

struct TMRun {
  int output = 0;
  TMTrace trace;
};

inline TMRun simulate_tm(const TMSpec& spec, const std::vector<int>& omega) {
  spec.validate();
  std::map<long, TapeSymbol> tape;
  for (std::size_t i = 0; i < omega.size(); ++i) {
    if (omega[i] != 0 && omega[i] != 1) throw InputError("TM input must be binary");
    tape[static_cast<long>(i) + 1] = static_cast<TapeSymbol>(omega[i]);
  }
  TMRun run;
  run.trace.initial_head = static_cast<long>(omega.size()) + 1;
  long p = run.trace.initial_head;
  int s = 1;
  for (std::size_t t = 0; t < spec.steps; ++t) {
    auto it = tape.find(p);
    TapeSymbol r = it == tape.end() ? TapeSymbol::blank : it->second;
    const TMToken& next = spec.rule(s, r);
    tape[p] = next.symb;
    p += next.move;
    s = next.state;
    run.trace.steps.push_back({next.state, next.symb, next.move, p, r});
  }
  run.output = static_cast<int>(run.trace.steps.back().write);
  return run;
}

struct TapeRead {
  int state;
  TapeSymbol read;
  bool operator==(const TapeRead&) const = default;
};

// read-tape: prefix sums of moves, then the newest token written
// at the final head position. `visits` counts token reads for the cost check.
inline TapeRead read_tape(TokenView z, std::size_t* visits = nullptr) {
  if (z.empty()) throw InputError("read_tape needs a non-empty history");
  const std::size_t n = z.size();
  std::vector<long> pos(n);
  long acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    pos[i] = acc;
    acc += TMToken::decode(z[i]).move;
  }
  const long npos = acc;
  std::size_t count = n;
  TapeSymbol read = TapeSymbol::blank;
  for (std::size_t j = n; j-- > 0;) {
    ++count;
    if (pos[j] == npos) {
      read = TMToken::decode(z[j]).symb;
      break;
    }
  }
  if (visits) *visits += count;
  return {TMToken::decode(z.back()).state, read};
}

// Same result via a last-writer map; differential-tested against read_tape.
inline TapeRead read_tape_indexed(TokenView z) {
  if (z.empty()) throw InputError("read_tape needs a non-empty history");
  std::map<long, TapeSymbol> last;
  long p = 0;
  for (Token t : z) {
    TMToken x = TMToken::decode(t);
    last[p] = x.symb;
    p += x.move;
  }
  auto it = last.find(p);
  return {TMToken::decode(z.back()).state, it == last.end() ? TapeSymbol::blank : it->second};
}

inline TokenSeq pre(const std::vector<int>& omega) {
  TokenSeq x{TMToken{1, TapeSymbol::blank, +1}.encode()};
  for (int b : omega) {
    if (b != 0 && b != 1) throw InputError("Pre expects a bit string");
    x.push_back(TMToken{1, static_cast<TapeSymbol>(b), +1}.encode());
  }
  return x;
}

inline int post(const TMToken& x) {
  if (x.symb == TapeSymbol::blank) throw InputError("Post applied to a blank-symbol token");
  return static_cast<int>(x.symb);
}

// f_tau: tau applied to read_tape(z). The reader is a template parameter so the
// attention-based read can be plugged in unchanged.
template <class Reader>
struct BasicTMGenerator {
  std::shared_ptr<const TMSpec> spec;
  Reader reader{};

  std::size_t alphabet_size() const { return static_cast<std::size_t>(9 * spec->states); }
  Token operator()(TokenView z) const {
    TapeRead r = reader(z);
    if (r.state < 1 || r.state > spec->states) throw InputError("history refers to a state outside [S]");
    return spec->rule(r.state, r.read).encode();
  }
};

struct DirectReader {
  TapeRead operator()(TokenView z) const { return read_tape(z); }
};

using TMGenerator = BasicTMGenerator<DirectReader>;

inline TMGenerator make_tm_generator(TMSpec spec) {
  spec.validate();
  return TMGenerator{std::make_shared<const TMSpec>(std::move(spec))};
}

inline TMToken f_tau(const TMSpec& spec, TokenView z) {
  const TapeRead r = read_tape(z);
  if (r.state < 1 || r.state > spec.states) throw InputError("history refers to a state outside [S]");
  return spec.rule(r.state, r.read);
}

// Memorises tau(state_i, read_i) = v_i; unconstrained entries default to (1,0,0).
inline TMSpec cons_tm(const PrefixDataset& s, int states, std::size_t steps = 1) {
  TMSpec out{states, steps, std::vector<TMToken>(static_cast<std::size_t>(3 * states), TMToken{1, TapeSymbol::zero, 0})};
  std::vector<bool> set(out.table.size(), false);
  const Token sigma = static_cast<Token>(9 * states);
  for (std::size_t j = 0; j < s.size(); ++j) {
    const Token label = s.label(j);
    if (label >= sigma) throw InputError("label token outside the 9S alphabet");
    TMToken v = TMToken::decode(label);
    if (v.symb == TapeSymbol::blank) throw NotRealizable("label writes a blank, which no tau can emit");
    TapeRead r = read_tape(s.input(j));
    if (r.state > states) throw InputError("training history uses a state above S");
    const std::size_t idx = static_cast<std::size_t>((r.state - 1) * 3 + static_cast<int>(r.read));
    if (set[idx] && out.table[idx] != v) {
      throw NotRealizable("conflicting transitions required for (" + std::to_string(r.state) + "," +
                          symbol_name(r.read) + ")");
    }
    out.table[idx] = v;
    set[idx] = true;
  }
  return out;
}

inline TMSpec random_tm_spec(int states, std::size_t steps, std::mt19937_64& rng) {
  TMSpec spec{states, steps, {}};
  std::uniform_int_distribution<int> st(1, states), bit(0, 1), mv(-1, 1);
  for (int i = 0; i < 3 * states; ++i) {
    int s = st(rng);
    int a = bit(rng);
    int b = mv(rng);
    spec.table.push_back({s, static_cast<TapeSymbol>(a), b});
  }
  return spec;
}

struct TMFamily {
  using member_type = TMGenerator;
  int states = 1;

  std::string name() const { return "tm:S=" + std::to_string(states); }
  member_type default_member() const {
    return make_tm_generator(TMSpec{states, 1,
                                    std::vector<TMToken>(static_cast<std::size_t>(3 * states),
                                                         TMToken{1, TapeSymbol::zero, 0})});
  }
  member_type cons(const PrefixDataset& s) const { return make_tm_generator(cons_tm(s, states)); }
};

}  // namespace cotlearn
