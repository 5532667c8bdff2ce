#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "cotlearn/errors.hpp"
#include "cotlearn/rational.hpp"
#include "cotlearn/seqcore.hpp"
#include "cotlearn/turing.hpp"

namespace cotlearn {

using RVec = std::vector<Rational>;

struct AttentionBatch {
  std::vector<RVec> q, k, v;

  std::size_t length() const { return q.size(); }
  void validate() const {
    if (k.size() != q.size() || v.size() != q.size()) throw InputError("attention: q, k, v lengths differ");
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (q[i].size() != q[0].size() || k[i].size() != q[0].size()) throw InputError("attention: ragged q/k");
      if (v[i].size() != v[0].size()) throw InputError("attention: ragged v");
    }
  }
  bool uniform() const {
    for (std::size_t i = 0; i < q.size(); ++i) {
      for (const auto& x : q[i]) if (x != 0) return false;
      for (const auto& x : k[i]) if (x != 0) return false;
    }
    return true;
  }
};

struct AttentionPoint {
  RVec value;
  Rational best_score;
  std::vector<std::size_t> argmax;  // 0-based key positions
};

inline Rational dot(const RVec& a, const RVec& b) {
  Rational s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Average of values over argmax_j <q, keys[j]>, ties kept exactly.
inline AttentionPoint aha_query(const RVec& q, const std::vector<RVec>& keys, const std::vector<RVec>& values,
                                std::size_t count) {
  AttentionPoint out;
  for (std::size_t j = 0; j < count; ++j) {
    Rational s = dot(q, keys[j]);
    if (out.argmax.empty() || s > out.best_score) {
      out.best_score = s;
      out.argmax.assign(1, j);
    } else if (s == out.best_score) {
      out.argmax.push_back(j);
    }
  }
  out.value.assign(values[0].size(), Rational(0));
  for (std::size_t j : out.argmax) {
    for (std::size_t c = 0; c < out.value.size(); ++c) out.value[c] += values[j][c];
  }
  const Rational cnt(static_cast<long>(out.argmax.size()));
  for (auto& x : out.value) x /= cnt;
  return out;
}

// Causal average hard attention at one position (0-based i): keys 0..i.
inline AttentionPoint aha_at(const AttentionBatch& b, std::size_t i) {
  if (i >= b.length()) throw InputError("attention: position out of range");
  return aha_query(b.q[i], b.k, b.v, i + 1);
}

inline std::vector<RVec> aha_generic(const AttentionBatch& b) {
  b.validate();
  std::vector<RVec> out;
  out.reserve(b.length());
  for (std::size_t i = 0; i < b.length(); ++i) out.push_back(aha_at(b, i).value);
  return out;
}

// All scores equal: output[i] is the running mean of v[1..i].
inline std::vector<RVec> aha_uniform(const std::vector<RVec>& v) {
  std::vector<RVec> out;
  out.reserve(v.size());
  RVec sum(v.empty() ? 0 : v[0].size(), Rational(0));
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t c = 0; c < sum.size(); ++c) sum[c] += v[i][c];
    RVec mean = sum;
    for (auto& x : mean) x /= Rational(static_cast<long>(i + 1));
    out.push_back(std::move(mean));
  }
  return out;
}

inline std::vector<RVec> aha(const AttentionBatch& b) {
  b.validate();
  if (b.uniform()) return aha_uniform(b.v);
  return aha_generic(b);
}

// ---- tape reading with attention ---------------------------------------------

struct TapeView {
  std::vector<Rational> pos, npos, idx_inv;
  std::vector<int> move;
};

inline void require_pre_rooted(TokenView z) {
  if (z.empty()) throw InputError("attention read needs a non-empty history");
  for (std::size_t i = 0; i < z.size(); ++i) {
    const bool blank = TMToken::decode(z[i]).symb == TapeSymbol::blank;
    if (blank != (i == 0)) {
      throw InputError("history is not rooted in Pre: blank symbol must appear exactly at position 1");
    }
  }
}

// idx-inv from uniform attention over is-first, npos from uniform attention over
// moves rescaled by i, and pos = npos - move.
inline TapeView positions_via_attention(TokenView z) {
  require_pre_rooted(z);
  const std::size_t n = z.size();
  std::vector<RVec> first(n), moves(n);
  TapeView view;
  for (std::size_t i = 0; i < n; ++i) {
    const int mv = TMToken::decode(z[i]).move;
    view.move.push_back(mv);
    first[i] = {Rational(i == 0 ? 1 : 0)};
    moves[i] = {Rational(mv)};
  }
  AttentionBatch b1{std::vector<RVec>(n, RVec{0}), std::vector<RVec>(n, RVec{0}), first};
  AttentionBatch b2{std::vector<RVec>(n, RVec{0}), std::vector<RVec>(n, RVec{0}), moves};
  auto idx = aha(b1);
  auto scaled = aha(b2);
  for (std::size_t i = 0; i < n; ++i) {
    view.idx_inv.push_back(idx[i][0]);
    Rational np = scaled[i][0] / idx[i][0];
    view.npos.push_back(np);
    view.pos.push_back(np - view.move[i]);
  }
  return view;
}

inline RVec lookup_query(const TapeView& view, std::size_t at) {
  const Rational& np = view.npos[at];
  return {-np * np, np, Rational(-1), Rational(-1)};
}

// Keys and values for positions 0..at; the query slots are left empty.
inline AttentionBatch lookup_batch(const TapeView& view, TokenView z, std::size_t at) {
  const std::size_t n = at + 1;
  AttentionBatch b;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == 0) {
      b.k.push_back({0, 0, 0, view.idx_inv[0]});
    } else {
      const Rational& p = view.pos[j];
      b.k.push_back({2, 4 * p, 2 * p * p, view.idx_inv[j]});
    }
    b.v.push_back({Rational(static_cast<int>(TMToken::decode(z[j]).symb))});
  }
  return b;
}

struct LookupResult {
  TapeSymbol read;
  AttentionPoint point;
};

namespace detail {
// Query at `at` against keys 0..at of a batch built for some position >= at.
inline LookupResult lookup_in(const TapeView& view, const AttentionBatch& b, std::size_t at) {
  const RVec q = lookup_query(view, at);
  AttentionPoint p = aha_query(q, b.k, b.v, at + 1);
  // The scores must be the closed forms -1 and -2(npos-pos_j)^2 - 1/j.
  for (std::size_t j = 0; j <= at; ++j) {
    Rational expect = j == 0 ? Rational(-1)
                             : Rational(-2) * (view.npos[at] - view.pos[j]) * (view.npos[at] - view.pos[j]) -
                                   Rational(1, static_cast<unsigned long>(j + 1));
    if (dot(q, b.k[j]) != expect) throw InvariantViolation("lookup score differs from its closed form");
  }
  if (p.argmax.size() != 1) throw InvariantViolation("lookup argmax is not a singleton");
  const Rational& val = p.value[0];
  if (val != 0 && val != 1 && val != 2) throw InvariantViolation("lookup returned a non-symbol value");
  return {static_cast<TapeSymbol>(val.get_num().get_si()), std::move(p)};
}
}  // namespace detail

inline LookupResult lookup_at(const TapeView& view, TokenView z, std::size_t at) {
  if (view.pos.size() != z.size() || at >= z.size()) throw InputError("tape view inconsistent with history");
  return detail::lookup_in(view, lookup_batch(view, z, at), at);
}

inline TapeSymbol lookup_via_attention(const TapeView& view, TokenView z) {
  return lookup_at(view, z, z.size() - 1).read;
}

inline TapeRead read_tape_attention(TokenView z) {
  TapeView view = positions_via_attention(z);
  return {TMToken::decode(z.back()).state, lookup_via_attention(view, z)};
}

// One causal pass: entry j is the read after the first j+1 tokens, equal to
// read_tape_attention on that prefix since no position attends forward.
inline std::vector<LookupResult> lookup_all(TokenView z) {
  TapeView view = positions_via_attention(z);
  const AttentionBatch b = lookup_batch(view, z, z.size() - 1);
  std::vector<LookupResult> out;
  out.reserve(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out.push_back(detail::lookup_in(view, b, i));
  return out;
}

inline std::vector<TapeRead> read_tape_attention_all(TokenView z) {
  std::vector<TapeRead> out;
  std::size_t i = 0;
  for (auto& r : lookup_all(z)) out.push_back({TMToken::decode(z[i++]).state, r.read});
  return out;
}

struct AttentionReader {
  TapeRead operator()(TokenView z) const { return read_tape_attention(z); }
};

using AttentionTMGenerator = BasicTMGenerator<AttentionReader>;

inline AttentionTMGenerator make_attention_tm_generator(TMSpec spec) {
  spec.validate();
  return AttentionTMGenerator{std::make_shared<const TMSpec>(std::move(spec))};
}

// i, move, pos, npos, idx-inv, best-score, argmax-set (1-based, ';'-joined).
inline void dump_attention_tsv(std::ostream& os, TokenView z) {
  TapeView view = positions_via_attention(z);
  os << "i\tmove\tpos\tnpos\tidx_inv\tbest_score\targmax\n";
  for (std::size_t i = 0; i < z.size(); ++i) {
    LookupResult r = lookup_at(view, z, i);
    std::string set;
    for (std::size_t j : r.point.argmax) set += (set.empty() ? "" : ";") + std::to_string(j + 1);
    os << (i + 1) << '\t' << view.move[i] << '\t' << view.pos[i] << '\t' << view.npos[i] << '\t'
       << view.idx_inv[i] << '\t' << r.point.best_score << '\t' << set << '\n';
  }
}

}  // namespace cotlearn
