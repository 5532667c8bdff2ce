#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "cotlearn/errors.hpp"
#include "cotlearn/seqcore.hpp"

namespace cotlearn {

struct Example {
  TokenSeq input;
  Token label = 0;
  auto operator<=>(const Example&) const = default;
};

struct E2EDataset {
  std::vector<Example> examples;
  std::size_t steps = 1;
};

// Each chain is prompt ++ T generated tokens, so |z| >= T+1.
struct CoTDataset {
  std::vector<TokenSeq> chains;
  std::size_t steps = 1;

  void validate() const {
    if (steps == 0) throw InputError("CoT dataset needs T >= 1");
    for (std::size_t i = 0; i < chains.size(); ++i) {
      if (chains[i].size() < steps + 1) {
        throw InputError("chain " + std::to_string(i) + " has length " + std::to_string(chains[i].size()) +
                         " < T+1 = " + std::to_string(steps + 1));
      }
    }
  }
  TokenView prompt(std::size_t i) const { return drop_last(chains[i], steps); }
};

// (prefix, next token) pairs. Prefixes are stored as (source, length) views into
// shared sequences so expanding m chains costs O(sum |z|) memory, not O(m T |z|).
class PrefixDataset {
 public:
  struct Pair {
    std::size_t source;
    std::size_t length;
    Token label;
  };

  void add(TokenSeq u, Token v) {
    sources_.push_back(std::move(u));
    pairs_.push_back({sources_.size() - 1, sources_.back().size(), v});
  }
  std::size_t add_source(TokenSeq z) {
    sources_.push_back(std::move(z));
    return sources_.size() - 1;
  }
  void add_view(std::size_t source, std::size_t length, Token v) {
    if (source >= sources_.size() || length > sources_[source].size()) {
      throw InputError("prefix view out of range");
    }
    pairs_.push_back({source, length, v});
  }

  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  TokenView input(std::size_t j) const {
    const Pair& p = pairs_[j];
    return TokenView(sources_[p.source]).first(p.length);
  }
  Token label(std::size_t j) const { return pairs_[j].label; }
  const std::vector<Pair>& pairs() const { return pairs_; }

  std::size_t total_prefix_length() const {
    std::size_t s = 0;
    for (const auto& p : pairs_) s += p.length;
    return s;
  }

  // Sorted, de-duplicated copy of the pairs.
  std::vector<Example> canonical() const {
    std::vector<Example> out;
    out.reserve(pairs_.size());
    for (std::size_t j = 0; j < size(); ++j) {
      auto u = input(j);
      out.push_back({TokenSeq(u.begin(), u.end()), label(j)});
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  std::vector<TokenSeq> sources_;
  std::vector<Pair> pairs_;
};

// For every chain and t = 1..T emits (z[:-(t+1)], z[-t]).
inline PrefixDataset prefix_expand(const CoTDataset& s) {
  s.validate();
  PrefixDataset out;
  for (const TokenSeq& z : s.chains) {
    std::size_t src = out.add_source(z);
    for (std::size_t t = 1; t <= s.steps; ++t) out.add_view(src, z.size() - t, z[z.size() - t]);
  }
  return out;
}

}  // namespace cotlearn
