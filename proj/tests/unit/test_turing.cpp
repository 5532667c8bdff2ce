#include <gtest/gtest.h>

#include <random>

#include "cotlearn/cotlearn.hpp"

using namespace cotlearn;

namespace {

TMSpec constant_writer(int bit) {
  TMSpec s{1, 2, {}};
  for (int r = 0; r < 3; ++r) s.table.push_back({1, static_cast<TapeSymbol>(bit), +1});
  return s;
}

std::vector<int> random_bits(std::mt19937_64& rng, std::size_t max_len) {
  std::vector<int> w(rng() % (max_len + 1));
  for (auto& b : w) b = static_cast<int>(rng() & 1U);
  return w;
}

}  // namespace

TEST(TMTokens, EncodeDecodeRoundTrip) {
  for (int s = 1; s <= 4; ++s)
    for (int a = 0; a < 3; ++a)
      for (int b = -1; b <= 1; ++b) {
        TMToken t{s, static_cast<TapeSymbol>(a), b};
        TMToken u = TMToken::decode(t.encode());
        EXPECT_EQ(u.state, s);
        EXPECT_EQ(u.symb, t.symb);
        EXPECT_EQ(u.move, b);
        EXPECT_LT(t.encode(), 9u * 4);
      }
  auto alpha = tm_alphabet(2);
  EXPECT_EQ(alpha->size(), 18u);
  EXPECT_EQ(alpha->index_of("2:⊔:-1"), alpha->index_of("2:_:-1"));
}

TEST(TMGeneration, OneStateWriterMatchesDocumentedChain) {
  TMSpec s = constant_writer(1);
  auto alpha = tm_alphabet(1);
  TokenSeq z = cot(make_tm_generator(s), pre({0}), 2);
  EXPECT_EQ(format_sequence(z, *alpha), "1:_:+1,1:0:+1,1:1:+1,1:1:+1");
  EXPECT_EQ(simulate_tm(s, {0, 1, 1}).output, 1);
}

TEST(TMGeneration, AutoregressiveRunMatchesSimulatorTrace) {
  std::mt19937_64 rng(31);
  for (int k = 0; k < 150; ++k) {
    const int S = 1 + static_cast<int>(rng() % 4);
    const std::size_t T = 1 + rng() % 20;
    TMSpec spec = random_tm_spec(S, T, rng);
    auto w = random_bits(rng, 6);
    TMRun run = simulate_tm(spec, w);
    TokenSeq x = pre(w);
    TokenSeq z = cot(make_tm_generator(spec), x, T);
    ASSERT_EQ(run.trace.steps.size(), T);
    for (std::size_t t = 0; t < T; ++t) {
      const TMStep& st = run.trace.steps[t];
      EXPECT_EQ(z[x.size() + t], (TMToken{st.state, st.write, st.move}.encode()));
    }
    EXPECT_EQ(post(TMToken::decode(z.back())), run.output);
  }
}

TEST(ReadTape, ReverseScanAgreesWithIndexedReplay) {
  std::mt19937_64 rng(32);
  for (int k = 0; k < 100; ++k) {
    TMSpec spec = random_tm_spec(3, 25, rng);
    TokenSeq z = cot(make_tm_generator(spec), pre(random_bits(rng, 5)), 25);
    for (std::size_t j = 1; j <= z.size(); ++j) {
      TokenView p(z.data(), j);
      std::size_t visits = 0;
      TapeRead a = read_tape(p, &visits);
      TapeRead b = read_tape_indexed(p);
      ASSERT_EQ(a.state, b.state);
      ASSERT_EQ(a.read, b.read);
      EXPECT_LE(visits, 2 * j);
    }
  }
}

TEST(ReadTape, FirstStepReadsBlankAfterInput) {
  TokenSeq x = pre({1, 0});
  EXPECT_EQ(read_tape(x).read, TapeSymbol::blank);
  EXPECT_EQ(read_tape(x).state, 1);
  EXPECT_THROW(pre({2}), InputError);
}

TEST(ConsTm, RecoversTransitionsSeenInTraining) {
  std::mt19937_64 rng(33);
  TMSpec spec = random_tm_spec(2, 15, rng);
  TMGenerator f = make_tm_generator(spec);
  CoTDataset s{{}, 15};
  for (int i = 0; i < 30; ++i) s.chains.push_back(cot(f, pre(random_bits(rng, 5)), 15));
  PrefixDataset p = prefix_expand(s);
  TMSpec h = cons_tm(p, 2, 15);
  for (std::size_t j = 0; j < p.size(); ++j) {
    TapeRead r = read_tape(p.input(j));
    EXPECT_EQ(h.rule(r.state, r.read).encode(), p.label(j));
    EXPECT_EQ(spec.rule(r.state, r.read).encode(), p.label(j));
  }
}

TEST(ConsTm, ConflictingLabelsAreNotRealizable) {
  PrefixDataset p;
  TokenSeq x = pre({});
  p.add(x, TMToken{1, TapeSymbol::one, 0}.encode());
  p.add(x, TMToken{1, TapeSymbol::zero, 0}.encode());
  EXPECT_THROW(cons_tm(p, 1), NotRealizable);
  PrefixDataset blank;
  blank.add(x, TMToken{1, TapeSymbol::blank, 0}.encode());
  EXPECT_THROW(cons_tm(blank, 1), NotRealizable);
}

TEST(TMSpecValidation, RejectsBadTables) {
  TMSpec s = constant_writer(0);
  s.table[0].state = 2;
  EXPECT_THROW(s.validate(), InputError);
  TMSpec w = constant_writer(0);
  w.table[1].symb = TapeSymbol::blank;
  EXPECT_THROW(w.validate(), InputError);
}
