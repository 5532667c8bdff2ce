#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "cotlearn/cotlearn.hpp"

using namespace cotlearn;

TEST(AverageHardAttention, UniformShortcutMatchesGenericPath) {
  std::mt19937_64 rng(41);
  for (int k = 0; k < 30; ++k) {
    const std::size_t n = 1 + rng() % 12;
    AttentionBatch b;
    for (std::size_t i = 0; i < n; ++i) {
      b.q.push_back({Rational(0), Rational(0)});
      b.k.push_back({Rational(0), Rational(0)});
      b.v.push_back({Rational(static_cast<long>(rng() % 7)) - 3, Rational(static_cast<long>(rng() % 3))});
    }
    ASSERT_TRUE(b.uniform());
    EXPECT_EQ(aha_uniform(b.v), aha_generic(b));
  }
}

TEST(AverageHardAttention, TiesAverageAndStrictMaxSelects) {
  AttentionBatch b;
  b.q = {{1}, {1}, {1}};
  b.k = {{2}, {2}, {5}};
  b.v = {{Rational(1)}, {Rational(4)}, {Rational(9)}};
  auto out = aha(b);
  EXPECT_EQ(out[0][0], Rational(1));
  EXPECT_EQ(out[1][0], Rational(5, 2));  // tie between positions 1 and 2
  EXPECT_EQ(out[2][0], Rational(9));
  EXPECT_EQ(aha_at(b, 1).argmax.size(), 2u);
  EXPECT_THROW(aha_at(b, 3), InputError);
}

TEST(AttentionTape, PositionsMatchRunningHeadSum) {
  std::mt19937_64 rng(42);
  TMSpec spec = random_tm_spec(3, 20, rng);
  TokenSeq z = cot(make_tm_generator(spec), pre({1, 0, 1}), 20);
  TapeView v = positions_via_attention(z);
  long head = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    EXPECT_EQ(v.pos[i], Rational(head));
    head += TMToken::decode(z[i]).move;
    EXPECT_EQ(v.npos[i], Rational(head));
    EXPECT_EQ(v.idx_inv[i], Rational(1, static_cast<long>(i + 1)));
  }
}

TEST(AttentionTape, BatchedReadEqualsPerPrefixReadAndDirectRead) {
  std::mt19937_64 rng(43);
  for (int k = 0; k < 40; ++k) {
    TMSpec spec = random_tm_spec(1 + static_cast<int>(rng() % 4), 1 + rng() % 20, rng);
    std::vector<int> w(rng() % 6);
    for (auto& b : w) b = static_cast<int>(rng() & 1U);
    TokenSeq z = cot(make_tm_generator(spec), pre(w), spec.steps);
    auto all = read_tape_attention_all(z);
    for (std::size_t j = 1; j <= z.size(); ++j) {
      TokenView p(z.data(), j);
      TapeRead a = read_tape_attention(p);
      TapeRead d = read_tape(p);
      ASSERT_EQ(a.read, d.read);
      ASSERT_EQ(a.state, d.state);
      ASSERT_EQ(all[j - 1].read, a.read);
    }
  }
}

TEST(AttentionTape, GeneratorWithAttentionReaderRunsTheMachine) {
  std::mt19937_64 rng(44);
  for (int k = 0; k < 30; ++k) {
    TMSpec spec = random_tm_spec(3, 15, rng);
    std::vector<int> w{1, 1, 0};
    EXPECT_EQ(post(TMToken::decode(e2e(make_attention_tm_generator(spec), pre(w), 15))), simulate_tm(spec, w).output);
  }
}

TEST(AttentionTape, RejectsHistoriesNotRootedInPre) {
  TokenSeq bad{TMToken{1, TapeSymbol::zero, 1}.encode()};
  EXPECT_THROW(read_tape_attention(bad), InputError);
  TokenSeq twice{TMToken{1, TapeSymbol::blank, 1}.encode(), TMToken{1, TapeSymbol::blank, 1}.encode()};
  EXPECT_THROW(read_tape_attention(twice), InputError);
}

TEST(AttentionTape, DumpHasOneRowPerToken) {
  TokenSeq z = pre({0, 1});
  std::ostringstream os;
  dump_attention_tsv(os, z);
  std::string text = os.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
  EXPECT_EQ(text.rfind("i\tmove\tpos", 0), 0u);
}
