#include <gtest/gtest.h>

#include <random>
#include <set>

#include "cotlearn/cotlearn.hpp"

using namespace cotlearn;

namespace {

// Feasibility of {A y <= c, y >= 0} in two variables by vertex enumeration.
bool vertex_oracle(const std::vector<std::vector<Rational>>& a, const std::vector<Rational>& c) {
  std::vector<std::vector<Rational>> rows = a;
  std::vector<Rational> rhs = c;
  rows.push_back({-1, 0});
  rhs.push_back(0);
  rows.push_back({0, -1});
  rhs.push_back(0);
  auto feasible = [&](const Rational& y1, const Rational& y2) {
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (rows[i][0] * y1 + rows[i][1] * y2 > rhs[i]) return false;
    return true;
  };
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      Rational det = rows[i][0] * rows[j][1] - rows[i][1] * rows[j][0];
      if (det == 0) continue;
      Rational y1 = (rhs[i] * rows[j][1] - rows[i][1] * rhs[j]) / det;
      Rational y2 = (rows[i][0] * rhs[j] - rhs[i] * rows[j][0]) / det;
      if (feasible(y1, y2)) return true;
    }
  return false;
}

// Dichotomies of {0,1}^d from integer weights in [-3,3] and half-integer biases.
std::set<std::uint64_t> grid_thresholds(std::size_t d) {
  std::set<std::uint64_t> out;
  std::vector<int> w(d, -3);
  for (;;) {
    for (int b2 = -25; b2 <= 25; b2 += 2) {
      std::uint64_t mask = 0;
      for (std::size_t p = 0; p < (std::size_t{1} << d); ++p) {
        int s = b2;
        for (std::size_t j = 0; j < d; ++j) s += 2 * w[j] * static_cast<int>((p >> (d - 1 - j)) & 1U);
        if (s >= 0) mask |= std::uint64_t{1} << p;
      }
      out.insert(mask);
    }
    std::size_t j = 0;
    while (j < d && w[j] == 3) w[j++] = -3;
    if (j == d) break;
    ++w[j];
  }
  return out;
}

int eval_window(const LinearThreshold& f, const TokenSeq& x) {
  const std::size_t d = f.w.size();
  Rational s = f.b;
  for (std::size_t j = 0; j < std::min(d, x.size()); ++j) s += f.w[d - 1 - j] * static_cast<long>(x[x.size() - 1 - j]);
  return s >= 0;
}

}  // namespace

TEST(Simplex, AgreesWithVertexEnumeration) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> v(-4, 4);
  int feasible = 0;
  for (int k = 0; k < 400; ++k) {
    const int m = 1 + static_cast<int>(rng() % 5);
    std::vector<std::vector<Rational>> a(m, std::vector<Rational>(2));
    std::vector<Rational> c(m);
    for (int i = 0; i < m; ++i) {
      a[i][0] = v(rng);
      a[i][1] = v(rng);
      c[i] = v(rng);
    }
    const bool want = vertex_oracle(a, c);
    FeasibilitySimplex<> lp(a, c);
    auto got = lp.solve();
    ASSERT_EQ(got.has_value(), want) << "instance " << k;
    if (got) {
      ++feasible;
      for (int i = 0; i < m; ++i) EXPECT_LE(a[i][0] * (*got)[0] + a[i][1] * (*got)[1], c[i]);
      EXPECT_GE((*got)[0], 0);
      EXPECT_GE((*got)[1], 0);
    }
  }
  EXPECT_GT(feasible, 50);
  EXPECT_LT(feasible, 350);
}

TEST(Simplex, DegenerateAndEmptySystems) {
  // y1 <= 0 and -y1 <= 0 only admit y1 = 0.
  FeasibilitySimplex<> lp({{1, 0}, {-1, 0}}, {0, 0});
  auto y = lp.solve();
  ASSERT_TRUE(y);
  EXPECT_EQ((*y)[0], 0);
  FeasibilitySimplex<> none({}, {});
  EXPECT_TRUE(none.with_columns(3).solve());
  FeasibilitySimplex<> bad({{1, 1}, {-1, -1}}, {-1, -1});
  EXPECT_FALSE(bad.solve());
}

TEST(LinearThreshold, TruncatedWindowSemantics) {
  LinearThreshold f{{Rational(5), Rational(-1), Rational(2)}, Rational(-1)};
  EXPECT_EQ(f.score(TokenSeq{}), Rational(-1));
  EXPECT_EQ(f.score(TokenSeq{1}), Rational(1));       // pairs with w_3
  EXPECT_EQ(f.score(TokenSeq{1, 0}), Rational(-2));   // w_2 * 1 + w_3 * 0
  EXPECT_EQ(f.score(TokenSeq{0, 1, 1, 0}), Rational(3));
  EXPECT_EQ(f(TokenSeq{1}), 1u);
  EXPECT_THROW(f(TokenSeq{2}), InputError);
}

TEST(LinearThreshold, EnumerationMatchesWeightGrid) {
  const std::size_t expected[] = {0, 4, 14, 104, 1882};
  for (std::size_t d = 1; d <= 4; ++d) {
    auto got = enumerate_threshold_functions(d);
    std::set<std::uint64_t> g(got.begin(), got.end());
    EXPECT_EQ(g.size(), got.size());
    EXPECT_EQ(g, grid_thresholds(d)) << "d=" << d;
    EXPECT_EQ(got.size(), expected[d]);
    EXPECT_LE(static_cast<double>(got.size()), std::pow(2 * std::exp(1.0) * std::pow(2.0, double(d)), double(d + 1)));
  }
  EXPECT_THROW(enumerate_threshold_functions(5), InputError);
}

TEST(LinearThreshold, ComplementSymmetryForSmallD) {
  for (std::size_t d = 1; d <= 2; ++d) {
    auto fs = enumerate_threshold_functions(d);
    std::set<std::uint64_t> set(fs.begin(), fs.end());
    const std::size_t pts = std::size_t{1} << d;
    for (std::uint64_t m : fs) {
      std::uint64_t flipped = 0;
      for (std::size_t p = 0; p < pts; ++p)
        if (!((m >> (pts - 1 - p)) & 1U)) flipped |= std::uint64_t{1} << p;
      EXPECT_TRUE(set.count(flipped));
    }
  }
}

TEST(ConsLp, RandomRealizableDatasetsAreFitExactly) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> wd(-3, 3);
  for (int k = 0; k < 60; ++k) {
    const std::size_t d = 1 + rng() % 5, T = 1 + rng() % 6;
    LinearThreshold target{std::vector<Rational>(d), Rational(wd(rng)) + Rational(1, 2)};
    for (auto& w : target.w) w = wd(rng);
    CoTDataset s{{}, T};
    for (int i = 0; i < 8; ++i) {
      TokenSeq z(1 + rng() % 6);
      for (auto& b : z) b = rng() & 1U;
      for (std::size_t t = 0; t < T; ++t) z.push_back(static_cast<Token>(eval_window(target, z)));
      s.chains.push_back(z);
    }
    PrefixDataset p = prefix_expand(s);
    LinearThreshold h = cons_lp(p, d);
    for (std::size_t j = 0; j < p.size(); ++j) {
      TokenSeq u(p.input(j).begin(), p.input(j).end());
      ASSERT_EQ(eval_window(h, u), static_cast<int>(p.label(j)));
    }
  }
}

TEST(ConsLp, ParityAndConflictsAreNotRealizable) {
  PrefixDataset xor2;
  xor2.add({0, 0}, 0);
  xor2.add({0, 1}, 1);
  xor2.add({1, 0}, 1);
  xor2.add({1, 1}, 0);
  EXPECT_THROW(cons_lp(xor2, 2), NotRealizable);
  EXPECT_FALSE(try_cons_lp(xor2, 2));
  PrefixDataset clash;
  clash.add({1, 1}, 0);
  clash.add({1, 1, 1}, 1);  // same window for d=2, distinct for d=3
  EXPECT_THROW(cons_lp(clash, 2), NotRealizable);
  EXPECT_NO_THROW(cons_lp(clash, 3));
  // Short inputs see a truncated window, so {1,1} and {0,1,1} still collide at d=3.
  PrefixDataset trunc;
  trunc.add({1, 1}, 0);
  trunc.add({0, 1, 1}, 1);
  EXPECT_THROW(cons_lp(trunc, 3), NotRealizable);
}

TEST(ConsSparse, FindsLexicographicallyFirstSupport) {
  // Label = newest bit and the other positions carry no signal, so {2} is the
  // only size-1 support that works.
  PrefixDataset s;
  s.add({0, 0, 1}, 1);
  s.add({1, 1, 1}, 1);
  s.add({0, 0, 0}, 0);
  s.add({1, 1, 0}, 0);
  s.add({0, 1, 0}, 0);
  s.add({1, 0, 1}, 1);
  auto f = cons_sparse(s, 3, 1);
  ASSERT_EQ(f.support.size(), 1u);
  EXPECT_EQ(f.support[0], 2u);
  for (std::size_t j = 0; j < s.size(); ++j) EXPECT_EQ(f(s.input(j)), s.label(j));
  EXPECT_EQ(binomial(5, 2), 10u);
  EXPECT_THROW(cons_sparse(s, 40, 20), GuardExceeded);
}
