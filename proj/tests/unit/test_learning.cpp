#include <gtest/gtest.h>

#include <random>

#include "cotlearn/cotlearn.hpp"

using namespace cotlearn;

TEST(Learning, CotLearnerReproducesTrainingChains) {
  LookupFamilyLearner fam(LookupFamily::e1(2, 3));
  auto f = lookup_member(fam.family, 0b101101);
  CoTDataset s{{}, 3};
  for (std::size_t i = 1; i <= 6; i += 2) s.chains.push_back(cot(f, fam.family->point(i), 3));
  auto h = cons_cot(s, [&](const PrefixDataset& p) { return fam.cons(p); });
  for (std::size_t i = 0; i < s.chains.size(); ++i) EXPECT_EQ(cot(h, s.prompt(i), 3), s.chains[i]);
}

TEST(Learning, E2ELearnerUsesSolverAndMatchesEnumeration) {
  LookupFamilyLearner fam(LookupFamily::e1(2, 2));
  auto f = lookup_member(fam.family, 0b0110);
  E2EDataset s{{}, 2};
  for (std::size_t i = 1; i <= 4; ++i) s.examples.push_back({fam.family->point(i), e2e(f, fam.family->point(i), 2)});
  auto h = cons_e2e(s, fam);
  EXPECT_EQ(h.index(), 0b0110u);
  // Brute-force reference: first index in order that fits.
  std::uint64_t first = 16;
  for (std::uint64_t i = 0; i < 16 && first == 16; ++i) {
    auto g = lookup_member(fam.family, i);
    bool ok = true;
    for (const auto& ex : s.examples) ok = ok && e2e(g, ex.input, 2) == ex.label;
    if (ok) first = i;
  }
  EXPECT_EQ(h.index(), first);
  EXPECT_THROW(cons_e2e(s, LinearThresholdFamily{2}), InputError);
}

TEST(Learning, ZeroOneError) {
  LinearThreshold one{{}, Rational(1)};
  E2EDataset eval{{{{0}, 1}, {{1}, 0}, {{1, 1}, 1}, {{0, 0}, 0}}, 1};
  EXPECT_EQ(zero_one_error(one, eval), Rational(1, 2));
  EXPECT_THROW(zero_one_error(one, E2EDataset{}), InputError);
  EXPECT_EQ(fraction(6, 4), Rational(3, 2));
  EXPECT_THROW(fraction(1, 0), InputError);
}

TEST(Distributions, BitStringSupportIsAProbabilityDistribution) {
  BitStrings d{0, 4, true};
  auto sup = d.support();
  ASSERT_TRUE(sup);
  EXPECT_EQ(sup->size(), 31u);
  Rational total = 0;
  for (const auto& [x, p] : *sup) total += p;
  EXPECT_EQ(total, 1);
  EXPECT_EQ((*sup)[0].first, pre({}));
  EXPECT_FALSE((BitStrings{0, 13, false}.support()));
}

TEST(Harness, TrialsAreDeterministicAndNestedInM) {
  LookupFamilyLearner fam(LookupFamily::e1(3, 2));
  auto f = lookup_member(fam.family, 0b110101);
  UniformPoints dist{fam.family->points()};
  for (Mode mode : {Mode::cot, Mode::e2e}) {
    auto a = pac_trial(fam, f, dist, 10, 2, mode, 0, 99);
    auto b = pac_trial(fam, f, dist, 10, 2, mode, 0, 99);
    EXPECT_EQ(a.error, b.error);
    EXPECT_TRUE(a.exact);
    EXPECT_GE(a.error, 0);
    EXPECT_LE(a.error, 1);
    auto m = samples_to_zero_error(fam, f, dist, 2, mode, 500, 0, 99);
    ASSERT_TRUE(m);
    EXPECT_EQ(pac_trial(fam, f, dist, *m, 2, mode, 0, 99).error, 0);
  }
  EXPECT_EQ(pac_trial(fam, f, dist, 0, 2, Mode::cot, 0, 1).error,
            Rational(2, 3));  // the all-zero member errs on the four 1-bits
}

TEST(Harness, TuringFamilyLearnsUnderCoverage) {
  std::mt19937_64 rng(71);
  TMFamily fam{2};
  TMGenerator f = make_tm_generator(random_tm_spec(2, 8, rng));
  BitStrings dist{0, 5, true};
  auto r = pac_trial(fam, f, dist, 200, 8, Mode::cot, 0, 5);
  EXPECT_EQ(r.error, 0);
  EXPECT_THROW(pac_trial(fam, f, dist, 5, 8, Mode::e2e, 0, 5), InputError);
}

TEST(Seeds, DerivedSeedsDiffer) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}

TEST(Learning, EmptyDatasetsReturnTheFirstMember) {
  LookupFamilyLearner fam(LookupFamily::ldim(3));
  auto h = cons_cot(CoTDataset{{}, 2}, [&](const PrefixDataset& p) { return fam.cons(p); });
  EXPECT_EQ(h.index(), 0u);
  EXPECT_EQ(cons_e2e(E2EDataset{{}, 2}, fam).index(), 0u);
}
