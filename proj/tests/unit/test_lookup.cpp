#include <gtest/gtest.h>

#include <random>

#include "cotlearn/cotlearn.hpp"

using namespace cotlearn;

TEST(LookupFamily, ParseAndShapes) {
  auto e1 = LookupFamily::parse("e1:D=2,T=4");
  EXPECT_EQ(e1.point_count(), 8u);
  EXPECT_EQ(e1.bits(), 8u);
  EXPECT_EQ(e1.name(), "e1:D=2,T=4");
  EXPECT_EQ(LookupFamily::parse("ldim:D=3").D(), 3u);
  EXPECT_EQ(LookupFamily::parse("collapse:D=4").bits(), 4u);
  EXPECT_THROW(LookupFamily::parse("e1:D=2"), InputError);
  EXPECT_THROW(LookupFamily::parse("bogus:D=2"), InputError);
  EXPECT_THROW(LookupFamily::e1(8, 8), GuardExceeded);
}

TEST(LookupFamily, MemberIndexRoundTrip) {
  auto f = std::make_shared<const LookupFamily>(LookupFamily::e1(2, 2));
  for (std::uint64_t i = 0; i < 16; ++i) EXPECT_EQ(lookup_member(f, i).index(), i);
  EXPECT_EQ(lookup_member(f, 8).bit_string(), "1000");
}

TEST(LookupFamily, E2EOutputIsTheIndexedBit) {
  auto f = std::make_shared<const LookupFamily>(LookupFamily::e1(3, 3));
  std::mt19937_64 rng(61);
  for (int k = 0; k < 20; ++k) {
    LookupMember g{f, std::vector<std::uint8_t>(9)};
    for (auto& b : g.b) b = rng() & 1U;
    for (std::size_t i = 1; i <= 9; ++i) EXPECT_EQ(e2e(g, f->point(i), 3), g.b[i - 1]);
  }
}

TEST(LookupSolver, LazySearchMatchesBruteForce) {
  std::mt19937_64 rng(62);
  const std::vector<LookupFamily> fams{LookupFamily::e1(2, 2), LookupFamily::e1(2, 3), LookupFamily::ldim(3),
                                       LookupFamily::collapse(4)};
  for (const auto& f : fams) {
    auto pool = default_pool(f);
    for (int k = 0; k < 60; ++k) {
      std::vector<LookupConstraint> cs;
      const std::size_t n = 1 + rng() % 5;
      for (std::size_t i = 0; i < n; ++i) {
        cs.push_back({pool[rng() % pool.size()], rng() % 3, static_cast<int>(rng() & 1U)});
      }
      auto fast = solve_lookup(f, cs);
      auto slow = brute_force_lookup(f, cs);
      ASSERT_EQ(fast.has_value(), slow.has_value()) << f.name();
      if (fast) {
        EXPECT_EQ(*fast, *slow);
      }
    }
  }
}

TEST(VcDimension, DocumentedValues) {
  auto vc = [](const std::string& spec, std::size_t steps) {
    LookupFamilyLearner fam(LookupFamily::parse(spec));
    return vcdim_bruteforce(fam, default_pool(*fam.family), steps);
  };
  EXPECT_EQ(vc("e1:D=2,T=2", 2), 4u);
  EXPECT_EQ(vc("e1:D=2,T=2", 0), 2u);
  EXPECT_EQ(vc("collapse:D=3", 2), 0u);
  EXPECT_EQ(vc("collapse:D=3", 0), 3u);
  EXPECT_EQ(vc("ldim:D=3", 0), 1u);
  EXPECT_EQ(vc("ldim:D=2", 3), 2u);
}

TEST(VcDimension, ExplicitFamilyOracle) {
  // Constant-0 and constant-1 generators shatter exactly one point.
  struct Const {
    Token v;
    std::size_t alphabet_size() const { return 2; }
    Token operator()(TokenView) const { return v; }
  };
  ExplicitFamily<Const> fam{{{0}, {1}}};
  std::vector<TokenSeq> pts{{0}, {1}, {1, 1}};
  EXPECT_EQ(vcdim_bruteforce(fam, pts), 1u);
  EXPECT_EQ(growth_count(fam, pts), 2u);
  EXPECT_THROW(vcdim_bruteforce(fam, std::vector<TokenSeq>(21, TokenSeq{0})), GuardExceeded);
}

TEST(GrowthFunction, CotLossBehavioursBoundedByPrefixBehaviours) {
  LookupFamilyLearner fam(LookupFamily::e1(2, 2));
  std::mt19937_64 rng(63);
  UniformPoints dist{fam.family->points()};
  for (int k = 0; k < 10; ++k) {
    auto f = lookup_member(fam.family, rng() % 16);
    CoTDataset s{{}, 2};
    for (int i = 0; i < 3; ++i) s.chains.push_back(cot(f, dist.sample(rng), 2));
    PrefixDataset p = prefix_expand(s);
    std::vector<TokenSeq> pts;
    for (std::size_t j = 0; j < p.size(); ++j) pts.emplace_back(p.input(j).begin(), p.input(j).end());
    EXPECT_LE(cot_loss_behaviours(fam, s), growth_count(fam, pts));
  }
}
