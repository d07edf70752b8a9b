#include "qhunt/rng.hpp"

#include <set>

#include <gtest/gtest.h>

namespace qhunt {

TEST(Rng, SameSeedSameStream) {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next(), b.next());
}

TEST(Rng, CountsEveryRawDraw) {
    Rng r(7);
    r.uniform01();
    r.uniform_closed();
    r.next();
    EXPECT_EQ(r.draws(), 3u);
}

TEST(Rng, RestoreContinuesTheStream) {
    Rng a(99);
    for (int i = 0; i < 137; ++i) a.below(3);
    Rng b = Rng::restore(99, a.draws());
    EXPECT_EQ(a, b);
    for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next(), b.next());
}

TEST(Rng, UniformRanges) {
    Rng r(1);
    for (int i = 0; i < 10000; ++i) {
        const double u = r.uniform01();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        const double c = r.uniform_closed();
        ASSERT_GE(c, 0.0);
        ASSERT_LE(c, 1.0);
    }
}

TEST(Rng, BelowCoversRange) {
    Rng r(5);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        const auto v = r.below(4);
        ASSERT_LT(v, 4u);
        seen.insert(v);
    }
    EXPECT_EQ(seen.size(), 4u);
    EXPECT_EQ(r.below(1), 0u);
}

TEST(Rng, DerivedStreamsDiffer) {
    EXPECT_NE(derive_seed(3, 0), derive_seed(3, 1));
    EXPECT_NE(derive_seed(3, 1), derive_seed(4, 1));
    EXPECT_EQ(derive_seed(3, 1), derive_seed(3, 1));
}

} // namespace qhunt
