#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "rilab/lattice.hpp"
#include "rilab/rng.hpp"

using namespace rilab;

namespace {

// brute-force L1 ball by scanning the enclosing cube
template <int D>
std::set<Site<D>> scan_ball(const Site<D>& x, int t) {
    std::set<Site<D>> out;
    Site<D> y;
    std::function<void(int)> rec = [&](int a) {
        if (a == D) {
            if (l1_distance<D>(x, y) <= t) out.insert(y);
            return;
        }
        for (int v = x[a] - t; v <= x[a] + t; ++v) {
            y[a] = v;
            rec(a + 1);
        }
    };
    rec(0);
    return out;
}

} // namespace

TEST(Neighbors, DegreeAndOrder) {
    auto nb = Lattice<3>::neighbors(origin<3>());
    ASSERT_EQ(nb.size(), 6u);
    EXPECT_EQ(nb[0], (Site<3>{-1, 0, 0}));
    EXPECT_EQ(nb[1], (Site<3>{1, 0, 0}));
    EXPECT_EQ(nb[5], (Site<3>{0, 0, 1}));
    EXPECT_EQ(Lattice<4>::neighbors(origin<4>()).size(), 8u);
    auto e1 = Lattice<3>::neighbors({1, 0, 0});
    EXPECT_NE(std::find(e1.begin(), e1.end(), origin<3>()), e1.end());
}

TEST(Neighbors, AdjacencyIsSymmetric) {
    Rng rng(1);
    for (int k = 0; k < 200; ++k) {
        Site<3> x{int(rng.below(21)) - 10, int(rng.below(21)) - 10, int(rng.below(21)) - 10};
        for (const auto& y : Lattice<3>::neighbors(x)) {
            auto back = Lattice<3>::neighbors(y);
            EXPECT_NE(std::find(back.begin(), back.end(), x), back.end());
        }
    }
}

TEST(Ball, SmallRadii) {
    EXPECT_EQ(ball<3>(origin<3>(), 0).size(), 1u);
    EXPECT_EQ(ball<3>(origin<3>(), 1).size(), 7u);
    auto b2 = ball<3>(origin<3>(), 2);
    auto oracle = scan_ball<3>(origin<3>(), 2);
    EXPECT_EQ(b2.size(), oracle.size());
    EXPECT_EQ(b2.size(), 25u);
    for (const auto& x : b2) EXPECT_TRUE(oracle.count(x));
    EXPECT_THROW(ball<3>(origin<3>(), -1), ConfigError);
}

TEST(Ball, SizeIsTranslationInvariantAndMatchesCount) {
    Rng rng(2);
    for (int t = 0; t <= 5; ++t) {
        const auto expect = scan_ball<3>(origin<3>(), t).size();
        EXPECT_EQ(ball_size<3>(t), expect);
        for (int k = 0; k < 10; ++k) {
            Site<3> c{int(rng.below(101)) - 50, int(rng.below(101)) - 50, int(rng.below(101)) - 50};
            EXPECT_EQ(ball<3>(c, t).size(), expect);
        }
    }
    EXPECT_EQ(ball_size<4>(3), scan_ball<4>(origin<4>(), 3).size());
    EXPECT_EQ(ball_size<5>(2), scan_ball<5>(origin<5>(), 2).size());
}

TEST(InnerBoundary, Examples) {
    FiniteSet<3> single{origin<3>()};
    EXPECT_EQ(inner_boundary(single), single);
    FiniteSet<3> cube = Box<3>({0, 0, 0}, 2).to_set(); // side 5
    EXPECT_EQ(inner_boundary(cube).size(), 125u - 27u);
    std::vector<Site<3>> side4;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c) side4.push_back({a, b, c});
    FiniteSet<3> box4(side4);
    EXPECT_EQ(inner_boundary(box4).size(), 56u);
    // the centre's six neighbours all lie in the ball, so only the centre is interior
    auto b1 = ball<3>(origin<3>(), 1);
    EXPECT_EQ(inner_boundary(b1).size(), 6u);
    EXPECT_FALSE(inner_boundary(b1).contains(origin<3>()));
}

TEST(Isoperimetry, BoxRatios) {
    EXPECT_EQ(isoperimetric_ratio(FiniteSet<3>{origin<3>()}).exact, Rational(1, 1));
    EXPECT_THROW(isoperimetric_ratio(FiniteSet<3>{}), ConfigError);
    double prev = 2;
    for (int L : {4, 8, 16, 32}) {
        std::vector<Site<3>> v;
        for (int a = 0; a < L; ++a)
            for (int b = 0; b < L; ++b)
                for (int c = 0; c < L; ++c) v.push_back({a, b, c});
        auto r = isoperimetric_ratio(FiniteSet<3>(v));
        std::int64_t l3 = std::int64_t(L) * L * L, in = std::int64_t(L - 2) * (L - 2) * (L - 2);
        EXPECT_EQ(r.exact, Rational(l3 - in, l3));
        EXPECT_LT(r.approx(), prev);
        prev = r.approx();
    }
    EXPECT_EQ(Rational(56, 64), Rational(7, 8));
}

TEST(Translate, Equivariance) {
    auto a = ball<3>(origin<3>(), 2);
    EXPECT_EQ(translate<3>(a, origin<3>()), a);
    Site<3> v{3, -7, 11};
    auto ta = translate<3>(a, v);
    EXPECT_EQ(ta.size(), a.size());
    EXPECT_EQ(inner_boundary(ta), translate<3>(inner_boundary(a), v));
    EXPECT_EQ(internal_edge_count(ta), internal_edge_count(a));
}

TEST(FiniteSet, DedupAndOrder) {
    FiniteSet<3> a{{1, 0, 0}, {0, 0, 0}, {1, 0, 0}};
    EXPECT_EQ(a.size(), 2u);
    EXPECT_EQ(a[0], origin<3>());
    EXPECT_TRUE(a.contains({1, 0, 0}));
    EXPECT_FALSE(a.contains({2, 0, 0}));
}

TEST(FiniteSet, TextRoundTrip) {
    auto a = ball<3>({1, 2, 3}, 2);
    std::stringstream ss;
    write_finite_set(ss, a);
    EXPECT_EQ(read_finite_set<3>(ss), a);
    std::stringstream bad("dim=4\n0 0 0 0\n");
    EXPECT_THROW(read_finite_set<3>(bad), ConfigError);
}

TEST(Box, IndexRoundTrip) {
    Box<3> b({2, -1, 5}, 3);
    EXPECT_EQ(b.size(), 343u);
    for (std::size_t i = 0; i < b.size(); ++i) EXPECT_EQ(b.index(b.site(i)), i);
    EXPECT_EQ(b.to_set().size(), b.size());
    EXPECT_TRUE(b.on_boundary({5, -1, 5}));
    EXPECT_FALSE(b.on_boundary({4, -1, 5}));
}

TEST(Lattice, RejectsLowDimension) {
    EXPECT_THROW(check_dimension(2), ConfigError);
    EXPECT_NO_THROW(check_dimension(3));
}
