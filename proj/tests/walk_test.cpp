#include <gtest/gtest.h>

#include <numeric>

#include "rilab/heat_kernel.hpp"
#include "rilab/stats.hpp"
#include "rilab/walk.hpp"

using namespace rilab;

namespace {

// exit law of the cube of radius s from its centre, by iterating the mass
template <int D>
std::vector<double> exit_law_by_iteration(int s, const Box<D>& b) {
    std::vector<double> cur(b.size(), 0.0), nxt(b.size()), out(b.size(), 0.0);
    cur[b.index(origin<D>())] = 1;
    for (int it = 0; it < 4000 * (s + 1); ++it) {
        std::fill(nxt.begin(), nxt.end(), 0.0);
        for (std::size_t i = 0; i < b.size(); ++i) {
            if (cur[i] == 0) continue;
            for (const auto& y : Lattice<D>::neighbors(b.site(i))) {
                auto j = b.index(y);
                (b.on_boundary(y) ? out[j] : nxt[j]) += cur[i] / (2 * D);
            }
        }
        cur.swap(nxt);
    }
    return out;
}

double watson() { return 1.5163860591519780; }

} // namespace

TEST(CubeExit, MatchesIteratedMass) {
    for (int s : {1, 2, 3, 5}) {
        CubeExitLaw<3> law(s);
        Box<3> b(origin<3>(), s + 1);
        auto ref = exit_law_by_iteration<3>(s, b);
        double total = 0;
        for (std::size_t i = 0; i < b.size(); ++i) {
            if (!b.on_boundary(b.site(i))) continue;
            EXPECT_NEAR(law.probability(b.site(i)), ref[i], 1e-13);
            total += law.probability(b.site(i));
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
        EXPECT_LT(law.mass_defect(), 1e-12);
    }
    CubeExitLaw<4> law4(2);
    Box<4> b4(origin<4>(), 3);
    auto ref4 = exit_law_by_iteration<4>(2, b4);
    for (std::size_t i = 0; i < b4.size(); ++i) {
        if (b4.on_boundary(b4.site(i))) {
            EXPECT_NEAR(law4.probability(b4.site(i)), ref4[i], 1e-13);
        }
    }
}

TEST(CubeExit, SamplerMatchesLaw) {
    CubeExitLaw<3> law(2);
    Box<3> b(origin<3>(), 3);
    std::vector<std::uint64_t> counts(b.size(), 0);
    Rng rng(8);
    for (int i = 0; i < 200000; ++i) {
        auto y = law.sample(rng);
        ASSERT_TRUE(b.on_boundary(y));
        ++counts[b.index(y)];
    }
    std::vector<std::uint64_t> obs;
    std::vector<double> p;
    for (std::size_t i = 0; i < b.size(); ++i)
        if (b.on_boundary(b.site(i))) {
            obs.push_back(counts[i]);
            p.push_back(law.probability(b.site(i)));
        }
    EXPECT_GT(chi_square_test(obs, p).p, 1e-3);
}

TEST(CubeExit, LawTableLevels) {
    CubeExitLaws<3> laws(16);
    EXPECT_EQ(laws.max_radius(), 16);
    EXPECT_EQ(laws.at_most(0), nullptr);
    EXPECT_EQ(laws.at_most(5)->radius(), 4);
    EXPECT_EQ(laws.at_most(7)->radius(), 6);
    EXPECT_EQ(laws.at_most(100)->radius(), 16);
}

TEST(WalkEngine, VisitCountMatchesGreenAtOrigin) {
    WalkEngine<3> engine(Box<3>(origin<3>(), 0));
    Rng rng(31);
    RunningStat visits;
    std::uint64_t jumped = 0;
    for (int rep = 0; rep < 100000; ++rep) {
        int v = 0;
        WalkStats st;
        auto end = engine.run(
            origin<3>(), SimpleWalk<3>{},
            [&](const Site<3>& y, bool) {
                v += y == origin<3>(); // a jump may land on the region itself
                return true;
            },
            rng, {}, &st);
        EXPECT_EQ(end, WalkEnd::escaped);
        jumped += st.jumped();
        visits.add(v);
    }
    EXPECT_NEAR(visits.mean(), watson(), 3 * visits.se());
    EXPECT_GT(jumped, 50000u);
}

TEST(WalkEngine, EscapeFromNeighbourMatchesIdentity) {
    // P_{e1}[never hit 0] = 1 / g(0)
    WalkEngine<3> engine(Box<3>(origin<3>(), 1));
    Rng rng(32);
    std::uint64_t esc = 0;
    const int n = 100000;
    for (int rep = 0; rep < n; ++rep) {
        bool hit = false;
        engine.run(
            unit<3>(0), SimpleWalk<3>{},
            [&](const Site<3>& y, bool) {
                hit = y == origin<3>();
                return !hit;
            },
            rng);
        esc += !hit;
    }
    auto pr = proportion(esc, n);
    EXPECT_NEAR(pr.value, 1 / watson(), 3 * pr.se);
}

TEST(WalkEngine, LimitsAndConfig) {
    EXPECT_THROW(WalkEngine<3>(Box<3>(origin<3>(), 0), {4, 0, 0}), ConfigError);
    WalkEngine<3> engine(Box<3>(origin<3>(), 2));
    Rng rng(3);
    WalkStats st;
    auto end = engine.run(origin<3>(), SimpleWalk<3>{}, [](const Site<3>&, bool) { return true; }, rng, {5, 0}, &st);
    EXPECT_EQ(end, WalkEnd::clipped);
    EXPECT_EQ(st.steps, 5u);
    int seen = 0;
    end = engine.run(origin<3>(), SimpleWalk<3>{}, [&](const Site<3>&, bool) { return ++seen < 3; }, rng);
    EXPECT_EQ(end, WalkEnd::visitor);
    EXPECT_EQ(seen, 3);
    EXPECT_GE(engine.far_radius(), 8.0 * engine.config().max_cube);
}

TEST(GreenTiltedWalk, LengthLawAndEndpoints) {
    // killed walk from x to x' has length law p_n(x, x') / g(x, x')
    auto green = GreenTable<3>::shared();
    const Site<3> x = origin<3>(), xp = unit<3>(0);
    WalkEngine<3> engine(Box<3>(origin<3>(), 1));
    GreenTiltedWalk<3> policy(xp, *green);
    const int n_max = 14; // no jump can happen before step 16
    HeatKernelTable<3> h(x, n_max, n_max);
    const double g = green->at(x, xp).mid();
    std::vector<double> p(n_max + 1);
    for (int n = 0; n <= n_max; ++n) p[n] = h(n, xp) / g;
    std::vector<std::uint64_t> counts(n_max + 1, 0);
    Rng rng(41);
    const int reps = 100000;
    for (int r = 0; r < reps; ++r) {
        Site<3> last = x;
        WalkStats st;
        auto end = engine.run(x, policy, [&](const Site<3>& y, bool) { last = y; return true; }, rng, {}, &st);
        ASSERT_EQ(end, WalkEnd::killed);
        ASSERT_EQ(last, xp);
        if (!st.jumped()) {
            ASSERT_EQ(st.steps % 2, 1u); // parity of |x - x'|_1
            if (st.steps <= std::uint64_t(n_max)) ++counts[st.steps];
        }
    }
    // tail bin: longer bridges, including every walk that jumped
    std::uint64_t shown = std::accumulate(counts.begin(), counts.end(), std::uint64_t(0));
    counts.push_back(std::uint64_t(reps) - shown);
    p.push_back(1.0 - std::accumulate(p.begin(), p.end(), 0.0));
    auto r = chi_square_test(counts, p);
    EXPECT_GT(r.p, 0.01) << "chi2=" << r.chi2 << " dof=" << r.dof;
}
