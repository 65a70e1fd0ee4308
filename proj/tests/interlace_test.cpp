#include <gtest/gtest.h>

#include <map>
#include <numeric>

#include "rilab/interlace.hpp"
#include "rilab/stats.hpp"
#include "rilab/vacancy.hpp"

using namespace rilab;

namespace {

auto green() { return GreenTable<3>::shared(); }

const PotentialTable<3>& pair_table() {
    static PotentialTable<3> t(FiniteSet<3>{origin<3>(), unit<3>(0)}, green());
    return t;
}

const PotentialTable<3>& point_table() {
    static PotentialTable<3> t(FiniteSet<3>{origin<3>()}, green());
    return t;
}

// K = ball(0,1) in a 9^3 window
struct Setup {
    PotentialTable<3> k{ball<3>(origin<3>(), 1), green()};
    WindowSource<3> source{Box<3>(origin<3>(), 4), green()};
    WalkEngine<3> engine{Box<3>(origin<3>(), 4)};
    StructuredSampler<3> sampler{k, source, engine};
};

const Setup& setup() {
    static Setup s;
    return s;
}

} // namespace

TEST(SampleCount, MeanAndSmallIntensity) {
    Rng rng(1);
    auto cap = point_table().capacity();
    RunningStat rs;
    for (int i = 0; i < 100000; ++i) rs.add(double(sample_count(cap, 1.0, rng)));
    EXPECT_NEAR(rs.mean(), cap.mid(), 3 * rs.se());
    EXPECT_NEAR(rs.variance(), rs.mean(), 0.02);
    int zeros = 0;
    for (int i = 0; i < 1000; ++i) zeros += sample_count(cap, 1e-9, rng) == 0;
    EXPECT_EQ(zeros, 1000);
    EXPECT_THROW(sample_count(cap, 0.0, rng), ConfigError);
}

TEST(PairLaw, SingletonAndSymmetry) {
    Rng rng(2);
    PairLaw<3> one(point_table());
    for (int i = 0; i < 10; ++i) EXPECT_EQ(one.sample(rng), std::make_pair(origin<3>(), origin<3>()));
    PairLaw<3> two(pair_table());
    EXPECT_NEAR(two.normalization(), 1.0, 1e-3);
    EXPECT_NEAR(two.probability(0, 0), two.probability(1, 1), 1e-12);
    EXPECT_NEAR(two.probability(0, 1), two.probability(1, 0), 1e-12);
    // weight ratio of diagonal to off-diagonal is g(0)/g(e1)
    EXPECT_NEAR(two.probability(0, 0) / two.probability(0, 1),
                green()->at(origin<3>()).mid() / green()->at(unit<3>(0)).mid(), 1e-6);
}

TEST(PairLaw, EmpiricalTv) {
    Rng rng(3);
    PairLaw<3> law(pair_table());
    std::vector<std::uint64_t> counts(4, 0);
    for (int i = 0; i < 100000; ++i) ++counts[law.sample_index(rng)];
    auto tv = stats_tv_distance(counts, law.probabilities(), 4);
    EXPECT_LT(tv.value, 0.01);
}

TEST(ConditionedWalk, SingletonFirstStepIsUniform) {
    WalkEngine<3> engine(Box<3>(origin<3>(), 2));
    Box<3> rec(origin<3>(), 2);
    Rng rng(5);
    std::map<Site<3>, std::uint64_t> first;
    for (int i = 0; i < 30000; ++i) {
        auto f = sample_conditioned_walk<3>(origin<3>(), point_table(), engine, rec, rng, {}, FragmentRole::future);
        ASSERT_GE(f.path.size(), 2u);
        ++first[f.path[1]];
        for (std::size_t j = 1; j < f.path.size(); ++j) ASSERT_NE(f.path[j], origin<3>());
        EXPECT_TRUE(f.segments_adjacent());
    }
    std::vector<std::uint64_t> obs;
    for (auto& [s, c] : first) obs.push_back(c);
    ASSERT_EQ(obs.size(), 6u);
    EXPECT_GT(chi_square_test(obs, std::vector<double>(6, 1.0 / 6)).p, 1e-3);
}

TEST(ConditionedWalk, PairFirstStepLaw) {
    const auto& t = pair_table();
    WalkEngine<3> engine(Box<3>(origin<3>(), 2));
    Box<3> rec(origin<3>(), 2);
    Rng rng(6);
    const int n = 100000;
    std::map<Site<3>, std::uint64_t> first;
    for (int i = 0; i < n; ++i) {
        auto f = sample_conditioned_walk<3>(origin<3>(), t, engine, rec, rng, {}, FragmentRole::past);
        ++first[f.path[1]];
        for (std::size_t j = 1; j < f.path.size(); ++j) ASSERT_FALSE(t.set().contains(f.path[j]));
    }
    const double e0 = t.equilibrium(origin<3>()).mid();
    for (const auto& z : Lattice<3>::neighbors(origin<3>())) {
        if (t.set().contains(z)) {
            EXPECT_EQ(first[z], 0u);
            continue;
        }
        auto pr = proportion(first[z], n);
        EXPECT_NEAR(pr.value, t.escape(z).mid() / 6 / e0, 3 * pr.se + 1e-4) << to_string(z);
    }
    EXPECT_THROW(sample_conditioned_walk<3>({5, 0, 0}, t, engine, rec, rng, {}, FragmentRole::past), ConfigError);
    auto cube = Box<3>(origin<3>(), 1).to_set();
    PotentialTable<3> ct(cube, green());
    EXPECT_THROW(sample_conditioned_walk<3>(origin<3>(), ct, engine, rec, rng, {}, FragmentRole::past), ConfigError);
}

TEST(BridgeLength, LawValuesAndTolerance) {
    const auto& g = *green();
    // tail mass beyond N=100 is about 0.087, so this needs a loose tolerance
    BridgeLengthLaw<3> same(origin<3>(), origin<3>(), g, 100, 50, 0.1);
    EXPECT_NEAR(same.probability(0), 1 / g.at(origin<3>()).mid(), 1e-9);
    EXPECT_GT(same.tail().lo, 0.04);
    EXPECT_LT(same.tail().hi, 0.1);
    for (int n = 1; n < 100; n += 2) EXPECT_EQ(same.probability(n), 0.0);
    BridgeLengthLaw<3> next(origin<3>(), unit<3>(0), g, 101, 50, 0.2);
    EXPECT_NEAR(next.probability(1), (1.0 / 6) / g.at(unit<3>(0)).mid(), 1e-9);
    for (int n = 0; n < 100; n += 2) EXPECT_EQ(next.probability(n), 0.0);
    EXPECT_THROW(BridgeLengthLaw<3>(origin<3>(), origin<3>(), g, 100, 50), ToleranceError);
    Rng rng(7);
    std::vector<std::uint64_t> counts(4, 0);
    for (int i = 0; i < 20000; ++i) {
        int n = sample_bridge_length(same, rng);
        ASSERT_EQ(n % 2, 0);
        if (n <= 6) ++counts[n / 2];
    }
    auto pr = proportion(counts[0], 20000);
    EXPECT_NEAR(pr.value, same.probability(0), 3 * pr.se);
}

TEST(Bridge, ShortBridges) {
    HeatKernelTable<3> from0(origin<3>(), 4, 4);
    Rng rng(8);
    auto b0 = sample_bridge<3>(origin<3>(), origin<3>(), 0, from0, rng);
    EXPECT_EQ(b0.path, std::vector<Site<3>>{origin<3>()});
    std::map<Site<3>, std::uint64_t> mid2;
    for (int i = 0; i < 60000; ++i) {
        auto b = sample_bridge<3>(origin<3>(), origin<3>(), 2, from0, rng);
        ASSERT_EQ(b.path.size(), 3u);
        ++mid2[b.path[1]];
    }
    std::vector<std::uint64_t> obs;
    for (auto& [s, c] : mid2) obs.push_back(c);
    ASSERT_EQ(obs.size(), 6u);
    EXPECT_GT(chi_square_test(obs, std::vector<double>(6, 1.0 / 6)).p, 1e-3);
    EXPECT_THROW(sample_bridge<3>(origin<3>(), unit<3>(0), 2, from0, rng), ConfigError);
}

TEST(Bridge, MidpointLawOfLengthFour) {
    // P[X_2 = z] = p_2(0,z) p_2(z,0) / p_4(0,0), from exact counts
    HeatKernelTable<3> from0(origin<3>(), 4, 4);
    ExactHeatKernel<3> ex(origin<3>(), 4);
    Box<3> b(origin<3>(), 2);
    std::vector<double> p;
    std::vector<Site<3>> support;
    for (std::size_t i = 0; i < b.size(); ++i) {
        auto z = b.site(i);
        auto q = ex.p(2, z) * ex.p(2, z) / ex.p(4, origin<3>());
        if (q > 0) {
            support.push_back(z);
            p.push_back(q.convert_to<double>());
        }
    }
    std::vector<std::uint64_t> obs(support.size(), 0);
    Rng rng(9);
    for (int i = 0; i < 100000; ++i) {
        auto f = sample_bridge<3>(origin<3>(), origin<3>(), 4, from0, rng);
        ASSERT_EQ(f.path.back(), origin<3>());
        ASSERT_TRUE(f.segments_adjacent());
        auto it = std::find(support.begin(), support.end(), f.path[2]);
        ASSERT_NE(it, support.end());
        ++obs[std::size_t(it - support.begin())];
    }
    EXPECT_GT(chi_square_test(obs, p).p, 0.01);
}

TEST(LastVisit, TimedVisitsAreShortAndOnK) {
    FiniteSet<3> k{origin<3>(), unit<3>(0)};
    WalkEngine<3> engine(Box<3>({-1, 0, 0}, 1));
    Rng rng(10);
    int visited = 0;
    for (int i = 0; i < 5000; ++i) {
        auto lv = sample_last_visit<3>(k, {-2, 0, 0}, engine, rng);
        visited += lv.visited;
        if (lv.visited) {
            EXPECT_LT(lv.site, 2u);
            if (lv.timed) {
                EXPECT_EQ((lv.time + (lv.site == 0 ? 0 : 1)) % 2, 0u); // parity of the distance
            }
        }
    }
    // P[hit K] = Σ_y g(x,y) e_K(y)
    const auto& t = pair_table();
    double expect = 0;
    for (std::size_t i = 0; i < t.boundary().size(); ++i)
        expect += green()->at({-2, 0, 0}, t.boundary()[i]).mid() * t.equilibrium_values()[i].mid();
    auto pr = proportion(std::uint64_t(visited), 5000);
    EXPECT_NEAR(pr.value, expect, 3 * pr.se);
}

TEST(Trace, NestedLevelsAndHighIntensity) {
    WindowSource<3> src(Box<3>(origin<3>(), 8), green());
    WalkEngine<3> engine(src.window());
    Rng rng(11);
    auto f = sample_trace_levels(src, {0.5, 2.0, 20.0}, engine, rng);
    EXPECT_TRUE(f[0].subset_of(f[1]));
    EXPECT_TRUE(f[1].subset_of(f[2]));
    EXPECT_GT(double(f[2].count()) / double(f[2].size()), 0.99);
    EXPECT_TRUE(src.capacity().widened(1e-9).contains(src.mass()));
    EXPECT_LT(src.intensity_error(), 1e-3);
    EXPECT_THROW(sample_trace_levels(src, {2.0, 1.0}, engine, rng), ConfigError);
}

TEST(Structured, SmallIntensityIsEmpty) {
    Rng rng(12);
    auto s = setup().sampler.sample(1e-9, rng);
    EXPECT_EQ(s.n(), 0u);
    EXPECT_TRUE(s.background.empty());
    EXPECT_EQ(s.trace().count(), 0u);
}

TEST(Structured, FragmentInvariants) {
    const auto& st = setup();
    const auto& k = st.k.set();
    Rng rng(13);
    for (int rep = 0; rep < 300; ++rep) {
        auto s = st.sampler.sample(1.0, rng);
        ASSERT_EQ(s.bridges.size(), s.n());
        for (std::size_t i = 0; i < s.n(); ++i) {
            EXPECT_EQ(s.bridges[i].path.front(), s.pairs[i].first);
            EXPECT_EQ(s.bridges[i].path.back(), s.pairs[i].second);
            EXPECT_EQ(s.pasts[i].path.front(), s.pairs[i].first);
            EXPECT_EQ(s.futures[i].path.front(), s.pairs[i].second);
            EXPECT_TRUE(st.k.boundary().contains(s.pairs[i].first));
            for (const auto* f : {&s.pasts[i], &s.futures[i]})
                for (std::size_t j = 1; j < f->path.size(); ++j) ASSERT_FALSE(k.contains(f->path[j]));
            EXPECT_TRUE(s.bridges[i].segments_adjacent());
        }
        for (const auto& b : s.background)
            for (const auto& y : b.path) ASSERT_FALSE(k.contains(y));
        auto d = decompose(s); // throws on an identity violation
        EXPECT_TRUE(d.ikn.subset_of(s.trace()));
        for (const auto& b : d.bridges) {
            OccupancyField<3> bf(s.window);
            b.mark(bf);
            EXPECT_TRUE(bf.subset_of(s.trace()));
        }
    }
}

TEST(Structured, ConnectivityAndRerouting) {
    const auto& st = setup();
    WindowSource<3> big(Box<3>(origin<3>(), 10), green());
    WalkEngine<3> engine(big.window());
    StructuredSampler<3> sampler(st.k, big, engine);
    Rng rng(14);
    std::vector<int> ok(3, 0);
    const std::vector<int> radii{2, 5, 9};
    for (int rep = 0; rep < 60; ++rep) {
        auto s = sampler.sample(1.0, rng);
        auto d = decompose(s);
        bool prev = false;
        for (std::size_t r = 0; r < radii.size(); ++r) {
            Box<3> kp(origin<3>(), radii[r]);
            auto c = check_IKn_connectivity(d, kp);
            bool all = std::all_of(c.begin(), c.end(), [](bool b) { return b; });
            if (prev) {
                EXPECT_TRUE(all); // nested K' can only help
            }
            prev = all;
            ok[r] += all;
            if (all) {
                RerouteResult info;
                auto out = reroute_bridges(d, kp, &info);
                EXPECT_EQ(out, d.ikn);
                EXPECT_TRUE(vacant_components_nested(s.trace(), out));
                EXPECT_EQ(info.path_lengths.size(), s.n());
            } else {
                EXPECT_THROW(reroute_bridges(d, kp), ConfigError);
            }
        }
        if (s.n() == 0) {
            EXPECT_TRUE(d.ikn == s.trace());
        }
    }
    EXPECT_LE(ok[0], ok[1]);
    EXPECT_LE(ok[1], ok[2]);
    EXPECT_THROW(check_IKn_connectivity(decompose(sampler.sample(1.0, rng)), Box<3>(origin<3>(), 0)), ConfigError);
}

TEST(Structured, JsonDumpAndDeterminism) {
    const auto& st = setup();
    Rng a(15), b(15);
    auto s1 = st.sampler.sample(1.0, a), s2 = st.sampler.sample(1.0, b);
    EXPECT_EQ(s1.to_json().dump(), s2.to_json().dump());
    auto j = s1.to_json();
    EXPECT_EQ(j["n"], s1.n());
    EXPECT_EQ(j["bridges"].size(), s1.n());
    EXPECT_THROW(StructuredSampler<3>(st.k, WindowSource<3>(Box<3>(origin<3>(), 1), green()), st.engine), ConfigError);
}
