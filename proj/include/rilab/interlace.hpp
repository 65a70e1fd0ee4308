#pragma once
//
// Samplers for the interlacement restricted to a finite window W:
//
//  * trace: Poisson(u cap W) forward walks from the normalized equilibrium
//    measure of W. The time-reversed pasts of these trajectories avoid W, so
//    the forward walks alone make up the trace on W.
//  * structured: the K-hitting trajectories, each split at its first entrance
//    X and last exit X' into a past (conditioned to avoid K, from X), a bridge
//    from X to X' and a future (conditioned to avoid K, from X'), plus the
//    W-hitting trajectories that miss K. A W-trajectory is K-hitting iff its
//    forward part hits K, because its backward part avoids W ⊇ K.
//

#include <nlohmann/json.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rilab/equilibrium.hpp"
#include "rilab/error.hpp"
#include "rilab/green.hpp"
#include "rilab/heat_kernel.hpp"
#include "rilab/interval.hpp"
#include "rilab/lattice.hpp"
#include "rilab/occupancy.hpp"
#include "rilab/potential.hpp"
#include "rilab/rng.hpp"
#include "rilab/sampling.hpp"
#include "rilab/walk.hpp"

namespace rilab {

/// Number of trajectories hitting a set of capacity `cap` at level u.
inline std::uint64_t sample_count(const Interval& cap, double u, Rng& rng) {
    if (!(u > 0)) throw ConfigError("intensity u must be > 0");
    if (!(cap.lo >= 0) || !cap.valid()) throw ConfigError("capacity interval must be nonnegative");
    return sample_poisson(u * cap.mid(), rng);
}

enum class FragmentRole { past, bridge, future, background };

inline const char* to_string(FragmentRole r) {
    switch (r) {
    case FragmentRole::past: return "past";
    case FragmentRole::bridge: return "bridge";
    case FragmentRole::future: return "future";
    case FragmentRole::background: return "background";
    }
    return "?";
}

/// The part of a walk that lies in a recording box. `breaks` lists the path
/// indices where the walk re-enters the box (or lands after a jump), so that
/// consecutive sites within a segment are adjacent.
template <int D>
struct TrajectoryFragment {
    FragmentRole role = FragmentRole::background;
    std::vector<Site<D>> path;
    std::vector<std::uint32_t> breaks;
    bool clipped = false;
    WalkEnd end = WalkEnd::escaped;
    WalkStats stats;

    void mark(OccupancyField<D>& f) const {
        for (const auto& x : path) f.set(x);
    }

    bool segments_adjacent() const {
        std::size_t b = 0;
        for (std::size_t i = 1; i < path.size(); ++i) {
            if (b < breaks.size() && breaks[b] == i) {
                ++b;
                continue;
            }
            if (l1_distance<D>(path[i - 1], path[i]) != 1) return false;
        }
        return true;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["role"] = to_string(role);
        j["path"] = nlohmann::ordered_json::array();
        for (const auto& x : path) j["path"].push_back(std::vector<int>(x.begin(), x.end()));
        j["breaks"] = breaks;
        j["clipped"] = clipped;
        j["end"] = to_string(end);
        return j;
    }
};

namespace detail {

/// Visitor appending in-box sites to a fragment.
template <int D>
struct FragmentRecorder {
    const Box<D>* box;
    TrajectoryFragment<D>* frag;
    bool in_run = false;

    bool operator()(const Site<D>& y, bool exact) {
        if (box->contains(y)) {
            if ((!in_run || !exact) && !frag->path.empty()) frag->breaks.push_back(std::uint32_t(frag->path.size()));
            frag->path.push_back(y);
            in_run = true;
        } else {
            in_run = false;
        }
        return true;
    }
};

} // namespace detail

/// Doob transform by the escape probability h_K: from y the walk moves to a
/// neighbour z with probability ∝ h_K(z). Started on ∂K this is the walk
/// conditioned never to return to K.
template <int D>
class EscapeTiltedWalk {
public:
    static constexpr bool tilted = true;
    static constexpr bool tilt_bounded_everywhere = true;

    explicit EscapeTiltedWalk(const PotentialTable<D>& table) : table_(&table) {}

    std::optional<Site<D>> step(const Site<D>& y, Rng& rng) const {
        auto nb = Lattice<D>::neighbors(y);
        std::array<double, 2 * D> w;
        for (int i = 0; i < 2 * D; ++i) w[i] = table_->escape_mid(nb[i]);
        return nb[sample_categorical(w.data(), w.size(), rng)];
    }

    double tilt(const Site<D>& e) const { return table_->escape_mid(e); }
    double tilt_bound(double) const { return 1.0; }
    // the h-tilt of the far return is below the flip's own error and is not applied
    double far_return(double r, double a) const { return std::pow(a / r, D - 2); }

private:
    const PotentialTable<D>* table_;
};

/// P^K_x walk from x ∈ ∂K, recorded in `record`. With default limits the walk
/// runs until it escapes; otherwise it is clipped at the step cap or stop radius.
template <int D>
TrajectoryFragment<D> sample_conditioned_walk(const Site<D>& x, const PotentialTable<D>& table,
                                              const WalkEngine<D>& engine, const Box<D>& record, Rng& rng,
                                              WalkLimits limits = {}, FragmentRole role = FragmentRole::future) {
    if (!table.set().contains(x)) throw ConfigError("conditioned walk must start in K, got " + to_string(x));
    if (table.equilibrium(x).hi <= 0) throw ConfigError("no K-avoiding walk starts at " + to_string(x));
    TrajectoryFragment<D> f;
    f.role = role;
    detail::FragmentRecorder<D> rec{&record, &f};
    f.end = engine.run(x, EscapeTiltedWalk<D>(table), rec, rng, limits, &f.stats);
    f.clipped = f.end == WalkEnd::clipped;
    for (std::size_t i = 1; i < f.path.size(); ++i)
        if (table.set().contains(f.path[i]))
            throw InvariantError("conditioned walk from " + to_string(x) + " revisited K at " + to_string(f.path[i]));
    return f;
}

/// Endpoint-pair law (x, x') ∝ g(x,x') e_K(x) e_K(x') over ∂K × ∂K.
template <int D>
class PairLaw {
public:
    explicit PairLaw(const PotentialTable<D>& table, double tolerance = 1e-3) : boundary_(&table.boundary()) {
        const std::size_t nb = boundary_->size();
        weights_.resize(nb * nb);
        double total = 0;
        for (std::size_t i = 0; i < nb; ++i)
            for (std::size_t j = 0; j < nb; ++j) {
                double w = table.green_boundary(i, j).mid() * table.equilibrium_values()[i].mid() *
                           table.equilibrium_values()[j].mid();
                weights_[i * nb + j] = w;
                total += w;
            }
        normalization_ = total / table.capacity().mid();
        if (std::abs(normalization_ - 1) > tolerance)
            throw ToleranceError("pair weights sum to " + std::to_string(normalization_) +
                                 " times cap(K), outside the tolerance " + std::to_string(tolerance));
        for (auto& w : weights_) w /= total;
        alias_ = AliasTable(weights_);
    }

    /// Σ weights / cap(K) before normalization.
    double normalization() const { return normalization_; }
    std::size_t boundary_size() const { return boundary_->size(); }
    /// Probability of the pair (∂K[i], ∂K[j]).
    double probability(std::size_t i, std::size_t j) const { return weights_[i * boundary_->size() + j]; }
    const std::vector<double>& probabilities() const { return weights_; }

    /// Index i * |∂K| + j of a drawn pair.
    std::size_t sample_index(Rng& rng) const { return alias_.sample(rng); }

    std::pair<Site<D>, Site<D>> sample(Rng& rng) const {
        auto k = sample_index(rng);
        return {(*boundary_)[k / boundary_->size()], (*boundary_)[k % boundary_->size()]};
    }

private:
    const FiniteSet<D>* boundary_;
    std::vector<double> weights_;
    double normalization_ = 0;
    AliasTable alias_;
};

template <int D>
std::pair<Site<D>, Site<D>> sample_endpoint_pair(const PairLaw<D>& law, Rng& rng) {
    return law.sample(rng);
}

/// Law of the bridge length n with probabilities p_n(x,x')/g(x,x'), n <= N_max;
/// the remaining mass is put on N_max.
template <int D>
class BridgeLengthLaw {
public:
    BridgeLengthLaw(const Site<D>& x, const Site<D>& xp, const GreenTable<D>& green, int max_length, int box_radius,
                    double tail_tolerance = 1e-3, std::size_t memory_cap = kDefaultMemoryCap)
        : max_length_(max_length) {
        if (max_length < 0) throw ConfigError("maximum bridge length must be >= 0");
        auto series = heat_kernel_series<D>(x, {xp}, max_length, box_radius, memory_cap);
        const auto& p = series.values[0];
        g_ = green.at(x, xp);
        double partial = 0;
        for (double v : p) partial += v;
        // p from an absorbing box is a lower bound; the mass missed at step n is at most the mass absorbed by then
        double missed = 0;
        for (double a : series.absorbed) missed += a;
        tail_ = Interval(1 - (partial + missed) / g_.lo, 1 - partial / g_.hi).clamped(0.0, 1.0);
        if (tail_.hi > tail_tolerance)
            throw ToleranceError("bridge-length tail mass up to " + std::to_string(tail_.hi) + " exceeds " +
                                 std::to_string(tail_tolerance) + "; increase the maximum length (now " +
                                 std::to_string(max_length) + ")");
        probs_.resize(max_length + 1);
        double total = 0;
        for (int n = 0; n <= max_length; ++n) total += (probs_[n] = p[n] / g_.mid());
        probs_.back() += std::max(0.0, 1 - total);
        alias_ = AliasTable(probs_);
    }

    int max_length() const { return max_length_; }
    /// Tail mass beyond N_max, folded onto N_max; a systematic error.
    Interval tail() const { return tail_; }
    double probability(int n) const { return n < 0 || n > max_length_ ? 0.0 : probs_[n]; }
    int sample(Rng& rng) const { return int(alias_.sample(rng)); }

private:
    int max_length_;
    Interval g_;
    Interval tail_;
    std::vector<double> probs_;
    AliasTable alias_;
};

template <int D>
int sample_bridge_length(const BridgeLengthLaw<D>& law, Rng& rng) {
    return law.sample(rng);
}

/// Exact n-step bridge from x to x'. `from_target` is the heat kernel from x'
/// (p_m(z, x') = p_m(x', z) by symmetry) with horizon >= n.
template <int D>
TrajectoryFragment<D> sample_bridge(const Site<D>& x, const Site<D>& xp, int n,
                                    const HeatKernelTable<D>& from_target, Rng& rng) {
    if (from_target.source() != xp) throw ConfigError("heat kernel table must start at the bridge target");
    if (n < 0 || n > from_target.horizon()) throw ConfigError("bridge length outside the heat-kernel horizon");
    TrajectoryFragment<D> f;
    f.role = FragmentRole::bridge;
    f.end = WalkEnd::killed;
    f.path.reserve(n + 1);
    Site<D> y = x;
    f.path.push_back(y);
    for (int s = 0; s < n; ++s) {
        if (from_target(n - s, y) == 0.0)
            throw InvariantError("bridge kernel vanishes at " + to_string(y) + " with " + std::to_string(n - s) +
                                 " steps left");
        auto nb = Lattice<D>::neighbors(y);
        std::array<double, 2 * D> w;
        for (int i = 0; i < 2 * D; ++i) w[i] = from_target(n - 1 - s, nb[i]);
        y = nb[sample_categorical(w.data(), w.size(), rng)];
        f.path.push_back(y);
    }
    if (y != xp) throw InvariantError("bridge ended at " + to_string(y) + " instead of " + to_string(xp));
    f.stats.steps = std::uint64_t(n);
    return f;
}

/// Bridge of random length from the mixture Σ_n p_n(x,x')/g(x,x') P^n_{x,x'},
/// realized as the g(· - x')-transformed walk killed at x'. No length cutoff.
template <int D>
TrajectoryFragment<D> sample_green_bridge(const Site<D>& x, const Site<D>& xp, const GreenTable<D>& green,
                                          const WalkEngine<D>& engine, const Box<D>& record, Rng& rng) {
    TrajectoryFragment<D> f;
    f.role = FragmentRole::bridge;
    detail::FragmentRecorder<D> rec{&record, &f};
    f.end = engine.run(x, GreenTiltedWalk<D>(xp, green), rec, rng, {}, &f.stats);
    if (f.end != WalkEnd::killed) throw InvariantError("green bridge ended without reaching its target");
    if (f.path.empty() || f.path.front() != x || f.path.back() != xp)
        throw InvariantError("green bridge endpoints differ from " + to_string(x) + " -> " + to_string(xp));
    return f;
}

struct LastVisit {
    bool visited = false; // the walk met K at some time >= 0
    bool timed = false;   // no jump before the last visit, so `time` is exact
    std::uint64_t time = 0;
    std::size_t site = 0; // index into K
};

/// Time and place of the last visit to K of a simple random walk from x. A
/// visit after a jump or flip is untimed; by construction its time is at
/// least 2 * jump_min.
template <int D>
LastVisit sample_last_visit(const FiniteSet<D>& k, const Site<D>& x, const WalkEngine<D>& engine, Rng& rng) {
    LastVisit lv;
    std::uint64_t t = 0;
    bool first = true, exact_so_far = true;
    engine.run(
        x, SimpleWalk<D>{},
        [&](const Site<D>& y, bool exact) {
            if (!first) ++t;
            first = false;
            exact_so_far = exact_so_far && exact;
            if (k.contains(y)) {
                lv.visited = true;
                lv.timed = exact_so_far;
                lv.time = t;
                lv.site = std::size_t(std::lower_bound(k.begin(), k.end(), y) - k.begin());
            }
            return true;
        },
        rng);
    return lv;
}

/// Starting law of the W-hitting trajectories: the normalized equilibrium
/// measure of a window box.
template <int D>
class WindowSource {
public:
    WindowSource(Box<D> window, std::shared_ptr<const GreenTable<D>> green)
        : window_(window), eq_(window.to_set(), std::move(green)) {
        alias_ = AliasTable(eq_.values());
        cap_ = eq_.capacity();
    }

    const Box<D>& window() const { return window_; }
    const BoundaryEquilibrium<D>& equilibrium() const { return eq_; }
    /// Enclosure of cap(W).
    Interval capacity() const { return cap_; }
    /// Σ of the point values used for sampling (the Poisson mean per unit u).
    double mass() const {
        double s = 0;
        for (double v : eq_.values()) s += v;
        return s;
    }
    /// Relative error of the hitting intensity of any K ⊆ W (maximum principle).
    double intensity_error() const {
        auto r = eq_.potential_range();
        return std::max(r.hi - 1, 1 - r.lo);
    }

    Site<D> sample_start(Rng& rng) const { return eq_.boundary()[alias_.sample(rng)]; }

private:
    Box<D> window_;
    BoundaryEquilibrium<D> eq_;
    AliasTable alias_;
    Interval cap_;
};

struct TraceStats {
    std::uint64_t trajectories = 0;
    std::uint64_t flips = 0;
    std::uint64_t clipped = 0;
};

/// Traces on W at several levels from one cloud: trajectory i carries a
/// uniform label U_i and belongs to level u iff U_i < u / u_max. Fields are
/// therefore nested in u. `levels` must be increasing.
template <int D>
std::vector<OccupancyField<D>> sample_trace_levels(const WindowSource<D>& source, const std::vector<double>& levels,
                                                   const WalkEngine<D>& engine, Rng& rng, TraceStats* stats = nullptr) {
    if (levels.empty()) throw ConfigError("at least one level is required");
    for (std::size_t i = 0; i < levels.size(); ++i)
        if (!(levels[i] > 0) || (i && levels[i] <= levels[i - 1]))
            throw ConfigError("levels must be positive and increasing");
    const double u_max = levels.back();
    std::vector<OccupancyField<D>> fields(levels.size(), OccupancyField<D>(source.window()));
    auto n = sample_poisson(u_max * source.mass(), rng);
    TraceStats local;
    TraceStats& st = stats ? *stats : local;
    const SimpleWalk<D> srw;
    const Box<D>& w = source.window();
    std::vector<std::size_t> sites;
    for (std::uint64_t t = 0; t < n; ++t) {
        const double label = rng.uniform() * u_max;
        std::size_t first = 0;
        while (first < levels.size() && label >= levels[first]) ++first;
        Site<D> x = source.sample_start(rng);
        sites.clear();
        WalkStats ws;
        auto end = engine.run(
            x, srw,
            [&](const Site<D>& y, bool) {
                if (w.contains(y)) sites.push_back(w.index(y));
                return true;
            },
            rng, {}, &ws);
        ++st.trajectories;
        st.flips += ws.flips;
        if (end == WalkEnd::clipped) ++st.clipped;
        for (std::size_t l = first; l < levels.size(); ++l)
            for (auto i : sites) fields[l].set(i);
    }
    return fields;
}

template <int D>
OccupancyField<D> sample_trace(const WindowSource<D>& source, double u, const WalkEngine<D>& engine, Rng& rng,
                               TraceStats* stats = nullptr) {
    return sample_trace_levels(source, {u}, engine, rng, stats).front();
}

template <int D>
struct StructuredSample {
    double u = 0;
    FiniteSet<D> k;
    Box<D> window;
    std::uint64_t seed = 0;
    std::uint64_t replica = 0;
    std::vector<std::pair<Site<D>, Site<D>>> pairs;
    std::vector<TrajectoryFragment<D>> pasts, bridges, futures;
    std::vector<TrajectoryFragment<D>> background;
    std::uint64_t background_candidates = 0;
    std::uint64_t flips = 0;

    std::size_t n() const { return pairs.size(); }

    /// I^u ∩ W.
    OccupancyField<D> trace() const {
        OccupancyField<D> f(window);
        for (const auto* group : {&pasts, &bridges, &futures, &background})
            for (const auto& frag : *group) frag.mark(f);
        return f;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        auto site = [](const Site<D>& s) { return std::vector<int>(s.begin(), s.end()); };
        j["u"] = u;
        j["K"] = nlohmann::ordered_json::array();
        for (const auto& x : k) j["K"].push_back(site(x));
        j["window"] = {{"center", site(window.center)}, {"radius", window.radius}};
        j["seed"] = seed;
        j["replica"] = replica;
        j["n"] = n();
        j["pairs"] = nlohmann::ordered_json::array();
        for (const auto& [x, xp] : pairs) j["pairs"].push_back({site(x), site(xp)});
        auto frags = [](const std::vector<TrajectoryFragment<D>>& v) {
            auto a = nlohmann::ordered_json::array();
            for (const auto& f : v) a.push_back(f.to_json());
            return a;
        };
        j["pasts"] = frags(pasts);
        j["bridges"] = frags(bridges);
        j["futures"] = frags(futures);
        j["background_candidates"] = background_candidates;
        j["background"] = frags(background);
        return j;
    }
};

/// Structured sampler for K ⊂ interior(W). Holds references to the tables,
/// which must outlive it.
template <int D>
class StructuredSampler {
public:
    StructuredSampler(const PotentialTable<D>& k_table, const WindowSource<D>& window, const WalkEngine<D>& engine,
                      double pair_tolerance = 1e-3)
        : k_(&k_table), w_(&window), engine_(&engine), pairs_(k_table, pair_tolerance) {
        const auto& box = window.window();
        for (const auto& x : k_table.set())
            if (linf_norm<D>(x - box.center) >= box.radius)
                throw ConfigError("K must lie in the interior of the window; " + to_string(x) + " does not");
    }

    const PairLaw<D>& pair_law() const { return pairs_; }

    StructuredSample<D> sample(double u, Rng& rng) const {
        StructuredSample<D> s;
        s.u = u;
        s.k = k_->set();
        s.window = w_->window();
        const auto& box = w_->window();
        auto n = sample_count(k_->capacity(), u, rng);
        for (std::uint64_t i = 0; i < n; ++i) {
            auto [x, xp] = pairs_.sample(rng);
            s.pairs.emplace_back(x, xp);
            s.pasts.push_back(sample_conditioned_walk<D>(x, *k_, *engine_, box, rng, {}, FragmentRole::past));
            s.bridges.push_back(sample_green_bridge<D>(x, xp, k_->green(), *engine_, box, rng));
            s.futures.push_back(sample_conditioned_walk<D>(xp, *k_, *engine_, box, rng, {}, FragmentRole::future));
            s.flips += s.pasts.back().stats.flips + s.bridges.back().stats.flips + s.futures.back().stats.flips;
        }
        s.background_candidates = sample_poisson(u * w_->mass(), rng);
        const SimpleWalk<D> srw;
        const auto& kset = k_->set();
        for (std::uint64_t t = 0; t < s.background_candidates; ++t) {
            TrajectoryFragment<D> f;
            f.role = FragmentRole::background;
            detail::FragmentRecorder<D> rec{&box, &f};
            bool hit = false;
            f.end = engine_->run(
                w_->sample_start(rng), srw,
                [&](const Site<D>& y, bool exact) {
                    if (kset.contains(y)) {
                        hit = true;
                        return false;
                    }
                    return rec(y, exact);
                },
                rng, {}, &f.stats);
            s.flips += f.stats.flips;
            if (!hit) s.background.push_back(std::move(f));
        }
        return s;
    }

private:
    const PotentialTable<D>* k_;
    const WindowSource<D>* w_;
    const WalkEngine<D>* engine_;
    PairLaw<D> pairs_;
};

} // namespace rilab
