#pragma once
//
// Vacant-set geometry on a window: component labeling, the decomposition of
// the trace into I_{K,n} (everything except the K-bridges) and bridges,
// connectivity of endpoint pairs inside I_{K,n} ∩ K', bridge rerouting, and
// the t-trifurcation census with its Burton-Keane counting audit.
//
// "Touches the window's inner boundary" stands in for "infinite" throughout.
//

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <numeric>
#include <string>
#include <type_traits>
#include <vector>

#include "rilab/error.hpp"
#include "rilab/heat_kernel.hpp"
#include "rilab/interlace.hpp"
#include "rilab/lattice.hpp"
#include "rilab/occupancy.hpp"

namespace rilab {

enum class Phase { occupied, vacant };

namespace detail {

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::uint32_t(0)); }

    std::uint32_t find(std::uint32_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    // the smaller root wins, so each root is its set's smallest element
    void unite(std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent_[b] = a;
    }

private:
    std::vector<std::uint32_t> parent_;
};

template <int D>
bool in_phase(const OccupancyField<D>& f, std::size_t i, Phase p) {
    return f.test(i) == (p == Phase::occupied);
}

} // namespace detail

template <int D>
struct ComponentLabeling {
    Box<D> window;
    std::vector<std::int32_t> label; // -1 for sites outside the phase
    std::vector<std::size_t> sizes;
    std::vector<std::uint8_t> boundary_contact;

    std::size_t count() const { return sizes.size(); }
    std::size_t labeled_sites() const { return std::accumulate(sizes.begin(), sizes.end(), std::size_t(0)); }
    std::size_t contact_count() const {
        return std::size_t(std::count(boundary_contact.begin(), boundary_contact.end(), std::uint8_t(1)));
    }
    std::int32_t at(const Site<D>& x) const { return window.contains(x) ? label[window.index(x)] : -1; }
};

/// Nearest-neighbour components of one phase, numbered in order of their
/// smallest site.
template <int D>
ComponentLabeling<D> components(const OccupancyField<D>& f, Phase phase) {
    const Box<D>& w = f.window();
    const std::size_t n = w.size();
    std::array<std::size_t, D> stride;
    stride[D - 1] = 1;
    for (int a = D - 2; a >= 0; --a) stride[a] = stride[a + 1] * std::size_t(w.side());
    detail::UnionFind uf(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!detail::in_phase(f, i, phase)) continue;
        auto x = w.site(i);
        for (int a = 0; a < D; ++a) {
            if (x[a] - w.center[a] == w.radius) continue;
            std::size_t j = i + stride[a];
            if (detail::in_phase(f, j, phase)) uf.unite(std::uint32_t(i), std::uint32_t(j));
        }
    }
    ComponentLabeling<D> out;
    out.window = w;
    out.label.assign(n, -1);
    std::vector<std::int32_t> root_label(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        if (!detail::in_phase(f, i, phase)) continue;
        auto r = uf.find(std::uint32_t(i));
        if (root_label[r] < 0) {
            root_label[r] = std::int32_t(out.sizes.size());
            out.sizes.push_back(0);
            out.boundary_contact.push_back(0);
        }
        auto l = root_label[r];
        out.label[i] = l;
        ++out.sizes[l];
        if (w.on_boundary(w.site(i))) out.boundary_contact[l] = 1;
    }
    return out;
}

template <int D>
struct DecomposedField {
    OccupancyField<D> ikn;                       // background ∪ pasts ∪ futures
    std::vector<TrajectoryFragment<D>> bridges;
    std::vector<std::pair<Site<D>, Site<D>>> pairs;
    FiniteSet<D> k;
};

/// Splits a structured sample into I_{K,n} and its bridges, checking
/// I^u ∩ W = I_{K,n} ∪ bridges bitwise.
template <int D>
DecomposedField<D> decompose(const StructuredSample<D>& s) {
    DecomposedField<D> d{OccupancyField<D>(s.window), s.bridges, s.pairs, s.k};
    for (const auto* group : {&s.background, &s.pasts, &s.futures})
        for (const auto& f : *group) f.mark(d.ikn);
    OccupancyField<D> rebuilt = d.ikn;
    for (const auto& b : d.bridges) b.mark(rebuilt);
    if (!(rebuilt == s.trace())) throw InvariantError("trace differs from I_{K,n} joined with the bridges");
    return d;
}

namespace detail {

/// BFS in `allowed` from `from`; returns the parent array (-1 unreached, self for the source).
template <int D>
std::vector<std::int64_t> bfs_tree(const Box<D>& w, const std::vector<std::uint8_t>& allowed, const Site<D>& from,
                                   const Site<D>* stop_at = nullptr) {
    std::vector<std::int64_t> parent(w.size(), -1);
    if (!w.contains(from) || !allowed[w.index(from)]) return parent;
    std::deque<std::size_t> q;
    auto s = w.index(from);
    parent[s] = std::int64_t(s);
    q.push_back(s);
    const std::size_t stop = stop_at && w.contains(*stop_at) ? w.index(*stop_at) : std::size_t(-1);
    while (!q.empty()) {
        auto i = q.front();
        q.pop_front();
        if (i == stop) break;
        // lexicographic neighbour order fixes the tie-break among shortest paths
        auto nb = Lattice<D>::neighbors(w.site(i));
        std::sort(nb.begin(), nb.end());
        for (const auto& y : nb) {
            if (!w.contains(y)) continue;
            auto j = w.index(y);
            if (!allowed[j] || parent[j] >= 0) continue;
            parent[j] = std::int64_t(i);
            q.push_back(j);
        }
    }
    return parent;
}

template <int D>
std::vector<std::uint8_t> ikn_within(const OccupancyField<D>& ikn, const Box<D>& kprime) {
    const Box<D>& w = ikn.window();
    std::vector<std::uint8_t> allowed(w.size(), 0);
    for (std::size_t i = 0; i < w.size(); ++i) allowed[i] = ikn.test(i) && kprime.contains(w.site(i));
    return allowed;
}

template <int D>
void check_kprime(const DecomposedField<D>& d, const Box<D>& kprime) {
    for (const auto& x : d.k)
        if (!kprime.contains(x)) throw ConfigError("K' must contain K");
    const Box<D>& w = d.ikn.window();
    for (int i = 0; i < D; ++i)
        if (std::abs(kprime.center[i] - w.center[i]) + kprime.radius > w.radius)
            throw ConfigError("K' must lie inside the window");
}

} // namespace detail

/// Per pair i: are X_i and X_i' joined inside I_{K,n} ∩ K'?
template <int D>
std::vector<bool> check_IKn_connectivity(const DecomposedField<D>& d, const Box<D>& kprime) {
    detail::check_kprime(d, kprime);
    auto allowed = detail::ikn_within(d.ikn, kprime);
    const Box<D>& w = d.ikn.window();
    std::vector<bool> out;
    for (const auto& [x, xp] : d.pairs) {
        auto parent = detail::bfs_tree<D>(w, allowed, x, &xp);
        out.push_back(parent[w.index(xp)] >= 0);
    }
    return out;
}

struct RerouteResult {
    std::vector<std::size_t> path_lengths;
};

/// Replaces every bridge by the BFS-shortest path from X_i to X_i' inside
/// I_{K,n} ∩ K' (ties broken by lexicographic site order) and returns the
/// resulting trace, I_{K,n} ∪ new paths.
template <int D>
OccupancyField<D> reroute_bridges(const DecomposedField<D>& d, const Box<D>& kprime, RerouteResult* info = nullptr) {
    detail::check_kprime(d, kprime);
    auto allowed = detail::ikn_within(d.ikn, kprime);
    const Box<D>& w = d.ikn.window();
    OccupancyField<D> out = d.ikn;
    for (std::size_t p = 0; p < d.pairs.size(); ++p) {
        const auto& [x, xp] = d.pairs[p];
        auto parent = detail::bfs_tree<D>(w, allowed, x, &xp);
        auto j = w.index(xp);
        if (parent[j] < 0)
            throw ConfigError("pair " + std::to_string(p) + " (" + to_string(x) + " -> " + to_string(xp) +
                              ") is not connected inside I_{K,n} ∩ K'");
        std::size_t len = 0;
        for (auto i = j;; i = std::size_t(parent[i]), ++len) {
            out.set(i);
            if (parent[i] == std::int64_t(i)) break;
        }
        if (info) info->path_lengths.push_back(len);
    }
    return out;
}

/// Every vacant component of `before` lies inside a single vacant component of `after`.
template <int D>
bool vacant_components_nested(const OccupancyField<D>& before, const OccupancyField<D>& after) {
    auto a = components(before, Phase::vacant);
    auto b = components(after, Phase::vacant);
    std::vector<std::int32_t> image(a.count(), -1);
    for (std::size_t i = 0; i < a.label.size(); ++i) {
        auto l = a.label[i];
        if (l < 0) continue;
        auto m = b.label[i];
        if (m < 0) return false;
        if (image[l] < 0) image[l] = m;
        else if (image[l] != m) return false;
    }
    return true;
}

struct TrifurcationConfig {
    int t = 1;
    int margin = 0; // 0: t + 2, which keeps ∪B(w, t+1) inside the window
};

template <int D>
struct TrifurcationReport {
    int t = 0;
    int margin = 0;
    Box<D> window;
    Box<D> census;                 // the set W of candidate sites
    std::vector<Site<D>> sites;
    std::uint64_t prefilter_passed = 0;

    double density() const { return census_size() ? double(sites.size()) / double(census_size()) : 0.0; }
    std::size_t census_size() const { return census.radius >= 0 ? census.size() : 0; }
};

namespace detail {

/// Sites of the L1 ball around x that are vacant and connected to x inside it.
template <int D>
std::vector<std::size_t> local_component(const OccupancyField<D>& f, const Site<D>& x, int t) {
    const Box<D>& w = f.window();
    std::vector<std::size_t> out;
    std::vector<std::size_t> stack{w.index(x)};
    std::vector<Site<D>> seen{x};
    while (!stack.empty()) {
        auto i = stack.back();
        stack.pop_back();
        out.push_back(i);
        for (const auto& y : Lattice<D>::neighbors(w.site(i))) {
            if (!w.contains(y) || l1_distance<D>(x, y) > t || f.test(w.index(y))) continue;
            if (std::find(seen.begin(), seen.end(), y) != seen.end()) continue;
            seen.push_back(y);
            stack.push_back(w.index(y));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace detail

/// t-trifurcation census. x is reported iff it is vacant, its vacant component
/// C touches the window boundary, and C minus C_{x,t} has at least three
/// components touching the boundary. Balls are L1 balls.
template <int D>
TrifurcationReport<D> detect_trifurcations(const OccupancyField<D>& f, TrifurcationConfig cfg) {
    if (cfg.t < 1) throw ConfigError("trifurcation radius t must be >= 1");
    if (cfg.margin == 0) cfg.margin = cfg.t + 2;
    if (cfg.margin < cfg.t) throw ConfigError("census margin must be >= t");
    TrifurcationReport<D> rep;
    rep.t = cfg.t;
    rep.margin = cfg.margin;
    const Box<D>& w = f.window();
    rep.window = w;
    rep.census = Box<D>(w.center, w.radius - cfg.margin);
    if (rep.census.radius < 0) return rep;

    auto lab = components(f, Phase::vacant);
    const int t = cfg.t;
    const int reach = 2 * t + 2; // local grouping radius
    std::vector<std::uint32_t> stamp(w.size(), 0);
    std::uint32_t epoch = 0;
    std::vector<std::size_t> stack;

    for (std::size_t ci = 0; ci < rep.census.size(); ++ci) {
        Site<D> x = rep.census.site(ci);
        auto xi = w.index(x);
        if (f.test(xi)) continue;
        if (!lab.boundary_contact[lab.label[xi]]) continue;

        auto cxt = detail::local_component<D>(f, x, t);
        ++epoch;
        for (auto i : cxt) stamp[i] = epoch; // removed
        std::vector<std::size_t> frontier;
        for (auto i : cxt)
            for (const auto& y : Lattice<D>::neighbors(w.site(i))) {
                if (!w.contains(y)) continue;
                auto j = w.index(y);
                if (f.test(j) || stamp[j] == epoch) continue;
                if (std::find(frontier.begin(), frontier.end(), j) == frontier.end()) frontier.push_back(j);
            }
        if (frontier.size() < 3) continue;

        // Groups of frontier sites joined inside B(x, R) minus C_{x,t}, for growing R. A group
        // can only belong to a boundary-touching component if it touches the window boundary
        // or reaches the sphere |y - x|_1 = R; fewer than three such groups rules x out. The
        // last radius covers the window, where the count is exact.
        auto flood = [&](std::size_t s, int radius, bool& live) {
            stack.assign(1, s);
            stamp[s] = epoch;
            while (!stack.empty()) {
                auto i = stack.back();
                stack.pop_back();
                auto y0 = w.site(i);
                if (w.on_boundary(y0) || l1_distance<D>(x, y0) == radius) live = true;
                for (const auto& y : Lattice<D>::neighbors(y0)) {
                    if (!w.contains(y) || l1_distance<D>(x, y) > radius) continue;
                    auto j = w.index(y);
                    if (f.test(j) || stamp[j] == epoch) continue;
                    stamp[j] = epoch;
                    stack.push_back(j);
                }
            }
        };
        int far = 0;
        for (int i = 0; i < D; ++i) far += w.radius + std::abs(x[i] - w.center[i]);
        bool alive = true;
        for (int radius = reach;; radius = std::min(2 * radius, far + 1)) {
            ++epoch;
            for (auto i : cxt) stamp[i] = epoch;
            int live_groups = 0;
            for (auto s : frontier) {
                if (stamp[s] == epoch) continue;
                bool live = false;
                flood(s, radius, live);
                live_groups += live;
            }
            if (live_groups < 3) {
                alive = false;
                break;
            }
            if (radius == reach) ++rep.prefilter_passed;
            if (radius > far) break;
        }
        if (alive) rep.sites.push_back(x);
    }
    return rep;
}

/// Independent recomputation of the trifurcation predicate at x by plain
/// flood fills over the whole window.
template <int D>
bool verify_trifurcation(const OccupancyField<D>& f, const std::type_identity_t<Site<D>>& x, int t) {
    const Box<D>& w = f.window();
    if (!w.contains(x) || f.occupied(x)) return false;
    auto fill = [&](const Site<D>& s, const std::vector<std::uint8_t>& blocked, std::vector<std::uint8_t>& seen,
                    auto&& ok) {
        std::vector<Site<D>> out;
        std::deque<Site<D>> q{s};
        seen[w.index(s)] = 1;
        while (!q.empty()) {
            auto y = q.front();
            q.pop_front();
            out.push_back(y);
            for (const auto& z : Lattice<D>::neighbors(y)) {
                if (!w.contains(z) || !ok(z)) continue;
                auto j = w.index(z);
                if (f.test(j) || blocked[j] || seen[j]) continue;
                seen[j] = 1;
                q.push_back(z);
            }
        }
        return out;
    };
    auto touches = [&](const std::vector<Site<D>>& comp) {
        return std::any_of(comp.begin(), comp.end(), [&](const Site<D>& y) { return w.on_boundary(y); });
    };
    std::vector<std::uint8_t> none(w.size(), 0), seen(w.size(), 0);
    auto c = fill(x, none, seen, [](const Site<D>&) { return true; });
    if (!touches(c)) return false;
    std::fill(seen.begin(), seen.end(), 0);
    auto cxt = fill(x, none, seen, [&](const Site<D>& y) { return l1_distance<D>(x, y) <= t; });
    std::vector<std::uint8_t> removed(w.size(), 0);
    for (const auto& y : cxt) removed[w.index(y)] = 1;
    std::fill(seen.begin(), seen.end(), 0);
    int count = 0;
    for (const auto& y : c) {
        auto j = w.index(y);
        if (removed[j] || seen[j]) continue;
        if (touches(fill(y, removed, seen, [](const Site<D>&) { return true; }))) ++count;
    }
    return count >= 3;
}

struct BurtonKeaneAudit {
    int t = 0;
    std::uint64_t raw = 0;             // T(W)
    std::uint64_t separated = 0;       // greedy sub-census with pairwise L1 distance >= 2t+1
    std::uint64_t volume = 0;          // |W|
    std::uint64_t boundary = 0;        // |∂W|
    std::uint64_t boundary_dilated = 0; // |∂W'|, W' = ∪_{w∈W} B(w, t+1)
    std::uint64_t ball_outer = 0;      // |B(2t+1)|
    std::uint64_t ball_inner = 0;      // |B(t+1)|
    std::uint64_t multiplier = 0;      // |B(2t+1)| |B(t+1)|
    std::uint64_t bound = 0;           // c1 |∂W| = multiplier |∂W|

    double density() const { return volume ? double(raw) / double(volume) : 0.0; }
    double boundary_ratio() const { return volume ? double(boundary) / double(volume) : 0.0; }
    /// separated <= multiplier |∂W'|
    bool separated_within_bound() const { return separated <= multiplier * boundary_dilated; }
    /// T(W) <= |B(2t+1)| (|∂W'| - 2) when T(W) > 0
    bool raw_within_dilated_bound() const {
        return raw == 0 || (boundary_dilated >= 2 && raw <= ball_outer * (boundary_dilated - 2));
    }
    bool raw_within_bound() const { return raw <= bound; }

    nlohmann::ordered_json to_json() const {
        return {{"t", t},
                {"T", raw},
                {"T_separated", separated},
                {"W", volume},
                {"boundary_W", boundary},
                {"boundary_W_prime", boundary_dilated},
                {"ball_2t1", ball_outer},
                {"ball_t1", ball_inner},
                {"multiplier", multiplier},
                {"bound", bound},
                {"density", density()},
                {"boundary_ratio", boundary_ratio()},
                {"metric", "graph (L1)"}};
    }
};

template <int D>
BurtonKeaneAudit burton_keane_audit(const TrifurcationReport<D>& rep) {
    BurtonKeaneAudit a;
    a.t = rep.t;
    a.raw = rep.sites.size();
    std::vector<Site<D>> kept;
    auto sites = rep.sites;
    std::sort(sites.begin(), sites.end());
    for (const auto& x : sites)
        if (std::all_of(kept.begin(), kept.end(), [&](const Site<D>& y) { return l1_distance<D>(x, y) >= 2 * rep.t + 1; }))
            kept.push_back(x);
    a.separated = kept.size();
    a.ball_outer = ball_size<D>(2 * rep.t + 1);
    a.ball_inner = ball_size<D>(rep.t + 1);
    a.multiplier = a.ball_outer * a.ball_inner;
    if (rep.census.radius < 0) return a;
    a.volume = rep.census.size();
    // W is a box: its inner boundary is the outer shell
    a.boundary = rep.census.radius == 0 ? 1 : a.volume - Box<D>(rep.census.center, rep.census.radius - 1).size();
    a.bound = a.multiplier * a.boundary;
    // W' = box dilated by an L1 ball: {y : Σ_i max(0, |y_i - c_i| - r) <= t+1}
    const int r = rep.census.radius, s = rep.t + 1;
    Box<D> hull(rep.census.center, r + s);
    auto in_dilated = [&](const Site<D>& y) {
        int excess = 0;
        for (int i = 0; i < D; ++i) excess += std::max(0, std::abs(y[i] - rep.census.center[i]) - r);
        return excess <= s;
    };
    std::uint64_t bd = 0;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        auto y = hull.site(i);
        if (!in_dilated(y)) continue;
        for (const auto& z : Lattice<D>::neighbors(y))
            if (!in_dilated(z)) {
                ++bd;
                break;
            }
    }
    a.boundary_dilated = bd;
    return a;
}

} // namespace rilab
