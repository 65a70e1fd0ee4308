#pragma once
//
// Escape probabilities h_K, equilibrium measure e_K, capacity and boundary
// Green values for a finite set K, all as certified intervals.
//
// h_K solves the exterior Dirichlet problem h = Ph off K, h = 0 on K, on an
// L∞ box of radius R around K. The outer layer is clamped to 1 - φ with
// φ(z) = Σ_{x∈∂K} g(z - x) e_K(x) the hitting probability from z; using the
// upper (lower) enclosure of φ gives a lower (upper) enclosure of h. The e_K
// enclosures feed back into φ, so the two solves are iterated until the
// enclosures stop shrinking.
//

#include <nlohmann/json.hpp>

#include <cmath>
#include <memory>
#include <string>
#include <sstream>
#include <vector>

#include "rilab/dirichlet.hpp"
#include "rilab/error.hpp"
#include "rilab/green.hpp"
#include "rilab/heat_kernel.hpp"
#include "rilab/interval.hpp"
#include "rilab/lattice.hpp"
#include "rilab/rng.hpp"
#include "rilab/walk.hpp"

namespace rilab {

struct PotentialConfig {
    int radius = 0;                 // 0: adaptive
    int min_radius = 12;
    int max_radius = 96;
    double cap_tolerance = 1e-3;    // target width of the capacity enclosure
    double solver_tolerance = 1e-13;
    int max_bootstrap = 40;
};

template <int D>
class PotentialTable {
public:
    PotentialTable(FiniteSet<D> k, std::shared_ptr<const GreenTable<D>> green, PotentialConfig cfg = {})
        : k_(std::move(k)), green_(std::move(green)), cfg_(cfg) {
        if (k_.empty()) throw ConfigError("potential of the empty set");
        boundary_ = inner_boundary(k_);
        auto [lo, hi] = k_.bounding_box();
        for (int i = 0; i < D; ++i) center_[i] = (lo[i] + hi[i]) / 2;
        k_radius_ = 0;
        for (const auto& x : k_) k_radius_ = std::max(k_radius_, linf_norm<D>(x - center_));

        if (cfg_.radius > 0) {
            if (cfg_.radius < k_radius_ + 2) throw ConfigError("K must lie inside the box of radius R-2");
            build(cfg_.radius);
        } else {
            int r = std::max(cfg_.min_radius, k_radius_ + 8);
            for (;;) {
                build(r);
                if (cap_.width() < cfg_.cap_tolerance) break;
                if (2 * r > cfg_.max_radius)
                    throw ToleranceError("capacity enclosure width " + format_width(cap_.width()) + " above " +
                                         format_width(cfg_.cap_tolerance) + " at the largest allowed radius " +
                                         std::to_string(r));
                r *= 2;
            }
        }
    }

    const FiniteSet<D>& set() const { return k_; }
    const FiniteSet<D>& boundary() const { return boundary_; }
    const Site<D>& center() const { return center_; }
    int radius() const { return box_.radius - 1; }
    int k_radius() const { return k_radius_; }
    const GreenTable<D>& green() const { return *green_; }
    std::shared_ptr<const GreenTable<D>> green_ptr() const { return green_; }
    const PotentialConfig& config() const { return cfg_; }
    int bootstrap_rounds() const { return rounds_; }
    double solver_error() const { return solver_error_; }

    Interval capacity() const { return cap_; }

    /// e_K(x); zero off ∂K.
    Interval equilibrium(const Site<D>& x) const {
        auto it = std::lower_bound(boundary_.begin(), boundary_.end(), x);
        if (it == boundary_.end() || *it != x) return Interval(0.0);
        return e_[static_cast<std::size_t>(it - boundary_.begin())];
    }
    const std::vector<Interval>& equilibrium_values() const { return e_; }

    /// g(x, x') for x, x' ∈ ∂K, in boundary order.
    Interval green_boundary(std::size_t i, std::size_t j) const { return g_[i * boundary_.size() + j]; }

    /// h_K(y) = P_y[never hit K].
    Interval escape(const Site<D>& y) const {
        if (k_.contains(y)) return Interval(0.0);
        if (box_.contains(y) && !box_.on_boundary(y)) {
            auto i = box_.index(y);
            return {lo_[i], hi_[i]};
        }
        return escape_far(y);
    }

    /// Midpoint of h_K(y), cheap enough for transition weights.
    double escape_mid(const Site<D>& y) const {
        // K lies inside the box, where its sites hold 0
        if (inner_box_.contains(y)) return mid_[box_.index(y)];
        double phi = 0;
        for (std::size_t j = 0; j < boundary_.size(); ++j) phi += green_->mid(y - boundary_[j]) * e_[j].mid();
        return std::clamp(1.0 - phi, 0.0, 1.0);
    }

    /// Largest escape-interval width over the box.
    double max_escape_width() const {
        double w = 0;
        for (std::size_t i = 0; i < box_.size(); ++i) w = std::max(w, hi_[i] - lo_[i]);
        return w;
    }

    /// Σ_{x,x'∈∂K} g(x,x') e_K(x) e_K(x'): the total mass of the pair law.
    Interval pair_mass() const {
        Interval s(0.0);
        for (std::size_t i = 0; i < boundary_.size(); ++i)
            for (std::size_t j = 0; j < boundary_.size(); ++j) s += green_boundary(i, j) * e_[i] * e_[j];
        return s;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        auto site_json = [](const Site<D>& s) { return std::vector<int>(s.begin(), s.end()); };
        j["K"] = nlohmann::ordered_json::array();
        for (const auto& x : k_) j["K"].push_back(site_json(x));
        j["R"] = radius();
        j["tolerance"] = cfg_.cap_tolerance;
        j["cap"] = {{"lo", cap_.lo}, {"hi", cap_.hi}};
        j["e_K"] = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < boundary_.size(); ++i)
            j["e_K"].push_back({{"site", site_json(boundary_[i])}, {"lo", e_[i].lo}, {"hi", e_[i].hi}});
        j["g"] = nlohmann::ordered_json::array();
        for (std::size_t a = 0; a < boundary_.size(); ++a)
            for (std::size_t b = 0; b < boundary_.size(); ++b) {
                auto v = green_boundary(a, b);
                j["g"].push_back(
                    {{"x", site_json(boundary_[a])}, {"x_prime", site_json(boundary_[b])}, {"lo", v.lo}, {"hi", v.hi}});
            }
        return j;
    }

private:
    static std::string format_width(double v) {
        std::ostringstream os;
        os << v;
        return os.str();
    }

    Interval escape_far(const Site<D>& y) const {
        Interval phi(0.0);
        for (std::size_t j = 0; j < boundary_.size(); ++j) phi += green_->at(y - boundary_[j]) * e_[j];
        return (Interval(1.0) - phi).clamped(0.0, 1.0);
    }

    void build(int r) {
        box_ = Box<D>(center_, r + 1);
        DirichletGrid<D> grid(box_);
        for (const auto& x : k_) grid.fix(x);
        lo_.assign(box_.size(), 0.0);
        hi_.assign(box_.size(), 1.0);
        for (const auto& x : k_) hi_[box_.index(x)] = 0.0;
        e_.assign(boundary_.size(), Interval(0.0, 1.0));

        std::vector<std::size_t> layer;
        for (std::size_t i = 0; i < box_.size(); ++i)
            if (box_.on_boundary(box_.site(i))) layer.push_back(i);

        const std::vector<double> no_source;
        double prev_width = 2.0;
        rounds_ = 0;
        for (int it = 0; it < cfg_.max_bootstrap; ++it) {
            ++rounds_;
            for (auto i : layer) {
                auto y = box_.site(i);
                Interval phi(0.0);
                for (std::size_t j = 0; j < boundary_.size(); ++j) phi += green_->at(y - boundary_[j]) * e_[j];
                phi = phi.clamped(0.0, 1.0);
                lo_[i] = 1.0 - phi.hi;
                hi_[i] = 1.0 - phi.lo;
            }
            auto rl = grid.solve(lo_, no_source, cfg_.solver_tolerance);
            auto rh = grid.solve(hi_, no_source, cfg_.solver_tolerance);
            solver_error_ = std::max(rl.error_bound, rh.error_bound);
            auto enclosure = [&](std::size_t i) {
                return Interval(lo_[i] - solver_error_, hi_[i] + solver_error_).widened(0).clamped(0.0, 1.0);
            };
            std::vector<Interval> e_new(boundary_.size());
            const Interval step(1.0 / (2 * D));
            for (std::size_t j = 0; j < boundary_.size(); ++j) {
                Interval s(0.0);
                for (const auto& y : Lattice<D>::neighbors(boundary_[j]))
                    if (!k_.contains(y)) s += step * enclosure(box_.index(y));
                // monotone refinement: never widen an enclosure already established
                e_new[j] = Interval(std::max(s.lo, e_[j].lo), std::min(s.hi, e_[j].hi));
            }
            e_ = std::move(e_new);
            cap_ = Interval(0.0);
            for (const auto& v : e_) cap_ += v;
            if (cap_.width() > prev_width * (1 - 1e-6) && it > 1) break;
            prev_width = cap_.width();
        }
        for (std::size_t i = 0; i < box_.size(); ++i) {
            if (grid.is_fixed(i)) continue;
            lo_[i] = std::max(0.0, Interval::down(lo_[i] - solver_error_));
            hi_[i] = std::min(1.0, Interval::up(hi_[i] + solver_error_));
        }
        inner_box_ = Box<D>(box_.center, box_.radius - 1);
        mid_.resize(box_.size());
        for (std::size_t i = 0; i < box_.size(); ++i) mid_[i] = 0.5 * (lo_[i] + hi_[i]);
        g_.resize(boundary_.size() * boundary_.size());
        for (std::size_t a = 0; a < boundary_.size(); ++a)
            for (std::size_t b = 0; b < boundary_.size(); ++b)
                g_[a * boundary_.size() + b] = green_->at(boundary_[a], boundary_[b]);
    }

    FiniteSet<D> k_;
    FiniteSet<D> boundary_;
    std::shared_ptr<const GreenTable<D>> green_;
    PotentialConfig cfg_;
    Site<D> center_{};
    int k_radius_ = 0;
    Box<D> box_;
    Box<D> inner_box_;
    std::vector<double> lo_, hi_, mid_;
    std::vector<Interval> e_;
    std::vector<Interval> g_;
    Interval cap_;
    int rounds_ = 0;
    double solver_error_ = 0;
};

// Named operations over a PotentialTable, matching the module's public surface.

template <int D>
PotentialTable<D> escape_probability(const FiniteSet<D>& k, int radius,
                                     std::shared_ptr<const GreenTable<D>> green = GreenTable<D>::shared()) {
    PotentialConfig cfg;
    cfg.radius = radius;
    return PotentialTable<D>(k, std::move(green), cfg);
}

/// h_K(y) enclosure, failing when wider than `tolerance`.
template <int D>
Interval escape_at(const PotentialTable<D>& table, const Site<D>& y, double tolerance) {
    auto v = table.escape(y);
    if (v.width() > tolerance)
        throw ToleranceError("escape interval at " + to_string(y) + " has width " + std::to_string(v.width()) +
                             "; increase R");
    return v;
}

template <int D>
Interval equilibrium_measure(const PotentialTable<D>& table, const Site<D>& x) {
    return table.equilibrium(x);
}

template <int D>
Interval capacity(const PotentialTable<D>& table) {
    return table.capacity();
}

/// Adaptive-radius capacity of K.
template <int D>
Interval capacity(const FiniteSet<D>& k, double tolerance = 1e-3) {
    PotentialConfig cfg;
    cfg.cap_tolerance = tolerance;
    return PotentialTable<D>(k, GreenTable<D>::shared(), cfg).capacity();
}

/// Truncated-series enclosure of g(x, x'): Σ_{n<=N} p_n(x, x') from a box DP
/// of radius R, plus a tail bound. With X the walk at step N (or its exit
/// point if it left the box), the tail is E[g(X, x')], bounded by the table's
/// upper values inside the box and by the far-field bound beyond it.
template <int D>
Interval green_series(const Site<D>& x, const Site<D>& xp, int horizon, int radius, const GreenTable<D>& table,
                      double tolerance = 1e-4, std::size_t memory_cap = kDefaultMemoryCap) {
    if (horizon < 0 || radius < 1) throw ConfigError("green series needs horizon >= 0 and radius >= 1");
    Box<D> box(x, radius);
    if (double(box.size()) * 2 * sizeof(double) > double(memory_cap))
        throw ToleranceError("green series box too large for the memory cap");
    std::vector<double> cur(box.size(), 0.0), next(box.size(), 0.0);
    cur[box.index(x)] = 1.0;
    double partial = box.contains(xp) && xp == x ? 1.0 : 0.0;
    double absorbed = 0;
    for (int n = 1; n <= horizon; ++n) {
        absorbed += detail::propagate<D, double>(box, cur, next, 1.0 / (2 * D));
        cur.swap(next);
        if (box.contains(xp)) partial += cur[box.index(xp)];
    }
    double tail = 0;
    for (std::size_t i = 0; i < box.size(); ++i)
        if (cur[i] > 0) tail += cur[i] * table.at(box.site(i), xp).hi;
    const double reach = double(radius + 1 - linf_norm<D>(xp - x));
    const double far = reach >= GreenEnvelope<D>::kEnvelopeMinRadius ? 1.001 * GreenEnvelope<D>::at(reach).hi
                                                                       : table.at(origin<D>()).hi;
    tail += absorbed * far;
    Interval v(Interval::down(partial * (1 - 1e-12)), Interval::up((partial + tail) * (1 + 1e-12)));
    if (v.width() > tolerance)
        throw ToleranceError("green series interval width " + std::to_string(v.width()) + " exceeds tolerance " +
                             std::to_string(tolerance) + "; increase the horizon and the radius");
    return v;
}

struct EscapeEstimate {
    double estimate = 0;
    double se = 0;
    double wilson_lo = 0, wilson_hi = 0;
    std::uint64_t replicas = 0;
    std::uint64_t escaped = 0;
};

/// Wilson score interval at z standard deviations.
inline std::pair<double, double> wilson_interval(std::uint64_t k, std::uint64_t n, double z = 1.959963984540054) {
    if (n == 0) return {0.0, 1.0};
    double p = double(k) / double(n), nn = double(n);
    double denom = 1 + z * z / nn;
    double centre = (p + z * z / (2 * nn)) / denom;
    double half = z * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

/// Fraction of simple random walks from x that step at least once and avoid K
/// for `horizon` steps: an upper-biased estimate of e_K(x), independent of the
/// potential solver. horizon = 0 runs each walk until it returns to K or
/// escapes, using the walk engine.
template <int D>
EscapeEstimate mc_escape_oracle(const FiniteSet<D>& k, const Site<D>& x, int horizon, std::uint64_t replicas,
                                Rng& rng) {
    if (replicas < 1000) throw ConfigError("mc_escape_oracle needs at least 1000 replicas");
    if (horizon < 0) throw ConfigError("horizon must be >= 0");
    EscapeEstimate out;
    out.replicas = replicas;
    bool trapped = true;
    for (const auto& y : Lattice<D>::neighbors(x)) trapped = trapped && k.contains(y);
    if (!trapped) {
        auto [lo, hi] = k.bounding_box();
        Site<D> c;
        int r = 0;
        for (int i = 0; i < D; ++i) {
            lo[i] = std::min(lo[i], x[i]);
            hi[i] = std::max(hi[i], x[i]);
            c[i] = (lo[i] + hi[i]) / 2;
            r = std::max({r, c[i] - lo[i], hi[i] - c[i]});
        }
        WalkEngine<D> engine(Box<D>(c, r));
        const SimpleWalk<D> srw;
        for (std::uint64_t rep = 0; rep < replicas; ++rep) {
            bool hit = false;
            bool first = true;
            auto visit = [&](const Site<D>& y, bool) {
                if (first) {
                    first = false;
                    return true;
                }
                hit = k.contains(y);
                return !hit;
            };
            if (horizon == 0) {
                engine.run(x, srw, visit, rng);
            } else {
                Site<D> y = x;
                for (int n = 0; n < horizon && !hit; ++n) y = *srw.step(y, rng), hit = k.contains(y);
            }
            if (!hit) ++out.escaped;
        }
    }
    out.estimate = double(out.escaped) / double(replicas);
    out.se = std::sqrt(out.estimate * (1 - out.estimate) / double(replicas));
    std::tie(out.wilson_lo, out.wilson_hi) = wilson_interval(out.escaped, replicas);
    return out;
}

} // namespace rilab
