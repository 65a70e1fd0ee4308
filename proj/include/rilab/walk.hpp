#pragma once
//
// Random-walk engine for transient walks observed on a finite region.
//
// Near the region the walk moves one nearest-neighbour step at a time. Once
// its L∞ distance to the region is at least `jump_min`, it jumps to the exit
// point of a cube centered at its position that misses the region (exact
// exit law). Beyond the L2 radius R_far around the region's center, the walk
// is sent back to the sphere of radius R_far/2 with the Brownian hitting
// probability and exterior Poisson kernel, or declared escaped.
//
// Doob-transformed walks plug in through a policy; cube jumps and sphere
// re-entries are tilted by rejection against the policy's harmonic weight.
//

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <random>

#include "rilab/cube_exit.hpp"
#include "rilab/error.hpp"
#include "rilab/green.hpp"
#include "rilab/lattice.hpp"
#include "rilab/rng.hpp"

namespace rilab {

struct WalkLimits {
    std::uint64_t max_steps = 0; // nearest-neighbour steps; 0 = unbounded
    int stop_radius = 0;         // L∞ radius around the region center; 0 = none
};

enum class WalkEnd {
    escaped,  // never returns to the region
    killed,   // the policy ended the walk (bridge endpoint)
    visitor,  // the visitor asked to stop
    clipped,  // step cap or stop radius reached
};

inline const char* to_string(WalkEnd e) {
    switch (e) {
    case WalkEnd::escaped: return "escaped";
    case WalkEnd::killed: return "killed";
    case WalkEnd::visitor: return "visitor";
    case WalkEnd::clipped: return "clipped";
    }
    return "?";
}

struct WalkStats {
    std::uint64_t steps = 0;   // nearest-neighbour steps taken
    std::uint64_t jumps = 0;   // cube jumps
    std::uint64_t flips = 0;   // far-sphere returns
    bool jumped() const { return jumps + flips > 0; }
};

namespace detail {

template <int D>
std::array<double, D> gaussian_direction(Rng& rng) {
    std::normal_distribution<double> nd;
    std::array<double, D> v;
    double n2 = 0;
    do {
        n2 = 0;
        for (auto& c : v) {
            c = nd(rng);
            n2 += c * c;
        }
    } while (n2 == 0);
    double inv = 1 / std::sqrt(n2);
    for (auto& c : v) c *= inv;
    return v;
}

} // namespace detail

/// Plain simple random walk.
template <int D>
struct SimpleWalk {
    static constexpr bool tilted = false;
    static constexpr bool tilt_bounded_everywhere = true;
    std::optional<Site<D>> step(const Site<D>& y, Rng& rng) const {
        auto m = rng.below(2 * D);
        Site<D> z = y;
        z[m >> 1] += (m & 1) ? 1 : -1;
        return z;
    }
    double tilt(const Site<D>&) const { return 1.0; }
    double tilt_bound(double) const { return 1.0; }
    double far_return(double r, double a) const { return std::pow(a / r, D - 2); }
};

template <int D>
class WalkEngine {
public:
    struct Config {
        int jump_min = 8;
        int max_cube = 0;     // 0: the law table's largest radius
        double far_radius = 0; // 0: max(8 * max_cube, 16 * (region radius + 1))
    };

    WalkEngine(Box<D> region, Config cfg = {}, std::shared_ptr<const CubeExitLaws<D>> laws = CubeExitLaws<D>::shared())
        : region_(region), laws_(std::move(laws)), cfg_(cfg) {
        if (cfg_.jump_min < 8) throw ConfigError("jump_min must be >= 8");
        if (cfg_.max_cube <= 0) cfg_.max_cube = laws_->max_radius();
        if (cfg_.far_radius <= 0)
            cfg_.far_radius = std::max(8.0 * cfg_.max_cube, 16.0 * (region_.radius + 1));
        far_return_radius_ = cfg_.far_radius / 2;
    }

    const Box<D>& region() const { return region_; }
    const Config& config() const { return cfg_; }
    double far_radius() const { return cfg_.far_radius; }
    double return_radius() const { return far_return_radius_; }

    /// Heuristic size of the error committed by the Brownian far-sphere step,
    /// per flip, on events inside the region: (chance to come back) × O(1/a).
    double flip_error_per_flip() const {
        double a = far_return_radius_;
        return (region_.radius + 1) / a * (D / a);
    }

    /// Runs the walk from `start`. `visit(site, exact)` is called for the start
    /// and after every move; `exact` is false right after a jump or flip. It
    /// returns false to stop the walk.
    template <class Policy, class Visit>
    WalkEnd run(Site<D> start, const Policy& policy, Visit&& visit, Rng& rng, WalkLimits limits = {},
                WalkStats* stats = nullptr) const {
        WalkStats local;
        WalkStats& st = stats ? *stats : local;
        Site<D> y = start;
        if (!visit(y, true)) return WalkEnd::visitor;
        for (;;) {
            if (limits.max_steps && st.steps >= limits.max_steps) return WalkEnd::clipped;
            if (limits.stop_radius && linf_norm<D>(y - region_.center) > limits.stop_radius) return WalkEnd::clipped;
            const int dist = region_.distance(y);
            if (dist >= cfg_.jump_min) {
                const double r = l2_norm<D>(y - region_.center);
                if (r >= cfg_.far_radius) {
                    ++st.flips;
                    if (!(rng.uniform() < policy.far_return(r, far_return_radius_))) return WalkEnd::escaped;
                    y = far_entry(y, policy, rng);
                } else {
                    y = jump(y, dist, policy, rng);
                    ++st.jumps;
                }
                if (!visit(y, false)) return WalkEnd::visitor;
                continue;
            }
            auto z = policy.step(y, rng);
            if (!z) return WalkEnd::killed;
            y = *z;
            ++st.steps;
            if (!visit(y, true)) return WalkEnd::visitor;
        }
    }

private:
    template <class Policy>
    Site<D> jump(const Site<D>& y, int dist, const Policy& policy, Rng& rng) const {
        if constexpr (!Policy::tilted) {
            // any cube missing the region will do
            return y + laws_->at_most(std::min(cfg_.max_cube, dist - 1))->sample(rng);
        } else if constexpr (Policy::tilt_bounded_everywhere) {
            const auto* law = laws_->at_most(std::min(cfg_.max_cube, dist - 1));
            const double bound = policy.tilt_bound(0.0);
            for (;;) {
                Site<D> e = y + law->sample(rng);
                double w = policy.tilt(e);
                if (w > bound) throw InvariantError("tilt exceeds its bound at " + to_string(e));
                if (rng.uniform() * bound < w) return e;
            }
        } else {
            // s <= (dist-2)/2 keeps exit points at L∞ distance >= dist/2, where the tilt bound is valid
            const auto* law = laws_->at_most(std::min(cfg_.max_cube, (dist - 2) / 2));
            const double bound = policy.tilt_bound(double(dist - law->radius() - 1));
            for (;;) {
                Site<D> e = y + law->sample(rng);
                double w = policy.tilt(e);
                if (w > bound) throw InvariantError("tilt exceeds its bound at " + to_string(e));
                if (rng.uniform() * bound < w) return e;
            }
        }
    }

    /// Entry point on the sphere of radius a, drawn from the exterior Poisson
    /// kernel at y (tilted by the policy weight when the policy is tilted).
    template <class Policy>
    Site<D> far_entry(const Site<D>& y, const Policy& policy, Rng& rng) const {
        const double a = far_return_radius_;
        std::array<double, D> z;
        double r2 = 0;
        for (int i = 0; i < D; ++i) {
            z[i] = double(y[i] - region_.center[i]);
            r2 += z[i] * z[i];
        }
        const double r = std::sqrt(r2);
        double bound = 1.0;
        if constexpr (Policy::tilted) bound = policy.tilt_bound(a - std::sqrt(double(D)) * (region_.radius + 1));
        for (;;) {
            auto u = detail::gaussian_direction<D>(rng);
            double d2 = 0;
            for (int i = 0; i < D; ++i) d2 += (a * u[i] - z[i]) * (a * u[i] - z[i]);
            double accept = std::pow((r - a) / std::sqrt(d2), D);
            Site<D> e;
            for (int i = 0; i < D; ++i) e[i] = region_.center[i] + int(std::lround(a * u[i]));
            if constexpr (Policy::tilted) {
                double w = policy.tilt(e);
                if (w > bound) throw InvariantError("tilt exceeds its bound at " + to_string(e));
                accept *= w / bound;
            }
            if (rng.uniform() < accept) return e;
        }
    }

    Box<D> region_;
    std::shared_ptr<const CubeExitLaws<D>> laws_;
    Config cfg_;
    double far_return_radius_ = 0;
};

/// Walk with the Doob transform by h = g(· - target): transitions
/// p(y,z) g(z - target) / g(y - target), killed at each visit to the target
/// with probability 1/g(0). From x this realizes Σ_n p_n(x,target)/g(x,target)
/// times the n-step bridge to the target.
template <int D>
class GreenTiltedWalk {
public:
    static constexpr bool tilted = true;
    static constexpr bool tilt_bounded_everywhere = false;

    GreenTiltedWalk(Site<D> target, const GreenTable<D>& green) : target_(target), green_(&green) {
        kill_ = 1.0 / green.mid(origin<D>());
    }

    std::optional<Site<D>> step(const Site<D>& y, Rng& rng) const {
        if (y == target_ && rng.uniform() < kill_) return std::nullopt;
        auto nb = Lattice<D>::neighbors(y);
        std::array<double, 2 * D> w;
        double total = 0;
        for (int i = 0; i < 2 * D; ++i) total += (w[i] = green_->mid(nb[i] - target_));
        double u = rng.uniform() * total;
        for (int i = 0; i < 2 * D - 1; ++i) {
            if (u < w[i]) return nb[i];
            u -= w[i];
        }
        return nb[2 * D - 1];
    }

    double tilt(const Site<D>& e) const { return green_->mid(e - target_); }

    /// Upper bound of g over sites at L2 distance >= r from the target.
    double tilt_bound(double r) const {
        if (r < GreenEnvelope<D>::kEnvelopeMinRadius) throw InvariantError("tilt bound requested too close to the target");
        return 1.001 * GreenEnvelope<D>::at(r).hi;
    }

    double far_return(double, double) const { return 1.0; }

    const Site<D>& target() const { return target_; }

private:
    Site<D> target_;
    const GreenTable<D>* green_;
    double kill_;
};

} // namespace rilab
