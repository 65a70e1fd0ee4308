#pragma once
//
// Green function g(0, z) of simple random walk on Z^D as an interval field.
// Inside an L∞ box it solves (I - P) g = δ_0 with the outer layer clamped to
// the far-field envelope; outside the box the envelope itself is returned.
//

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "rilab/dirichlet.hpp"
#include "rilab/interval.hpp"
#include "rilab/lattice.hpp"

namespace rilab {

/// g(z) ~ c_D |z|^(2-D), c_D = (D/2) Γ(D/2 - 1) π^(-D/2).
template <int D>
double green_asymptotic_constant() {
    return 0.5 * D * std::tgamma(0.5 * D - 1.0) * std::pow(M_PI, -0.5 * D);
}

/// Far-field envelope c_D |z|^(2-D) (1 ± κ/|z|^2), used where |z|_2 >= kEnvelopeMinRadius.
template <int D>
struct GreenEnvelope {
    static constexpr double kappa = 0.5;
    static constexpr double kEnvelopeMinRadius = 4.0;

    static double leading(double r) { return green_asymptotic_constant<D>() * std::pow(r, 2.0 - D); }

    static Interval at(double r) {
        double lead = leading(r);
        double rel = kappa / (r * r);
        return Interval(lead * (1 - rel), lead * (1 + rel)).widened(0);
    }
};

struct GreenConfig {
    int radius = 32;
    double solver_tolerance = 1e-13;
};

template <int D>
class GreenTable {
public:
    explicit GreenTable(GreenConfig cfg = {}) : cfg_(cfg), box_(origin<D>(), cfg.radius + 1) {
        if (cfg.radius < int(GreenEnvelope<D>::kEnvelopeMinRadius) + 2)
            throw ConfigError("green table radius too small for the far-field envelope");
        DirichletGrid<D> grid(box_);
        std::vector<double> source(box_.size(), 0.0);
        source[box_.index(origin<D>())] = 1.0;
        lo_.assign(box_.size(), 0.0);
        hi_.assign(box_.size(), 0.0);
        for (std::size_t i = 0; i < box_.size(); ++i) {
            if (!grid.is_fixed(i)) continue;
            auto env = GreenEnvelope<D>::at(l2_norm<D>(box_.site(i)));
            lo_[i] = env.lo;
            hi_[i] = env.hi;
        }
        rep_lo_ = grid.solve(lo_, source, cfg.solver_tolerance);
        rep_hi_ = grid.solve(hi_, source, cfg.solver_tolerance);
        for (std::size_t i = 0; i < box_.size(); ++i) {
            if (grid.is_fixed(i)) continue;
            lo_[i] = Interval::down(lo_[i] - rep_lo_.error_bound);
            hi_[i] = Interval::up(hi_[i] + rep_hi_.error_bound);
        }
    }

    int radius() const { return cfg_.radius; }
    const SolveReport& report_lower() const { return rep_lo_; }
    const SolveReport& report_upper() const { return rep_hi_; }

    /// g(0, z) enclosure.
    Interval at(const Site<D>& z) const {
        if (box_.contains(z)) {
            auto i = box_.index(z);
            return {lo_[i], hi_[i]};
        }
        return GreenEnvelope<D>::at(l2_norm<D>(z));
    }

    /// g(x, y) = g(0, y - x).
    Interval at(const Site<D>& x, const Site<D>& y) const { return at(y - x); }

    double mid(const Site<D>& z) const {
        if (box_.contains(z)) {
            auto i = box_.index(z);
            return 0.5 * (lo_[i] + hi_[i]);
        }
        return GreenEnvelope<D>::leading(l2_norm<D>(z));
    }

    /// Largest interval width over interior sites of the box.
    double max_width() const {
        double w = 0;
        for (std::size_t i = 0; i < box_.size(); ++i) w = std::max(w, hi_[i] - lo_[i]);
        return w;
    }

    /// Process-wide cached table per radius (the construction is the expensive part).
    static std::shared_ptr<const GreenTable> shared(int radius = default_radius()) {
        static std::mutex mu;
        static std::map<int, std::shared_ptr<const GreenTable>> cache;
        std::lock_guard<std::mutex> lock(mu);
        auto& slot = cache[radius];
        if (!slot) slot = std::make_shared<const GreenTable>(GreenConfig{radius});
        return slot;
    }

    static int default_radius() { return D == 3 ? 32 : (D == 4 ? 14 : 8); }

private:
    GreenConfig cfg_;
    Box<D> box_;
    std::vector<double> lo_, hi_;
    SolveReport rep_lo_, rep_hi_;
};

/// Enclosure of g(x, x'), failing when it is wider than `tolerance`.
template <int D>
Interval green(const Site<D>& x, const Site<D>& xp, const GreenTable<D>& table, double tolerance = 1e-4) {
    auto v = table.at(x, xp);
    if (v.width() > tolerance)
        throw ToleranceError("green interval width " + std::to_string(v.width()) + " exceeds tolerance " +
                             std::to_string(tolerance) + "; increase the table radius");
    return v;
}

} // namespace rilab
