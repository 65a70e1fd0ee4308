#pragma once
//
// n-step transition probabilities of simple random walk by dynamic programming
// on an absorbing L∞ box. Floating mode keeps every slice; exact mode counts
// paths with arbitrary-precision integers (p_n = paths / (2D)^n).
//

#include <boost/multiprecision/cpp_int.hpp>

#include <cstddef>
#include <string>
#include <vector>

#include "rilab/error.hpp"
#include "rilab/lattice.hpp"

namespace rilab {

/// Default ceiling for a single table allocation.
inline constexpr std::size_t kDefaultMemoryCap = std::size_t{1} << 30;

namespace detail {

/// Strides of a Box grid, for stencil loops.
template <int D>
struct GridStrides {
    std::array<std::ptrdiff_t, D> stride{};
    explicit GridStrides(const Box<D>& b) {
        std::ptrdiff_t s = 1;
        for (int i = D - 1; i >= 0; --i) {
            stride[i] = s;
            s *= b.side();
        }
    }
};

/// One DP step: out(y) = (1/2D) Σ_{z~y} in(z) on the box, with mass leaving the
/// box dropped. Returns the dropped mass.
template <int D, class T>
T propagate(const Box<D>& box, const std::vector<T>& in, std::vector<T>& out, const T& inv_degree_or_one) {
    GridStrides<D> g(box);
    std::fill(out.begin(), out.end(), T(0));
    T lost(0);
    for (std::size_t i = 0; i < box.size(); ++i) {
        const T& v = in[i];
        if (v == T(0)) continue;
        auto x = box.site(i);
        T share = v * inv_degree_or_one;
        for (int axis = 0; axis < D; ++axis) {
            int off = x[axis] - box.center[axis];
            if (off > -box.radius) out[i - g.stride[axis]] += share;
            else lost += share;
            if (off < box.radius) out[i + g.stride[axis]] += share;
            else lost += share;
        }
    }
    return lost;
}

} // namespace detail

/// p_n(source, y) for 0 <= n <= horizon and y in the L∞ box of radius R around source.
template <int D>
class HeatKernelTable {
public:
    HeatKernelTable(Site<D> source, int horizon, int radius, std::size_t memory_cap = kDefaultMemoryCap)
        : source_(source), horizon_(horizon), box_(source, radius) {
        if (horizon < 0 || radius < 0) throw ConfigError("heat kernel horizon and radius must be >= 0");
        const double bytes = double(box_.size()) * double(horizon + 1) * sizeof(double);
        if (bytes > double(memory_cap))
            throw ToleranceError("heat kernel table needs " + std::to_string(bytes / (1 << 20)) +
                                 " MiB, above the cap of " + std::to_string(memory_cap >> 20) +
                                 " MiB; reduce the horizon or the box radius");
        slices_.assign(horizon + 1, std::vector<double>(box_.size(), 0.0));
        absorbed_.assign(horizon + 1, 0.0);
        slices_[0][box_.index(source)] = 1.0;
        const double w = 1.0 / (2 * D);
        for (int n = 1; n <= horizon; ++n) {
            absorbed_[n] = absorbed_[n - 1] + detail::propagate<D, double>(box_, slices_[n - 1], slices_[n], w);
        }
    }

    const Site<D>& source() const { return source_; }
    int horizon() const { return horizon_; }
    int radius() const { return box_.radius; }
    const Box<D>& box() const { return box_; }

    /// p_n(source, y); zero outside the tabulated box.
    double operator()(int n, const Site<D>& y) const {
        if (n < 0 || n > horizon_ || !box_.contains(y)) return 0.0;
        return slices_[n][box_.index(y)];
    }

    const std::vector<double>& slice(int n) const { return slices_[n]; }

    double slice_mass(int n) const {
        double s = 0;
        for (double v : slices_[n]) s += v;
        return s;
    }

    /// Cumulative mass absorbed at the box boundary up to step n.
    double absorbed(int n) const { return absorbed_[n]; }

    /// Σ_{n<=horizon} p_n(source, y): a lower bound for g(source, y).
    double green_partial(const Site<D>& y) const {
        double s = 0;
        for (int n = 0; n <= horizon_; ++n) s += (*this)(n, y);
        return s;
    }

private:
    Site<D> source_;
    int horizon_;
    Box<D> box_;
    std::vector<std::vector<double>> slices_;
    std::vector<double> absorbed_;
};

/// Exact path counts: p_n(source, y) = count(n, y) / (2D)^n. The box radius is
/// the horizon, so nothing is absorbed before the last slice.
template <int D>
class ExactHeatKernel {
public:
    using Int = boost::multiprecision::cpp_int;
    using Rat = boost::multiprecision::cpp_rational;

    static constexpr int kMaxHorizon = 20;

    ExactHeatKernel(Site<D> source, int horizon) : source_(source), horizon_(horizon), box_(source, horizon) {
        if (horizon < 0 || horizon > kMaxHorizon)
            throw ConfigError("exact heat kernel supports horizons 0.." + std::to_string(kMaxHorizon));
        counts_.assign(horizon + 1, std::vector<Int>(box_.size(), Int(0)));
        absorbed_.assign(horizon + 1, Int(0));
        counts_[0][box_.index(source)] = 1;
        for (int n = 1; n <= horizon; ++n) {
            // paths leaving the box are counted with multiplicity (2D)^(n - exit step)
            Int lost = detail::propagate<D, Int>(box_, counts_[n - 1], counts_[n], Int(1));
            absorbed_[n] = absorbed_[n - 1] * (2 * D) + lost;
        }
    }

    int horizon() const { return horizon_; }

    const Int& count(int n, const Site<D>& y) const {
        static const Int zero(0);
        if (n < 0 || n > horizon_ || !box_.contains(y)) return zero;
        return counts_[n][box_.index(y)];
    }

    Rat p(int n, const Site<D>& y) const { return Rat(count(n, y), pow_degree(n)); }

    /// Σ_y count(n, y) + absorbed(n) == (2D)^n.
    Int slice_total(int n) const {
        Int s = 0;
        for (const auto& c : counts_[n]) s += c;
        return s;
    }
    const Int& absorbed_count(int n) const { return absorbed_[n]; }

    Rat green_partial(const Site<D>& y) const {
        Rat s = 0;
        for (int n = 0; n <= horizon_; ++n) s += p(n, y);
        return s;
    }

    static Int pow_degree(int n) {
        Int r = 1;
        for (int i = 0; i < n; ++i) r *= (2 * D);
        return r;
    }

private:
    Site<D> source_;
    int horizon_;
    Box<D> box_;
    std::vector<std::vector<Int>> counts_;
    std::vector<Int> absorbed_;
};

/// p_n(source, target) for n <= horizon at a few targets, with two rolling
/// slices; memory O(box) instead of O(box * horizon).
template <int D>
struct HeatKernelSeries {
    std::vector<std::vector<double>> values; // values[target][n]
    std::vector<double> absorbed;            // cumulative absorbed mass per n
};

template <int D>
HeatKernelSeries<D> heat_kernel_series(const Site<D>& source, const std::vector<Site<D>>& targets, int horizon,
                                       int radius, std::size_t memory_cap = kDefaultMemoryCap) {
    Box<D> box(source, radius);
    if (double(box.size()) * 2 * sizeof(double) > double(memory_cap))
        throw ToleranceError("heat kernel series box too large for the memory cap");
    HeatKernelSeries<D> out;
    out.values.assign(targets.size(), std::vector<double>(horizon + 1, 0.0));
    out.absorbed.assign(horizon + 1, 0.0);
    std::vector<double> cur(box.size(), 0.0), next(box.size(), 0.0);
    cur[box.index(source)] = 1.0;
    auto record = [&](int n) {
        for (std::size_t t = 0; t < targets.size(); ++t)
            if (box.contains(targets[t])) out.values[t][n] = cur[box.index(targets[t])];
    };
    record(0);
    for (int n = 1; n <= horizon; ++n) {
        out.absorbed[n] = out.absorbed[n - 1] + detail::propagate<D, double>(box, cur, next, 1.0 / (2 * D));
        cur.swap(next);
        record(n);
    }
    return out;
}

} // namespace rilab
