#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace rilab {

/// Closed interval [lo, hi] of doubles. Arithmetic rounds outward by one ulp
/// so that enclosures survive floating-point evaluation.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    constexpr Interval() = default;
    constexpr Interval(double v) : lo(v), hi(v) {}
    constexpr Interval(double l, double h) : lo(l), hi(h) {}

    double mid() const { return 0.5 * (lo + hi); }
    double width() const { return hi - lo; }
    bool contains(double v) const { return lo <= v && v <= hi; }
    bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
    bool overlaps(const Interval& o) const { return lo <= o.hi && o.lo <= hi; }
    bool valid() const { return lo <= hi; }

    Interval widened(double eps) const { return {down(lo - eps), up(hi + eps)}; }
    Interval clamped(double a, double b) const { return {std::clamp(lo, a, b), std::clamp(hi, a, b)}; }

    static double down(double v) { return std::nextafter(v, -std::numeric_limits<double>::infinity()); }
    static double up(double v) { return std::nextafter(v, std::numeric_limits<double>::infinity()); }

    Interval& operator+=(const Interval& o) {
        lo = down(lo + o.lo);
        hi = up(hi + o.hi);
        return *this;
    }
};

inline Interval operator+(Interval a, const Interval& b) { return a += b; }

inline Interval operator-(const Interval& a, const Interval& b) {
    return {Interval::down(a.lo - b.hi), Interval::up(a.hi - b.lo)};
}

inline Interval operator*(const Interval& a, const Interval& b) {
    double c[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
    return {Interval::down(*std::min_element(c, c + 4)), Interval::up(*std::max_element(c, c + 4))};
}

inline Interval operator/(const Interval& a, const Interval& b) {
    // caller guarantees 0 ∉ b
    double c[4] = {a.lo / b.lo, a.lo / b.hi, a.hi / b.lo, a.hi / b.hi};
    return {Interval::down(*std::min_element(c, c + 4)), Interval::up(*std::max_element(c, c + 4))};
}

inline Interval hull(const Interval& a, const Interval& b) { return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)}; }

inline std::ostream& operator<<(std::ostream& os, const Interval& v) {
    return os << "[" << v.lo << ", " << v.hi << "]";
}

} // namespace rilab
