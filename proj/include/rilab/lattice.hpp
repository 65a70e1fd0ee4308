#pragma once
//
// The graph layer: sites of Z^D (D >= 3), adjacency, L1 balls, L∞ boxes,
// vertex boundaries and translations.
//

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "rilab/error.hpp"

namespace rilab {

template <int D>
using Site = std::array<int, D>;

template <int D>
constexpr Site<D> origin() { return Site<D>{}; }

template <int D>
constexpr Site<D> unit(int axis, int sign = 1) {
    Site<D> s{};
    s[axis] = sign;
    return s;
}

// Site arithmetic is written against std::array<int, N> so that N deduces.

template <std::size_t N>
constexpr std::array<int, N> operator+(std::array<int, N> a, const std::array<int, N>& b) {
    for (std::size_t i = 0; i < N; ++i) a[i] += b[i];
    return a;
}

template <std::size_t N>
constexpr std::array<int, N> operator-(std::array<int, N> a, const std::array<int, N>& b) {
    for (std::size_t i = 0; i < N; ++i) a[i] -= b[i];
    return a;
}

template <int D>
int l1_norm(const Site<D>& s) {
    int n = 0;
    for (int v : s) n += std::abs(v);
    return n;
}

template <int D>
int linf_norm(const Site<D>& s) {
    int n = 0;
    for (int v : s) n = std::max(n, std::abs(v));
    return n;
}

template <int D>
double l2_norm(const Site<D>& s) {
    double n = 0;
    for (int v : s) n += double(v) * v;
    return std::sqrt(n);
}

template <int D>
int l1_distance(const Site<D>& a, const Site<D>& b) { return l1_norm<D>(a - b); }

template <std::size_t N>
std::string to_string(const std::array<int, N>& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < N; ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + ")";
}

struct SiteHash {
    template <std::size_t N>
    std::size_t operator()(const std::array<int, N>& s) const noexcept {
        std::uint64_t h = 0x9E3779B97F4A7C15ull;
        for (int v : s) {
            h ^= static_cast<std::uint32_t>(v) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
        }
        return static_cast<std::size_t>(h);
    }
};

/// Z^D with nearest-neighbour adjacency. Only dimensions >= 3 (transient) are allowed.
template <int D>
struct Lattice {
    static_assert(D >= 3, "simple random walk on Z^d is recurrent for d <= 2");
    static constexpr int dim = D;
    static constexpr int degree = 2 * D;

    /// x ± e_i, axis-major, minus before plus.
    static std::array<Site<D>, 2 * D> neighbors(const Site<D>& x) {
        std::array<Site<D>, 2 * D> out;
        for (int axis = 0; axis < D; ++axis) {
            out[2 * axis] = x;
            out[2 * axis][axis] -= 1;
            out[2 * axis + 1] = x;
            out[2 * axis + 1][axis] += 1;
        }
        return out;
    }
};

/// Runtime check used wherever the dimension comes from user input.
inline void check_dimension(int dim) {
    if (dim < 3) throw ConfigError("dimension must be >= 3 (got " + std::to_string(dim) + ")");
}

/// Finite vertex set: sorted, deduplicated, with hashed membership.
template <int D>
class FiniteSet {
public:
    FiniteSet() = default;

    explicit FiniteSet(std::vector<Site<D>> sites) : sites_(std::move(sites)) {
        std::sort(sites_.begin(), sites_.end());
        sites_.erase(std::unique(sites_.begin(), sites_.end()), sites_.end());
        members_.reserve(sites_.size() * 2);
        members_.insert(sites_.begin(), sites_.end());
        for (const auto& x : sites_)
            for (int i = 0; i < D; ++i) {
                lo_[i] = std::min(lo_[i], x[i]);
                hi_[i] = std::max(hi_[i], x[i]);
            }
    }

    FiniteSet(std::initializer_list<Site<D>> sites) : FiniteSet(std::vector<Site<D>>(sites)) {}

    bool contains(const Site<D>& x) const {
        for (int i = 0; i < D; ++i)
            if (x[i] < lo_[i] || x[i] > hi_[i]) return false;
        return members_.count(x) != 0;
    }
    std::size_t size() const { return sites_.size(); }
    bool empty() const { return sites_.empty(); }
    const std::vector<Site<D>>& sites() const { return sites_; }
    auto begin() const { return sites_.begin(); }
    auto end() const { return sites_.end(); }
    const Site<D>& operator[](std::size_t i) const { return sites_[i]; }

    bool operator==(const FiniteSet& o) const { return sites_ == o.sites_; }

    bool is_subset_of(const FiniteSet& o) const {
        return std::all_of(sites_.begin(), sites_.end(), [&](const Site<D>& s) { return o.contains(s); });
    }

    /// Componentwise min and max over the set.
    std::pair<Site<D>, Site<D>> bounding_box() const {
        if (sites_.empty()) return {Site<D>{}, Site<D>{}};
        return {lo_, hi_};
    }

private:
    static constexpr Site<D> filled(int v) {
        Site<D> s{};
        for (auto& c : s) c = v;
        return s;
    }

    std::vector<Site<D>> sites_;
    Site<D> lo_ = filled(std::numeric_limits<int>::max());
    Site<D> hi_ = filled(std::numeric_limits<int>::min());
    std::unordered_set<Site<D>, SiteHash> members_;
};

/// L∞ box {y : |y - center|_∞ <= radius}. Doubles as a dense grid index
/// (row-major, last coordinate fastest).
template <int D>
struct Box {
    Site<D> center{};
    int radius = 0;

    Box() = default;
    Box(Site<D> c, int r) : center(c), radius(r) {}

    int side() const { return 2 * radius + 1; }

    std::size_t size() const {
        std::size_t n = 1;
        for (int i = 0; i < D; ++i) n *= static_cast<std::size_t>(side());
        return n;
    }

    bool contains(const Site<D>& x) const {
        for (int i = 0; i < D; ++i)
            if (std::abs(x[i] - center[i]) > radius) return false;
        return true;
    }

    /// L∞ distance from x to the box (0 inside).
    int distance(const Site<D>& x) const {
        int d = 0;
        for (int i = 0; i < D; ++i) d = std::max(d, std::abs(x[i] - center[i]) - radius);
        return std::max(d, 0);
    }

    std::size_t index(const Site<D>& x) const {
        std::size_t idx = 0;
        for (int i = 0; i < D; ++i)
            idx = idx * static_cast<std::size_t>(side()) + static_cast<std::size_t>(x[i] - center[i] + radius);
        return idx;
    }

    Site<D> site(std::size_t idx) const {
        Site<D> x{};
        for (int i = D - 1; i >= 0; --i) {
            x[i] = static_cast<int>(idx % static_cast<std::size_t>(side())) - radius + center[i];
            idx /= static_cast<std::size_t>(side());
        }
        return x;
    }

    /// Site on the box's inner vertex boundary (|y - center|_∞ == radius).
    bool on_boundary(const Site<D>& x) const { return contains(x) && linf_norm<D>(x - center) == radius; }

    FiniteSet<D> to_set() const {
        std::vector<Site<D>> v;
        v.reserve(size());
        for (std::size_t i = 0; i < size(); ++i) v.push_back(site(i));
        return FiniteSet<D>(std::move(v));
    }

    bool operator==(const Box& o) const { return center == o.center && radius == o.radius; }
};

/// All sites at L1 distance <= t from x.
template <int D>
FiniteSet<D> ball(const Site<D>& x, int t) {
    if (t < 0) throw ConfigError("ball radius must be >= 0");
    std::vector<Site<D>> out;
    Box<D> hull(x, t);
    for (std::size_t i = 0; i < hull.size(); ++i) {
        auto y = hull.site(i);
        if (l1_distance<D>(x, y) <= t) out.push_back(y);
    }
    return FiniteSet<D>(std::move(out));
}

/// |B(x,t)| in the L1 metric, counted without enumeration.
template <int D>
std::uint64_t ball_size(int t) {
    // number of points of Z^D with |y|_1 <= t: sum_k 2^k C(D,k) C(t,k)
    std::uint64_t total = 0;
    for (int k = 0; k <= std::min(D, t); ++k) {
        std::uint64_t cd = 1, ct = 1;
        for (int j = 0; j < k; ++j) {
            cd = cd * static_cast<std::uint64_t>(D - j) / static_cast<std::uint64_t>(j + 1);
            ct = ct * static_cast<std::uint64_t>(t - j) / static_cast<std::uint64_t>(j + 1);
        }
        total += (std::uint64_t{1} << k) * cd * ct;
    }
    return total;
}

/// {x ∈ A : some neighbour of x lies outside A}.
template <int D>
FiniteSet<D> inner_boundary(const FiniteSet<D>& a) {
    std::vector<Site<D>> out;
    for (const auto& x : a) {
        for (const auto& y : Lattice<D>::neighbors(x)) {
            if (!a.contains(y)) {
                out.push_back(x);
                break;
            }
        }
    }
    return FiniteSet<D>(std::move(out));
}

template <int D>
FiniteSet<D> translate(const FiniteSet<D>& a, const Site<D>& v) {
    std::vector<Site<D>> out;
    out.reserve(a.size());
    for (const auto& x : a) out.push_back(x + v);
    return FiniteSet<D>(std::move(out));
}

template <int D>
std::size_t internal_edge_count(const FiniteSet<D>& a) {
    std::size_t e = 0;
    for (const auto& x : a)
        for (int axis = 0; axis < D; ++axis)
            if (a.contains(x + unit<D>(axis))) ++e;
    return e;
}

struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
        if (d == 0) throw InvariantError("zero denominator");
        auto g = std::gcd(num, den);
        if (g != 0) {
            num /= g;
            den /= g;
        }
        if (den < 0) {
            num = -num;
            den = -den;
        }
    }
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
    bool operator<(const Rational& o) const {
        return static_cast<__int128>(num) * o.den < static_cast<__int128>(o.num) * den;
    }
};

struct IsoperimetricRatio {
    Rational exact;      // |∂A| / |A| in lowest terms
    std::size_t boundary = 0;
    std::size_t volume = 0;
    double approx() const { return exact.value(); }
};

template <int D>
IsoperimetricRatio isoperimetric_ratio(const FiniteSet<D>& a) {
    if (a.empty()) throw ConfigError("isoperimetric ratio of the empty set is undefined");
    auto b = inner_boundary(a).size();
    return {Rational(static_cast<std::int64_t>(b), static_cast<std::int64_t>(a.size())), b, a.size()};
}

// FiniteSet text format: first line "dim=<d>", then one site per line.

template <int D>
void write_finite_set(std::ostream& os, const FiniteSet<D>& a) {
    os << "dim=" << D << "\n";
    for (const auto& s : a) {
        for (int i = 0; i < D; ++i) os << (i ? " " : "") << s[i];
        os << "\n";
    }
}

template <int D>
FiniteSet<D> read_finite_set(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("dim=", 0) != 0)
        throw ConfigError("finite set file must start with 'dim=<d>'");
    int dim = std::stoi(line.substr(4));
    if (dim != D)
        throw ConfigError("finite set has dim=" + std::to_string(dim) + " but lattice has dim=" + std::to_string(D));
    std::vector<Site<D>> out;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        Site<D> s{};
        for (int i = 0; i < D; ++i)
            if (!(ls >> s[i])) throw ConfigError("bad site on line " + std::to_string(lineno));
        std::string extra;
        if (ls >> extra) throw ConfigError("too many coordinates on line " + std::to_string(lineno));
        out.push_back(s);
    }
    return FiniteSet<D>(std::move(out));
}

} // namespace rilab
