#pragma once
//
// Occupancy bitset over an L∞ window, with a canonical text dump:
//
//   dim 3; window 0,0,0..4; u 1; seed 42
//   rle 17 2 710
//
// Runs alternate vacant/occupied starting with vacant, over sites in the
// window's row-major order. The coordinate-list form replaces the rle line by
// "coords <count>" and one occupied site per line.
//

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rilab/error.hpp"
#include "rilab/lattice.hpp"

namespace rilab {

template <int D>
class OccupancyField {
public:
    OccupancyField() = default;
    explicit OccupancyField(Box<D> window) : window_(window), size_(window.size()), bits_((size_ + 63) / 64, 0) {}

    const Box<D>& window() const { return window_; }
    std::size_t size() const { return size_; }

    bool test(std::size_t i) const { return (bits_[i >> 6] >> (i & 63)) & 1u; }
    void set(std::size_t i) { bits_[i >> 6] |= std::uint64_t{1} << (i & 63); }
    void reset(std::size_t i) { bits_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }

    /// False outside the window.
    bool occupied(const Site<D>& x) const { return window_.contains(x) && test(window_.index(x)); }
    void set(const Site<D>& x) {
        if (window_.contains(x)) set(window_.index(x));
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto w : bits_) n += std::size_t(std::popcount(w));
        return n;
    }

    bool intersects(const FiniteSet<D>& a) const {
        for (const auto& x : a)
            if (occupied(x)) return true;
        return false;
    }

    OccupancyField& operator|=(const OccupancyField& o) {
        check_same_window(o);
        for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= o.bits_[i];
        return *this;
    }

    bool operator==(const OccupancyField& o) const { return window_ == o.window_ && bits_ == o.bits_; }

    bool subset_of(const OccupancyField& o) const {
        check_same_window(o);
        for (std::size_t i = 0; i < bits_.size(); ++i)
            if (bits_[i] & ~o.bits_[i]) return false;
        return true;
    }

    FiniteSet<D> occupied_set() const {
        std::vector<Site<D>> v;
        for (std::size_t i = 0; i < size_; ++i)
            if (test(i)) v.push_back(window_.site(i));
        return FiniteSet<D>(std::move(v));
    }

private:
    void check_same_window(const OccupancyField& o) const {
        if (!(window_ == o.window_)) throw InvariantError("occupancy fields over different windows");
    }

    Box<D> window_;
    std::size_t size_ = 0;
    std::vector<std::uint64_t> bits_;
};

struct FieldHeader {
    int dim = 0;
    std::vector<int> center;
    int radius = 0;
    double u = 0;
    std::uint64_t seed = 0;
};

namespace detail {

template <int D>
void write_field_header(std::ostream& os, const OccupancyField<D>& f, double u, std::uint64_t seed) {
    os << "dim " << D << "; window ";
    for (int i = 0; i < D; ++i) os << (i ? "," : "") << f.window().center[i];
    std::ostringstream us;
    us.precision(17);
    us << u;
    os << ".." << f.window().radius << "; u " << us.str() << "; seed " << seed << "\n";
}

inline FieldHeader parse_field_header(const std::string& line) {
    FieldHeader h;
    std::string window;
    char semi = 0;
    std::istringstream is(line);
    std::string tag;
    if (!(is >> tag >> h.dim >> semi) || tag != "dim" || semi != ';') throw ConfigError("bad field header: " + line);
    if (!(is >> tag >> window) || tag != "window") throw ConfigError("bad field header: " + line);
    if (window.empty() || window.back() != ';') throw ConfigError("bad field header: " + line);
    window.pop_back();
    auto dots = window.find("..");
    if (dots == std::string::npos) throw ConfigError("bad window in field header: " + window);
    std::istringstream cs(window.substr(0, dots));
    std::string part;
    while (std::getline(cs, part, ',')) h.center.push_back(std::stoi(part));
    h.radius = std::stoi(window.substr(dots + 2));
    std::string rest;
    std::getline(is, rest);
    std::istringstream rs(rest);
    std::string utag, useed, uval;
    if (!(rs >> utag >> uval) || utag != "u" || uval.empty() || uval.back() != ';')
        throw ConfigError("bad field header: " + line);
    uval.pop_back();
    h.u = std::stod(uval);
    if (!(rs >> useed >> h.seed) || useed != "seed") throw ConfigError("bad field header: " + line);
    return h;
}

} // namespace detail

template <int D>
void write_field_rle(std::ostream& os, const OccupancyField<D>& f, double u, std::uint64_t seed) {
    detail::write_field_header(os, f, u, seed);
    os << "rle";
    bool state = false;
    std::size_t run = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f.test(i) != state) {
            os << ' ' << run;
            state = !state;
            run = 0;
        }
        ++run;
    }
    os << ' ' << run << "\n";
}

template <int D>
void write_field_coords(std::ostream& os, const OccupancyField<D>& f, double u, std::uint64_t seed) {
    detail::write_field_header(os, f, u, seed);
    os << "coords " << f.count() << "\n";
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!f.test(i)) continue;
        auto x = f.window().site(i);
        for (int a = 0; a < D; ++a) os << (a ? " " : "") << x[a];
        os << "\n";
    }
}

/// Reads either dump form.
template <int D>
OccupancyField<D> read_field(std::istream& is, FieldHeader* header = nullptr) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("empty field dump");
    auto h = detail::parse_field_header(line);
    if (h.dim != D || int(h.center.size()) != D)
        throw ConfigError("field dump has dim " + std::to_string(h.dim) + ", expected " + std::to_string(D));
    Site<D> c;
    for (int i = 0; i < D; ++i) c[i] = h.center[i];
    OccupancyField<D> f(Box<D>(c, h.radius));
    std::string tag;
    if (!(is >> tag)) throw ConfigError("field dump has no body");
    if (tag == "rle") {
        std::getline(is, line);
        std::istringstream rs(line);
        std::size_t run, pos = 0;
        bool state = false;
        while (rs >> run) {
            if (pos + run > f.size()) throw ConfigError("rle runs exceed the window size");
            if (state)
                for (std::size_t i = pos; i < pos + run; ++i) f.set(i);
            pos += run;
            state = !state;
        }
        if (pos != f.size()) throw ConfigError("rle runs do not cover the window");
    } else if (tag == "coords") {
        std::size_t n;
        if (!(is >> n)) throw ConfigError("coords count missing");
        for (std::size_t k = 0; k < n; ++k) {
            Site<D> x;
            for (int a = 0; a < D; ++a)
                if (!(is >> x[a])) throw ConfigError("truncated coordinate list");
            if (!f.window().contains(x)) throw ConfigError("coordinate outside the window: " + to_string(x));
            f.set(x);
        }
    } else {
        throw ConfigError("unknown field body '" + tag + "'");
    }
    if (header) *header = h;
    return f;
}

} // namespace rilab
