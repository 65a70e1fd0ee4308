#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "rilab/harness.hpp"
#include "rilab/interlace.hpp"
#include "rilab/potential.hpp"

namespace rilab::experiments {

template <int D>
std::vector<int> site_json(const Site<D>& s) {
    return std::vector<int>(s.begin(), s.end());
}

/// K specs separated by ';'.
template <int D>
std::vector<FiniteSet<D>> parse_k_list(const std::string& spec) {
    std::vector<FiniteSet<D>> out;
    std::istringstream is(spec);
    std::string part;
    while (std::getline(is, part, ';')) {
        part = detail::trim(part);
        if (!part.empty()) out.push_back(parse_k_spec<D>(part));
    }
    if (out.empty()) throw ConfigError("no K given");
    return out;
}

/// Display name of the i-th spec in a ';'-separated list.
inline std::string parse_k_list_name(const std::string& spec, std::size_t i) {
    std::istringstream is(spec);
    std::string part;
    std::size_t j = 0;
    while (std::getline(is, part, ';')) {
        part = detail::trim(part);
        if (part.empty()) continue;
        if (j++ == i) return part;
    }
    return spec;
}

template <int D>
FiniteSet<D> parse_single_k(const ExperimentConfig& c) {
    auto ks = parse_k_list<D>(c.k);
    if (ks.size() != 1) throw ConfigError("experiment " + c.experiment + " takes exactly one K");
    return ks.front();
}

template <int D>
PotentialTable<D> potential_for(const FiniteSet<D>& k, const ExperimentConfig& c) {
    PotentialConfig pc;
    pc.cap_tolerance = c.tolerance_cap;
    pc.max_radius = c.cap_radius_max;
    return PotentialTable<D>(k, GreenTable<D>::shared(), pc);
}

/// Throws unless every site of K is at L∞ distance < radius from the window center.
template <int D>
void require_interior(const FiniteSet<D>& k, const Box<D>& w) {
    for (const auto& x : k)
        if (linf_norm<D>(x - w.center) >= w.radius)
            throw ConfigError("K must lie in the interior of the window of radius " + std::to_string(w.radius) +
                              "; " + to_string(x) + " does not");
}

inline nlohmann::ordered_json interval_json(const Interval& v) { return {{"lo", v.lo}, {"hi", v.hi}}; }

inline std::string level_name(double u) { return "u=" + detail::format_double(u); }

/// Checks attached to an estimate: |value - reference| <= z se + systematic.
inline bool within(double value, double reference, double se, double systematic, double z = 3.0) {
    return std::abs(value - reference) <= z * se + systematic;
}

} // namespace rilab::experiments
