#pragma once
//
// Discrete sampling primitives over the project RNG.
//

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "rilab/error.hpp"
#include "rilab/rng.hpp"

namespace rilab {

/// Walker/Vose alias table: O(1) draws from a fixed finite law.
class AliasTable {
public:
    AliasTable() = default;

    explicit AliasTable(const std::vector<double>& weights) {
        const std::size_t n = weights.size();
        if (n == 0) throw ConfigError("alias table over an empty support");
        double total = 0;
        for (double w : weights) {
            if (!(w >= 0)) throw ConfigError("negative or NaN weight in alias table");
            total += w;
        }
        if (!(total > 0)) throw ConfigError("alias table weights sum to zero");
        prob_.assign(n, 0.0);
        alias_.assign(n, 0);
        std::vector<double> scaled(n);
        std::vector<std::uint32_t> small, large;
        for (std::size_t i = 0; i < n; ++i) {
            scaled[i] = weights[i] * double(n) / total;
            (scaled[i] < 1.0 ? small : large).push_back(std::uint32_t(i));
        }
        while (!small.empty() && !large.empty()) {
            auto s = small.back();
            small.pop_back();
            auto l = large.back();
            prob_[s] = scaled[s];
            alias_[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if (scaled[l] < 1.0) {
                large.pop_back();
                small.push_back(l);
            }
        }
        for (auto i : large) prob_[i] = 1.0;
        for (auto i : small) prob_[i] = 1.0;
    }

    std::size_t size() const { return prob_.size(); }

    std::size_t sample(Rng& rng) const {
        auto i = rng.below(prob_.size());
        return rng.uniform() < prob_[i] ? i : alias_[i];
    }

private:
    std::vector<double> prob_;
    std::vector<std::uint32_t> alias_;
};

/// Poisson draw; mean 0 gives 0.
inline std::uint64_t sample_poisson(double mean, Rng& rng) {
    if (!(mean >= 0)) throw ConfigError("Poisson mean must be >= 0");
    if (mean == 0) return 0;
    std::poisson_distribution<std::uint64_t> pd(mean);
    return pd(rng);
}

/// Index drawn with probability weights[i] / Σ weights (linear scan, for short supports).
inline std::size_t sample_categorical(const double* weights, std::size_t n, Rng& rng) {
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) total += weights[i];
    if (!(total > 0)) throw InvariantError("categorical weights sum to zero");
    double u = rng.uniform() * total;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (u < weights[i]) return i;
        u -= weights[i];
    }
    return n - 1;
}

} // namespace rilab
