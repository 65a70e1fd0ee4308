#pragma once
//
// Small statistics kit for the experiments: running moments, binned
// chi-square goodness of fit, Poisson GOF, and total-variation distance with
// a seeded multinomial bootstrap.
//

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "rilab/error.hpp"
#include "rilab/rng.hpp"

namespace rilab {

/// Welford accumulator.
class RunningStat {
public:
    void add(double x) {
        ++n_;
        double d = x - mean_;
        mean_ += d / double(n_);
        m2_ += d * (x - mean_);
    }
    void merge(const RunningStat& o) {
        if (o.n_ == 0) return;
        if (n_ == 0) {
            *this = o;
            return;
        }
        const double n = double(n_ + o.n_);
        const double d = o.mean_ - mean_;
        mean_ += d * double(o.n_) / n;
        m2_ += o.m2_ + d * d * double(n_) * double(o.n_) / n;
        n_ += o.n_;
    }
    std::uint64_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / double(n_ - 1) : 0.0; }
    double se() const { return n_ > 1 ? std::sqrt(variance() / double(n_)) : 0.0; }

private:
    std::uint64_t n_ = 0;
    double mean_ = 0, m2_ = 0;
};

/// Proportion k/n with its binomial standard error.
struct Proportion {
    double value = 0, se = 0;
};

inline Proportion proportion(std::uint64_t k, std::uint64_t n) {
    if (n == 0) throw ConfigError("proportion over zero trials");
    double p = double(k) / double(n);
    return {p, std::sqrt(p * (1 - p) / double(n))};
}

struct ChiSquareResult {
    double chi2 = 0;
    int dof = 0;
    double p = 0;
    std::size_t bins = 0; // after merging
};

inline double chi_square_survival(double chi2, int dof) {
    if (dof <= 0) return chi2 > 0 ? 0.0 : 1.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * chi2);
}

/// Pearson chi-square of `observed` against `probabilities` (same length,
/// summing to at most 1; any missing mass is treated as an extra bin with
/// zero observations). Adjacent bins are merged left to right until each has
/// expected count >= min_expected; a short last group joins its neighbour.
inline ChiSquareResult chi_square_test(const std::vector<std::uint64_t>& observed, const std::vector<double>& probabilities,
                                       int fitted_parameters = 0, double min_expected = 5.0) {
    if (observed.size() != probabilities.size()) throw ConfigError("observed and expected bins differ in number");
    const double n = double(std::accumulate(observed.begin(), observed.end(), std::uint64_t(0)));
    if (n == 0) throw ConfigError("chi-square test on zero observations");
    std::vector<double> obs(observed.begin(), observed.end()), exp;
    for (double p : probabilities) {
        if (!(p >= 0)) throw ConfigError("negative probability in chi-square reference");
        exp.push_back(p * n);
    }
    double missing = 1.0 - std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
    if (missing > 1e-12) {
        obs.push_back(0);
        exp.push_back(missing * n);
    }
    std::vector<double> mo, me;
    double ao = 0, ae = 0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        ao += obs[i];
        ae += exp[i];
        if (ae >= min_expected) {
            mo.push_back(ao);
            me.push_back(ae);
            ao = ae = 0;
        }
    }
    if (ae > 0 || ao > 0) {
        if (me.empty()) {
            mo.push_back(ao);
            me.push_back(ae);
        } else {
            mo.back() += ao;
            me.back() += ae;
        }
    }
    ChiSquareResult r;
    r.bins = me.size();
    for (std::size_t i = 0; i < me.size(); ++i) {
        if (me[i] > 0) r.chi2 += (mo[i] - me[i]) * (mo[i] - me[i]) / me[i];
        else if (mo[i] > 0) r.chi2 = std::numeric_limits<double>::infinity();
    }
    r.dof = int(r.bins) - 1 - fitted_parameters;
    r.p = std::isinf(r.chi2) ? 0.0 : chi_square_survival(r.chi2, r.dof);
    return r;
}

struct PoissonGof {
    double mean = 0;
    double variance = 0;
    double dispersion = 0; // variance / mean
    double chi2 = 0;
    int dof = 0;
    double p = 0;
};

/// Goodness of fit of integer counts to a Poisson law: with the given mean,
/// or with the sample mean (one fitted parameter) when `mean` is NaN.
inline PoissonGof stats_poisson_gof(const std::vector<std::uint64_t>& counts,
                                    double mean = std::numeric_limits<double>::quiet_NaN()) {
    if (counts.size() < 1000) throw ConfigError("Poisson GOF needs at least 1000 counts");
    RunningStat rs;
    std::uint64_t top = 0;
    for (auto c : counts) {
        rs.add(double(c));
        top = std::max(top, c);
    }
    PoissonGof g;
    g.mean = rs.mean();
    g.variance = rs.variance();
    g.dispersion = g.mean > 0 ? g.variance / g.mean : 0.0;
    if (g.variance == 0) { // degenerate: no Poisson law with positive mean is constant
        g.chi2 = std::numeric_limits<double>::infinity();
        g.p = 0;
        return g;
    }
    const bool fitted = std::isnan(mean);
    const double lambda = fitted ? g.mean : mean;
    if (!(lambda > 0)) throw ConfigError("Poisson mean must be > 0");
    std::vector<std::uint64_t> hist(top + 1, 0);
    for (auto c : counts) ++hist[c];
    std::vector<double> prob(top + 1);
    double pk = std::exp(-lambda);
    for (std::uint64_t k = 0; k <= top; ++k) {
        prob[k] = pk;
        pk *= lambda / double(k + 1);
    }
    auto r = chi_square_test(hist, prob, fitted ? 1 : 0);
    g.chi2 = r.chi2;
    g.dof = r.dof;
    g.p = r.p;
    return g;
}

struct TvEstimate {
    double value = 0;
    double se = 0;     // bootstrap standard deviation
    double bias = 0;   // bootstrap mean minus the point value
    int resamples = 0;
};

namespace detail {

inline double tv(const std::vector<double>& p, const std::vector<double>& q) {
    double s = 0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return 0.5 * s;
}

} // namespace detail

/// ½ Σ |p̂ - p| over a common support, with a multinomial bootstrap from p̂.
inline TvEstimate stats_tv_distance(const std::vector<std::uint64_t>& empirical, const std::vector<double>& reference,
                                    std::uint64_t seed, int resamples = 1000) {
    if (empirical.size() != reference.size()) throw ConfigError("TV distance needs a common support");
    const std::uint64_t n = std::accumulate(empirical.begin(), empirical.end(), std::uint64_t(0));
    if (n == 0) throw ConfigError("TV distance of an empty sample");
    std::vector<double> phat(empirical.size());
    for (std::size_t i = 0; i < phat.size(); ++i) phat[i] = double(empirical[i]) / double(n);
    TvEstimate est;
    est.value = detail::tv(phat, reference);
    est.resamples = resamples;
    if (resamples <= 0) return est;
    Rng rng(seed);
    RunningStat rs;
    std::vector<double> boot(phat.size());
    for (int b = 0; b < resamples; ++b) {
        // multinomial by sequential conditional binomials
        std::uint64_t left = n;
        double mass = 1.0;
        for (std::size_t i = 0; i < phat.size(); ++i) {
            std::uint64_t k = 0;
            if (left > 0 && phat[i] > 0) {
                double q = i + 1 == phat.size() ? 1.0 : std::min(1.0, phat[i] / mass);
                k = std::binomial_distribution<std::uint64_t>(left, q)(rng);
            }
            boot[i] = double(k) / double(n);
            left -= k;
            mass -= phat[i];
            if (mass <= 0) mass = std::numeric_limits<double>::min();
        }
        rs.add(detail::tv(boot, reference));
    }
    est.se = std::sqrt(rs.variance());
    est.bias = rs.mean() - est.value;
    return est;
}

} // namespace rilab
