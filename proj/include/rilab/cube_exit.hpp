#pragma once
//
// Exit law of simple random walk started at the center of the cube
// {|y|_∞ <= s}. The walk leaves through a uniformly chosen face; the exit
// point (s+1, a) on a face has probability G_C(0, (s, a)) / (2D), G_C the
// Green function killed outside the cube. Expanding G_C in the Dirichlet sine
// basis of the D-1 transverse axes leaves a one-dimensional problem per mode
// with closed form D / cosh((s+1)θ), cosh θ = D - Σ cos(πk_i/L), L = 2s+2.
//

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "rilab/error.hpp"
#include "rilab/lattice.hpp"
#include "rilab/rng.hpp"
#include "rilab/sampling.hpp"

namespace rilab {

template <int D>
class CubeExitLaw {
public:
    explicit CubeExitLaw(int s) : s_(s) {
        if (s < 0) throw ConfigError("cube radius must be >= 0");
        constexpr int n = D - 1;
        const int L = 2 * s + 2;
        const int q = s + 1;     // odd modes k = 1, 3, ..., 2s+1 (even modes vanish at the center)
        const int m = 2 * s + 1; // face positions a = -s..s

        std::vector<double> cosk(q), basis(std::size_t(q) * m);
        for (int j = 0; j < q; ++j) {
            int k = 2 * j + 1;
            cosk[j] = std::cos(M_PI * k / L);
            double center = (j % 2 == 0) ? 1.0 : -1.0; // sin(πk/2)
            for (int a = 0; a < m; ++a)
                basis[std::size_t(j) * m + a] = (2.0 / L) * center * std::sin(M_PI * k * (a + 1) / double(L));
        }

        // mode weights 1/cosh((s+1)θ_k) on the q^n grid
        std::vector<int> shape(n, q);
        std::vector<double> cur(pow_size(q, n));
        std::vector<int> idx(n, 0);
        for (std::size_t i = 0; i < cur.size(); ++i) {
            std::size_t r = i;
            double c = D;
            for (int d = n - 1; d >= 0; --d) {
                idx[d] = int(r % q);
                r /= q;
                c -= cosk[idx[d]];
            }
            double x = (s + 1) * std::acosh(c);
            double ex = std::exp(-x);
            cur[i] = 2 * ex / (1 + ex * ex);
        }

        // transform one transverse axis at a time: mode index -> position
        for (int d = 0; d < n; ++d) {
            std::size_t outer = 1, inner = 1;
            for (int e = 0; e < d; ++e) outer *= shape[e];
            for (int e = d + 1; e < n; ++e) inner *= shape[e];
            std::vector<double> next(outer * m * inner, 0.0);
            for (std::size_t o = 0; o < outer; ++o)
                for (int k = 0; k < q; ++k) {
                    const double* src = &cur[(o * q + k) * inner];
                    for (int a = 0; a < m; ++a) {
                        double w = basis[std::size_t(k) * m + a];
                        double* dst = &next[(o * m + a) * inner];
                        for (std::size_t i = 0; i < inner; ++i) dst[i] += w * src[i];
                    }
                }
            cur.swap(next);
            shape[d] = m;
        }

        // cur now holds G_C(0,(s,a)) / D; face probability is G_C/(2D) = cur/2
        double total = 0;
        for (auto& v : cur) total += (v = std::max(0.0, 0.5 * v));
        mass_defect_ = std::abs(total * 2 * D - 1.0);
        if (mass_defect_ > 1e-9)
            throw InvariantError("cube exit law for s=" + std::to_string(s) + " has total mass " +
                                 std::to_string(total * 2 * D));
        for (auto& v : cur) v /= total;
        face_ = cur;
        alias_ = AliasTable(cur);
    }

    int radius() const { return s_; }
    /// |total mass - 1| before normalization.
    double mass_defect() const { return mass_defect_; }

    /// Exit probability of the displacement y (|y|_∞ = s+1 on exactly one axis).
    double probability(const Site<D>& y) const {
        int axis = -1;
        for (int i = 0; i < D; ++i)
            if (std::abs(y[i]) == s_ + 1) {
                if (axis >= 0) return 0.0;
                axis = i;
            } else if (std::abs(y[i]) > s_) {
                return 0.0;
            }
        if (axis < 0) return 0.0;
        std::size_t idx = 0;
        for (int i = 0; i < D; ++i)
            if (i != axis) idx = idx * (2 * s_ + 1) + std::size_t(y[i] + s_);
        return face_[idx] / (2 * D);
    }

    /// Displacement from the center to the exit point.
    Site<D> sample(Rng& rng) const {
        auto face = rng.below(2 * D);
        int axis = int(face >> 1);
        int sign = (face & 1) ? 1 : -1;
        std::size_t idx = alias_.sample(rng);
        Site<D> y{};
        const std::size_t m = 2 * s_ + 1;
        for (int i = D - 1; i >= 0; --i) {
            if (i == axis) continue;
            y[i] = int(idx % m) - s_;
            idx /= m;
        }
        y[axis] = sign * (s_ + 1);
        return y;
    }

private:
    static std::size_t pow_size(int b, int e) {
        std::size_t r = 1;
        for (int i = 0; i < e; ++i) r *= std::size_t(b);
        return r;
    }

    int s_;
    std::vector<double> face_;
    AliasTable alias_;
    double mass_defect_ = 0;
};

/// Cube exit laws at radii 1, 2, 3, 4, 6, 8, 12, ... up to max_radius.
template <int D>
class CubeExitLaws {
public:
    explicit CubeExitLaws(int max_radius = default_max_radius()) {
        for (int s = 1; s <= max_radius; s *= 2) {
            laws_.emplace_back(s);
            if (s >= 2 && s + s / 2 <= max_radius) laws_.emplace_back(s + s / 2);
        }
    }

    int max_radius() const { return laws_.back().radius(); }

    /// Largest tabulated law with radius <= r, or nullptr if r < 1.
    const CubeExitLaw<D>* at_most(int r) const {
        const CubeExitLaw<D>* best = nullptr;
        for (const auto& l : laws_)
            if (l.radius() <= r) best = &l;
        return best;
    }

    static int default_max_radius() { return D == 3 ? 256 : (D == 4 ? 64 : 16); }

    static std::shared_ptr<const CubeExitLaws> shared(int max_radius = default_max_radius()) {
        static std::mutex mu;
        static std::map<int, std::shared_ptr<const CubeExitLaws>> cache;
        std::lock_guard<std::mutex> lock(mu);
        auto& slot = cache[max_radius];
        if (!slot) slot = std::make_shared<const CubeExitLaws>(max_radius);
        return slot;
    }

private:
    std::vector<CubeExitLaw<D>> laws_;
};

} // namespace rilab
