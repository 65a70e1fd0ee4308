#pragma once
//
// Equilibrium measure of a larger set from the boundary system
//     Σ_{x'∈∂A} g(x - x') e(x') = 1,   x ∈ ∂A,
// reduced by the signed-permutation symmetries of A. Used for windows, where
// the exterior box solve would be both slow and loose.
//

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <memory>
#include <numeric>
#include <vector>

#include "rilab/error.hpp"
#include "rilab/green.hpp"
#include "rilab/interval.hpp"
#include "rilab/lattice.hpp"

namespace rilab {

namespace detail {

/// Signed permutation acting on doubled coordinates about a doubled center.
template <int D>
struct SignedPermutation {
    std::array<int, D> perm{};
    std::array<int, D> sign{};

    /// Image of x, or false if it is not a lattice site.
    bool apply(const Site<D>& x, const Site<D>& center2, Site<D>& out) const {
        for (int i = 0; i < D; ++i) {
            int v = center2[i] + sign[i] * (2 * x[perm[i]] - center2[perm[i]]);
            if (v % 2 != 0) return false;
            out[i] = v / 2;
        }
        return true;
    }
};

template <int D>
std::vector<SignedPermutation<D>> symmetries_of(const FiniteSet<D>& a, const Site<D>& center2) {
    std::vector<SignedPermutation<D>> out;
    std::array<int, D> perm;
    std::iota(perm.begin(), perm.end(), 0);
    do {
        for (int mask = 0; mask < (1 << D); ++mask) {
            SignedPermutation<D> s;
            s.perm = perm;
            for (int i = 0; i < D; ++i) s.sign[i] = (mask >> i) & 1 ? -1 : 1;
            bool ok = true;
            Site<D> y;
            for (const auto& x : a) {
                if (!s.apply(x, center2, y) || !a.contains(y)) {
                    ok = false;
                    break;
                }
            }
            if (ok) out.push_back(s);
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

} // namespace detail

template <int D>
class BoundaryEquilibrium {
public:
    BoundaryEquilibrium(const FiniteSet<D>& a, std::shared_ptr<const GreenTable<D>> green) : green_(std::move(green)) {
        if (a.empty()) throw ConfigError("equilibrium measure of the empty set");
        boundary_ = inner_boundary(a);
        auto [lo, hi] = a.bounding_box();
        Site<D> center2;
        for (int i = 0; i < D; ++i) center2[i] = lo[i] + hi[i];
        auto group = detail::symmetries_of<D>(a, center2);

        const std::size_t nb = boundary_.size();
        orbit_of_.assign(nb, -1);
        for (std::size_t i = 0; i < nb; ++i) {
            if (orbit_of_[i] >= 0) continue;
            int orbit = static_cast<int>(reps_.size());
            reps_.push_back(i);
            Site<D> y;
            for (const auto& s : group) {
                s.apply(boundary_[i], center2, y);
                auto j = index_of(y);
                orbit_of_[j] = orbit;
            }
        }
        const std::size_t m = reps_.size();
        Eigen::MatrixXd mid(m, m), rad(m, m);
        mid.setZero();
        rad.setZero();
        for (std::size_t o = 0; o < m; ++o) {
            const auto& x = boundary_[reps_[o]];
            for (std::size_t j = 0; j < nb; ++j) {
                auto g = green_->at(boundary_[j] - x);
                mid(o, orbit_of_[j]) += g.mid();
                rad(o, orbit_of_[j]) += 0.5 * g.width();
            }
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(mid);
        Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);
        Eigen::VectorXd e = lu.solve(ones);
        for (int it = 0; it < 2; ++it) e += lu.solve(ones - mid * e);
        Eigen::MatrixXd inv = lu.inverse();

        // componentwise: |e - ẽ| <= |A⁻¹|(|1 - Âẽ| + ΔA|ẽ| + ΔA·1·η), η the ∞-norm bound
        Eigen::MatrixXd inv_abs = inv.cwiseAbs();
        const double inv_norm = inv_abs.rowwise().sum().maxCoeff();
        const double rad_norm = rad.rowwise().sum().maxCoeff();
        if (inv_norm * rad_norm >= 0.5)
            throw ToleranceError("green enclosures too wide to invert the boundary system; increase the table radius");
        Eigen::VectorXd r = (ones - mid * e).cwiseAbs() + rad * e.cwiseAbs();
        const double eta = inv_norm * r.maxCoeff() / (1 - inv_norm * rad_norm);
        Eigen::VectorXd err = inv_abs * (r + rad * Eigen::VectorXd::Constant(m, eta));

        std::vector<double> orbit_size(m, 0.0);
        for (std::size_t j = 0; j < nb; ++j) orbit_size[orbit_of_[j]] += 1;

        e_.resize(nb);
        err_.resize(nb);
        for (std::size_t j = 0; j < nb; ++j) {
            e_[j] = e(orbit_of_[j]);
            err_[j] = Interval::up(err(orbit_of_[j]) * (1 + 1e-9) + 1e-15);
            if (e_[j] <= 0) throw InvariantError("nonpositive equilibrium weight at " + to_string(boundary_[j]));
        }
        error_ = *std::max_element(err_.begin(), err_.end());

        // capacity from the two variational principles applied to the trial charge ẽ:
        //   cap >= 2 Σẽ - ẽᵀAẽ            (Thomson)
        //   cap <= ẽᵀAẽ / (min_x (Aẽ)(x))² (Dirichlet, potential of ẽ is >= its minimum on A)
        double sum = 0, quad_hi = 0, pot_lo = std::numeric_limits<double>::infinity(), pot_hi = 0;
        for (std::size_t o = 0; o < m; ++o) {
            double row_hi = 0, row_lo = 0;
            for (std::size_t k = 0; k < m; ++k) {
                row_hi += (mid(o, k) + rad(o, k)) * e(k);
                row_lo += (mid(o, k) - rad(o, k)) * e(k);
            }
            sum += orbit_size[o] * e(o);
            quad_hi += orbit_size[o] * e(o) * row_hi;
            pot_lo = std::min(pot_lo, row_lo);
            pot_hi = std::max(pot_hi, row_hi);
        }
        potential_ = Interval(Interval::down(pot_lo - 1e-12), Interval::up(pot_hi + 1e-12));
        const double slack = 1e-12 * sum;
        cap_ = Interval(Interval::down(2 * sum - quad_hi - slack), Interval::up(quad_hi / (pot_lo * pot_lo) + slack));
        symmetry_order_ = group.size();
    }

    const FiniteSet<D>& boundary() const { return boundary_; }
    /// Point values e(x), x ∈ ∂A, in boundary order.
    const std::vector<double>& values() const { return e_; }
    /// Bound on |e(x) - values()[x]|, per site and its maximum.
    const std::vector<double>& errors() const { return err_; }
    double error() const { return error_; }
    Interval capacity() const { return cap_; }
    /// Range over A of the potential Σ g(·, x') ẽ(x') of the computed charge. By
    /// the maximum principle a walk cloud started from ẽ hits any K ⊆ A with
    /// intensity in cap(K) · potential_range().
    Interval potential_range() const { return potential_; }
    std::size_t orbits() const { return reps_.size(); }
    std::size_t symmetry_order() const { return symmetry_order_; }

    Interval at(const Site<D>& x) const {
        auto it = std::lower_bound(boundary_.begin(), boundary_.end(), x);
        if (it == boundary_.end() || *it != x) return Interval(0.0);
        auto j = static_cast<std::size_t>(it - boundary_.begin());
        return Interval(e_[j]).widened(err_[j]);
    }

private:
    std::size_t index_of(const Site<D>& y) const {
        auto it = std::lower_bound(boundary_.begin(), boundary_.end(), y);
        if (it == boundary_.end() || *it != y) throw InvariantError("symmetry maps the boundary outside itself");
        return static_cast<std::size_t>(it - boundary_.begin());
    }

    std::shared_ptr<const GreenTable<D>> green_;
    FiniteSet<D> boundary_;
    std::vector<int> orbit_of_;
    std::vector<std::size_t> reps_;
    std::vector<double> e_;
    std::vector<double> err_;
    double error_ = 0;
    Interval cap_;
    Interval potential_;
    std::size_t symmetry_order_ = 0;
};

} // namespace rilab
