#pragma once
//
// Successive over-relaxation for the discrete Dirichlet problem
//     u(y) = (1/2D) Σ_{z~y} u(z) + f(y)   for free y,
//     u(y) = given                         for fixed y,
// on an L∞ box whose outermost layer is always fixed.
//

#include <cmath>
#include <cstdint>
#include <vector>

#include "rilab/heat_kernel.hpp"
#include "rilab/lattice.hpp"

namespace rilab {

struct SolveReport {
    int sweeps = 0;
    double residual = 0.0;    // max |u - (Pu + f)| over free sites after the last sweep
    double error_bound = 0.0; // residual * D * (R+1)^2, a bound on |u - u_exact|
};

template <int D>
class DirichletGrid {
public:
    /// `box` includes the fixed outer layer.
    explicit DirichletGrid(Box<D> box) : box_(box), fixed_(box.size(), 0) {
        for (std::size_t i = 0; i < box_.size(); ++i)
            if (box_.on_boundary(box_.site(i))) fixed_[i] = 1;
    }

    const Box<D>& box() const { return box_; }

    void fix(const Site<D>& y) { fixed_[box_.index(y)] = 1; }
    bool is_fixed(std::size_t i) const { return fixed_[i] != 0; }

    /// SOR sweeps until the residual drops below `tolerance` (or `max_sweeps`).
    SolveReport solve(std::vector<double>& u, const std::vector<double>& source, double tolerance = 1e-13,
                      int max_sweeps = 200000) const {
        build_free_list();
        detail::GridStrides<D> g(box_);
        const double w = 1.0 / (2 * D);
        const double n = box_.side();
        const double omega = 2.0 / (1.0 + std::sin(M_PI / n));
        SolveReport rep;
        const bool has_source = !source.empty();
        for (rep.sweeps = 1; rep.sweeps <= max_sweeps; ++rep.sweeps) {
            for (auto i : free_) {
                double s = 0;
                for (int a = 0; a < D; ++a) s += u[i - g.stride[a]] + u[i + g.stride[a]];
                double target = s * w + (has_source ? source[i] : 0.0);
                u[i] += omega * (target - u[i]);
            }
            if (rep.sweeps % 16 == 0) {
                rep.residual = residual(u, source);
                if (rep.residual < tolerance) break;
            }
        }
        rep.residual = residual(u, source);
        const double r1 = box_.radius; // free sites live in the box of radius box_.radius - 1
        rep.error_bound = rep.residual * D * r1 * r1;
        return rep;
    }

    double residual(const std::vector<double>& u, const std::vector<double>& source) const {
        build_free_list();
        detail::GridStrides<D> g(box_);
        const double w = 1.0 / (2 * D);
        double r = 0;
        for (auto i : free_) {
            double s = 0;
            for (int a = 0; a < D; ++a) s += u[i - g.stride[a]] + u[i + g.stride[a]];
            double target = s * w + (source.empty() ? 0.0 : source[i]);
            r = std::max(r, std::abs(target - u[i]));
        }
        return r;
    }

private:
    void build_free_list() const {
        if (!free_.empty()) return;
        for (std::size_t i = 0; i < box_.size(); ++i)
            if (!fixed_[i]) free_.push_back(static_cast<std::uint32_t>(i));
    }

    Box<D> box_;
    std::vector<std::uint8_t> fixed_;
    mutable std::vector<std::uint32_t> free_;
};

} // namespace rilab
