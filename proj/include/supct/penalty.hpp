#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <stdexcept>

#include "supct/image.hpp"

namespace supct {

struct TvConfig {
    double eps_tv = 1e-6;

    void validate() const {
        if (!(eps_tv > 0.0)) throw std::invalid_argument("TvConfig: eps_tv must be > 0");
    }
};

/// Smoothed isotropic total variation with forward differences. Differences
/// that would cross the last row or column are zero (replicated edge).
inline double tv_value(const Image& x, const TvConfig& cfg = {}) {
    const std::size_t R = x.rows(), C = x.cols();
    const double e2 = cfg.eps_tv * cfg.eps_tv;
    double sum = 0.0;
    for (std::size_t m = 0; m < R; ++m) {
        for (std::size_t n = 0; n < C; ++n) {
            const double v = x(m, n);
            const double dm = m + 1 < R ? x(m + 1, n) - v : 0.0;
            const double dn = n + 1 < C ? x(m, n + 1) - v : 0.0;
            sum += std::sqrt(dm * dm + dn * dn + e2);
        }
    }
    return sum;
}

/// Analytic gradient of tv_value. Pixel (m,n) collects the term of its own
/// differences plus the terms where it is the (m+1,n) or (m,n+1) neighbour.
inline Image tv_gradient(const Image& x, const TvConfig& cfg = {}) {
    const std::size_t R = x.rows(), C = x.cols();
    const double e2 = cfg.eps_tv * cfg.eps_tv;
    Image g(R, C);
    for (std::size_t m = 0; m < R; ++m) {
        for (std::size_t n = 0; n < C; ++n) {
            const double v = x(m, n);
            const bool has_down = m + 1 < R;
            const bool has_right = n + 1 < C;
            const double dm = has_down ? x(m + 1, n) - v : 0.0;
            const double dn = has_right ? x(m, n + 1) - v : 0.0;
            const double t = std::sqrt(dm * dm + dn * dn + e2);
            g(m, n) -= (dm + dn) / t;
            if (has_down) g(m + 1, n) += dm / t;
            if (has_right) g(m, n + 1) += dn / t;
        }
    }
    return g;
}

/// A differentiable secondary criterion phi.
template <class P>
concept Penalty = requires(const P& p, const Image& x) {
    { p.value(x) } -> std::convertible_to<double>;
    { p.gradient(x) } -> std::same_as<Image>;
};

struct TotalVariation {
    TvConfig cfg;

    double value(const Image& x) const { return tv_value(x, cfg); }
    Image gradient(const Image& x) const { return tv_gradient(x, cfg); }
};

}  // namespace supct
