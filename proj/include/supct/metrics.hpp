#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>

#include "supct/image.hpp"
#include "supct/penalty.hpp"

namespace supct {

struct PsnrOptions {
    /// Use y_max^2 in the numerator instead of y_max.
    bool peak_squared = false;
};

/// 10 log10(y_max / MSE(x, y)); +infinity when the images are identical.
inline double psnr(const Image& x, const Image& reference, PsnrOptions opt = {}) {
    if (!x.same_shape(reference)) throw DimensionError("psnr: shape mismatch");
    if (reference.size() == 0) throw DimensionError("psnr: empty image");
    double mse = 0.0;
    double ymax = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = x[j] - reference[j];
        mse += d * d;
        ymax = std::max(ymax, reference[j]);
    }
    mse /= static_cast<double>(x.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    const double peak = opt.peak_squared ? ymax * ymax : ymax;
    return 10.0 * std::log10(peak / mse);
}

struct SsimConstants {
    double c1;
    double c2;
};

/// Standard K1 = 0.01, K2 = 0.03 constants with dynamic range L = max(reference).
inline SsimConstants default_ssim_constants(const Image& reference) {
    const double L = *std::max_element(reference.values().begin(), reference.values().end());
    return {(0.01 * L) * (0.01 * L), (0.03 * L) * (0.03 * L)};
}

/// SSIM from global image statistics (one mean, variance and covariance per image).
inline double ssim(const Image& x, const Image& y, SsimConstants k) {
    if (!x.same_shape(y)) throw DimensionError("ssim: shape mismatch");
    if (x == y) return 1.0;
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        mx += x[j];
        my += y[j];
    }
    mx /= n;
    my /= n;
    double vx = 0.0, vy = 0.0, cxy = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double a = x[j] - mx, b = y[j] - my;
        vx += a * a;
        vy += b * b;
        cxy += a * b;
    }
    vx /= n;
    vy /= n;
    cxy /= n;
    return ((2.0 * mx * my + k.c1) * (2.0 * cxy + k.c2)) /
           ((mx * mx + my * my + k.c1) * (vx + vy + k.c2));
}

inline double ssim(const Image& x, const Image& y) { return ssim(x, y, default_ssim_constants(y)); }

/// (phi(y) - phi(x)) / phi(y) * 100. Negative when x has more TV than the reference y.
inline double delta_tv_percent(const Image& x, const Image& reference, const TvConfig& cfg = {}) {
    if (!x.same_shape(reference)) throw DimensionError("delta_tv_percent: shape mismatch");
    const double ty = tv_value(reference, cfg);
    const double tx = tv_value(x, cfg);
    if (tx == ty) return 0.0;
    return (ty - tx) / ty * 100.0;
}

struct MetricReport {
    double psnr = 0.0;
    double ssim = 0.0;
    double delta_tv_percent = 0.0;
    double proximity = 0.0;
    std::size_t iterations = 0;
    double runtime_seconds = 0.0;
};

inline MetricReport evaluate_image(const Image& x, const Image& reference, const TvConfig& tv = {},
                                   PsnrOptions popt = {}) {
    MetricReport r;
    r.psnr = psnr(x, reference, popt);
    r.ssim = ssim(x, reference);
    r.delta_tv_percent = delta_tv_percent(x, reference, tv);
    return r;
}

}  // namespace supct
