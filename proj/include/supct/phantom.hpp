#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "supct/image.hpp"

namespace supct {

/// Ellipse on the [-1, 1]^2 phantom domain (y up). Angle in degrees.
struct Ellipse {
    double intensity;
    double semi_x;
    double semi_y;
    double center_x;
    double center_y;
    double angle_deg;

    bool contains(double x, double y) const {
        const double t = angle_deg * std::numbers::pi / 180.0;
        const double c = std::cos(t), s = std::sin(t);
        const double dx = x - center_x, dy = y - center_y;
        const double u = c * dx + s * dy;
        const double v = -s * dx + c * dy;
        return (u * u) / (semi_x * semi_x) + (v * v) / (semi_y * semi_y) <= 1.0;
    }
};

/// Ten-ellipse head phantom with the high-contrast ("modified") intensities.
inline const std::array<Ellipse, 10>& shepp_logan_ellipses() {
    static const std::array<Ellipse, 10> kEllipses{{
        {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
        {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
        {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
        {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
        {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
        {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
        {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
        {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
        {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
        {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
    }};
    return kEllipses;
}

namespace detail {

inline double pixel_center_coord(std::size_t index, std::size_t side) {
    return (static_cast<double>(index) - 0.5 * static_cast<double>(side - 1)) * 2.0 /
           static_cast<double>(side);
}

/// Sums ellipses at pixel centers, clamps to >= 0 and rescales so the maximum is `scale`.
inline Image rasterize(std::span<const Ellipse> ellipses, std::size_t side, double scale,
                       bool clip_to_circle) {
    Image img = Image::square(side);
    for (std::size_t r = 0; r < side; ++r) {
        const double y = -pixel_center_coord(r, side);
        for (std::size_t c = 0; c < side; ++c) {
            const double x = pixel_center_coord(c, side);
            if (clip_to_circle && x * x + y * y > 1.0) continue;
            double v = 0.0;
            for (const auto& e : ellipses)
                if (e.contains(x, y)) v += e.intensity;
            img(r, c) = std::max(v, 0.0);
        }
    }
    const double peak = *std::max_element(img.values().begin(), img.values().end());
    if (peak > 0.0)
        for (double& v : img.values()) v = std::min(v * (scale / peak), scale);
    return img;
}

}  // namespace detail

/// Head phantom sampled at pixel centers with maximum value `scale` (cm^-1).
inline Image shepp_logan(std::size_t side, double scale = 0.3) {
    if (side < 16) throw std::invalid_argument("shepp_logan: side must be >= 16");
    const auto& e = shepp_logan_ellipses();
    return detail::rasterize(e, side, scale, false);
}

/// Seeded head-like phantom: a dense elliptical rim around soft tissue with
/// `num_ellipses` random inclusions inside it, clipped to the unit support
/// circle, clamped nonnegative, peak = `scale`.
inline Image random_ellipse_phantom(std::size_t side, std::size_t num_ellipses, std::uint64_t seed,
                                    double scale = 0.3) {
    if (side < 16) throw std::invalid_argument("random_ellipse_phantom: side must be >= 16");
    if (num_ellipses < 1) throw std::invalid_argument("random_ellipse_phantom: need at least one ellipse");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    // The rim is what produces streaks under sparse sampling.
    std::vector<Ellipse> ellipses;
    const double ax = uniform(0.65, 0.85), ay = uniform(0.65, 0.85), tilt = uniform(0.0, 180.0);
    const double rim = uniform(0.04, 0.07), soft = uniform(0.15, 0.3);
    ellipses.push_back({1.0, ax, ay, 0.0, 0.0, tilt});
    ellipses.push_back({soft - 1.0, ax - rim, ay - rim, 0.0, 0.0, tilt});
    const double inner = std::min(ax, ay) - rim;
    for (std::size_t i = 0; i < num_ellipses; ++i) {
        const double radius = 0.8 * inner * std::sqrt(unit(rng));
        const double theta = uniform(0.0, 2.0 * std::numbers::pi);
        const double size = std::min(0.3, 0.5 * inner);
        ellipses.push_back({uniform(-0.1, 0.2), uniform(0.03, size), uniform(0.03, size),
                            radius * std::cos(theta), radius * std::sin(theta), uniform(0.0, 180.0)});
    }
    return detail::rasterize(ellipses, side, scale, true);
}

}  // namespace supct
