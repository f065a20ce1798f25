#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include "supct/geometry.hpp"
#include "supct/image.hpp"

namespace supct {

/// Beam intensity, view count and noise seed for one simulated acquisition.
struct DoseProtocol {
    double intensity_I0 = 1e6;
    std::size_t num_views = 900;
    std::uint64_t rng_seed = 0;
    bool noiseless = false;
};

/// I0 * exp(-p) for every ray.
inline CountsSinogram expected_counts(const Sinogram& line_integrals, double I0) {
    if (!(I0 > 0.0)) throw std::invalid_argument("expected_counts: I0 must be > 0");
    Sinogram c(line_integrals.num_views(), line_integrals.num_bins());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = I0 * std::exp(-line_integrals[i]);
    return {std::move(c)};
}

namespace detail {

/// One Poisson(mean) draw from a generator private to (seed, index), so the
/// result for an entry does not depend on evaluation order or thread count.
inline double poisson_entry(double mean, std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::mt19937_64 rng(seq);
    if (mean < 30.0) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double u = unit(rng);
        double p = std::exp(-mean);
        double cdf = p;
        double k = 0.0;
        while (u > cdf && k < 1000.0) {
            k += 1.0;
            p *= mean / k;
            cdf += p;
        }
        return k;
    }
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double draw = std::round(mean + std::sqrt(mean) * gauss(rng));
    return draw < 0.0 ? 0.0 : draw;
}

}  // namespace detail

/// Samples Poisson(I0 exp(-p_i)) per ray. In noiseless mode returns the expectation.
inline CountsSinogram simulate_counts(const Sinogram& line_integrals, double I0, std::uint64_t seed,
                                      bool noiseless = false) {
    if (!vec::all_finite(line_integrals.values()))
        throw std::invalid_argument("simulate_counts: line integrals must be finite");
    CountsSinogram c = expected_counts(line_integrals, I0);
    if (noiseless) return c;
    for (std::size_t i = 0; i < c.counts.size(); ++i)
        c.counts[i] = detail::poisson_entry(c.counts[i], seed, i);
    return c;
}

/// b_i = ln(I0 / max(c_i, 1)).
inline Sinogram log_transform(const CountsSinogram& counts, double I0) {
    if (!(I0 > 0.0)) throw std::invalid_argument("log_transform: I0 must be > 0");
    Sinogram b(counts.counts.num_views(), counts.counts.num_bins());
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = std::log(I0 / std::max(counts.counts[i], 1.0));
    return b;
}

/// Keeps views 0, k, 2k, ...
inline Sinogram subsample_views(const Sinogram& sino, std::size_t keep_every) {
    if (keep_every == 0 || sino.num_views() % keep_every != 0)
        throw std::invalid_argument("subsample_views: keep_every=" + std::to_string(keep_every) +
                                    " does not divide " + std::to_string(sino.num_views()) + " views");
    const std::size_t kept = sino.num_views() / keep_every;
    Sinogram out(kept, sino.num_bins());
    for (std::size_t k = 0; k < kept; ++k) {
        const auto src = sino.view(k * keep_every);
        std::copy(src.begin(), src.end(), out.view(k).begin());
    }
    return out;
}

/// Geometry whose views coincide with views 0, k, 2k, ... of `geom`.
inline FanBeamGeometry subsample_geometry(const FanBeamGeometry& geom, std::size_t keep_every) {
    if (keep_every == 0 || geom.num_views % keep_every != 0)
        throw std::invalid_argument("subsample_geometry: keep_every does not divide num_views");
    FanBeamGeometry g = geom;
    g.num_views = geom.num_views / keep_every;
    return g;
}

}  // namespace supct
