#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "supct/image.hpp"

namespace supct {

namespace denoisers {

struct Identity {};

struct Gaussian {
    double sigma = 1.0;  // pixels
};

struct Median {
    std::size_t radius = 1;  // window is (2r+1)^2
};

/// Non-local means with Gaussian-weighted patch distances.
struct NonLocalMeans {
    std::size_t patch = 7;
    std::size_t window = 21;
    double h = 0.02;  // filtering strength, intensity units
};

}  // namespace denoisers

using DenoiserSpec =
    std::variant<denoisers::Identity, denoisers::Gaussian, denoisers::Median, denoisers::NonLocalMeans>;

inline std::string denoiser_name(const DenoiserSpec& spec) {
    return std::visit(
        [](const auto& d) -> std::string {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, denoisers::Identity>) return "identity";
            else if constexpr (std::is_same_v<T, denoisers::Gaussian>) return "gaussian";
            else if constexpr (std::is_same_v<T, denoisers::Median>) return "median";
            else return "nlm";
        },
        spec);
}

inline void validate(const DenoiserSpec& spec) {
    std::visit(
        [](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, denoisers::Gaussian>) {
                if (!(d.sigma > 0.0)) throw std::invalid_argument("gaussian: sigma must be > 0");
            } else if constexpr (std::is_same_v<T, denoisers::Median>) {
                if (d.radius < 1) throw std::invalid_argument("median: radius must be >= 1");
            } else if constexpr (std::is_same_v<T, denoisers::NonLocalMeans>) {
                if (d.patch < 3 || d.patch % 2 == 0) throw std::invalid_argument("nlm: patch must be odd and >= 3");
                if (d.window < 3 || d.window % 2 == 0)
                    throw std::invalid_argument("nlm: window must be odd and >= 3");
                if (!(d.h > 0.0)) throw std::invalid_argument("nlm: h must be > 0");
            }
        },
        spec);
}

namespace detail {

inline std::size_t clamp_index(std::ptrdiff_t i, std::size_t n) {
    if (i < 0) return 0;
    if (i >= static_cast<std::ptrdiff_t>(n)) return n - 1;
    return static_cast<std::size_t>(i);
}

inline Image gaussian_filter(const Image& x, double sigma) {
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
        const double w = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
        kernel[static_cast<std::size_t>(i + radius)] = w;
        total += w;
    }
    for (double& w : kernel) w /= total;

    const std::size_t R = x.rows(), C = x.cols();
    Image tmp(R, C), out(R, C);
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c) {
            double s = 0.0;
            for (std::ptrdiff_t i = -radius; i <= radius; ++i)
                s += kernel[static_cast<std::size_t>(i + radius)] *
                     x(r, clamp_index(static_cast<std::ptrdiff_t>(c) + i, C));
            tmp(r, c) = s;
        }
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c) {
            double s = 0.0;
            for (std::ptrdiff_t i = -radius; i <= radius; ++i)
                s += kernel[static_cast<std::size_t>(i + radius)] *
                     tmp(clamp_index(static_cast<std::ptrdiff_t>(r) + i, R), c);
            out(r, c) = s;
        }
    return out;
}

inline Image median_filter(const Image& x, std::size_t radius) {
    const std::size_t R = x.rows(), C = x.cols();
    const auto rad = static_cast<std::ptrdiff_t>(radius);
    Image out(R, C);
    std::vector<double> win;
    win.reserve((2 * radius + 1) * (2 * radius + 1));
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c) {
            win.clear();
            for (std::ptrdiff_t dr = -rad; dr <= rad; ++dr)
                for (std::ptrdiff_t dc = -rad; dc <= rad; ++dc)
                    win.push_back(x(clamp_index(static_cast<std::ptrdiff_t>(r) + dr, R),
                                    clamp_index(static_cast<std::ptrdiff_t>(c) + dc, C)));
            auto mid = win.begin() + static_cast<std::ptrdiff_t>(win.size() / 2);
            std::nth_element(win.begin(), mid, win.end());
            out(r, c) = *mid;
        }
    return out;
}

inline Image nlm_filter(const Image& x, const denoisers::NonLocalMeans& p) {
    const std::size_t R = x.rows(), C = x.cols();
    const auto pr = static_cast<std::ptrdiff_t>(p.patch / 2);
    const auto wr = static_cast<std::ptrdiff_t>(p.window / 2);
    const auto pw = static_cast<std::size_t>(2 * pr + 1);

    // Gaussian patch weights, sigma = patch radius / 2, normalized to sum 1.
    const double ps = std::max(0.5 * static_cast<double>(pr), 0.5);
    std::vector<double> pk(pw * pw);
    double total = 0.0;
    for (std::ptrdiff_t i = -pr; i <= pr; ++i)
        for (std::ptrdiff_t j = -pr; j <= pr; ++j) {
            const double w = std::exp(-0.5 * static_cast<double>(i * i + j * j) / (ps * ps));
            pk[static_cast<std::size_t>((i + pr) * static_cast<std::ptrdiff_t>(pw) + (j + pr))] = w;
            total += w;
        }
    for (double& w : pk) w /= total;

    // Replicate-padded copy so patch reads never branch.
    const std::ptrdiff_t pad = pr + wr;
    const std::size_t PR = R + 2 * static_cast<std::size_t>(pad), PC = C + 2 * static_cast<std::size_t>(pad);
    std::vector<double> padded(PR * PC);
    for (std::size_t r = 0; r < PR; ++r)
        for (std::size_t c = 0; c < PC; ++c)
            padded[r * PC + c] = x(clamp_index(static_cast<std::ptrdiff_t>(r) - pad, R),
                                   clamp_index(static_cast<std::ptrdiff_t>(c) - pad, C));
    auto at = [&](std::ptrdiff_t r, std::ptrdiff_t c) {
        return padded[static_cast<std::size_t>(r + pad) * PC + static_cast<std::size_t>(c + pad)];
    };

    const double inv_h2 = 1.0 / (p.h * p.h);
    Image out(R, C);
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(R); ++r)
        for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(C); ++c) {
            double wsum = 0.0, acc = 0.0;
            for (std::ptrdiff_t qr = r - wr; qr <= r + wr; ++qr)
                for (std::ptrdiff_t qc = c - wr; qc <= c + wr; ++qc) {
                    double d2 = 0.0;
                    std::size_t k = 0;
                    for (std::ptrdiff_t i = -pr; i <= pr; ++i)
                        for (std::ptrdiff_t j = -pr; j <= pr; ++j, ++k) {
                            const double d = at(r + i, c + j) - at(qr + i, qc + j);
                            d2 += pk[k] * d * d;
                        }
                    const double w = std::exp(-d2 * inv_h2);
                    wsum += w;
                    acc += w * at(qr, qc);
                }
            out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc / wsum;
        }
    return out;
}

}  // namespace detail

/// Applies the black-box procedure described by `spec`. Deterministic; the
/// output has the input's shape.
inline Image denoise(const Image& x, const DenoiserSpec& spec) {
    validate(spec);
    return std::visit(
        [&](const auto& d) -> Image {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, denoisers::Identity>) return x;
            else if constexpr (std::is_same_v<T, denoisers::Gaussian>) return detail::gaussian_filter(x, d.sigma);
            else if constexpr (std::is_same_v<T, denoisers::Median>) return detail::median_filter(x, d.radius);
            else return detail::nlm_filter(x, d);
        },
        spec);
}

/// Callable wrapper so a spec can be passed wherever an Image -> Image procedure is expected.
struct SpecDenoiser {
    DenoiserSpec spec;
    Image operator()(const Image& x) const { return denoise(x, spec); }
};

/// Psi(x) applied once as post-processing; carries no data-fidelity guarantee.
template <class Psi>
Image postprocess(const Image& x, const Psi& psi) {
    Image y = psi(x);
    if (!y.same_shape(x)) throw DimensionError("postprocess: denoiser changed the image shape");
    return y;
}

}  // namespace supct
