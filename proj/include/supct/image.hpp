#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace supct {

/// Raised when operands disagree in shape.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// 2D attenuation map in cm^-1, row-major. Row 0 is the top of the image.
class Image {
public:
    Image() = default;
    Image(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
    Image(std::size_t rows, std::size_t cols, std::vector<double> values)
        : rows_(rows), cols_(cols), values_(std::move(values)) {
        if (values_.size() != rows_ * cols_)
            throw DimensionError("Image: value count does not match rows*cols");
    }

    static Image square(std::size_t side, double fill = 0.0) { return Image(side, side, fill); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return values_.size(); }
    bool is_square() const { return rows_ == cols_; }

    double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    bool same_shape(const Image& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

/// View-major stack of detector readings: one row of `num_bins` values per view.
class Sinogram {
public:
    Sinogram() = default;
    Sinogram(std::size_t num_views, std::size_t num_bins, double fill = 0.0)
        : views_(num_views), bins_(num_bins), values_(num_views * num_bins, fill) {}
    Sinogram(std::size_t num_views, std::size_t num_bins, std::vector<double> values)
        : views_(num_views), bins_(num_bins), values_(std::move(values)) {
        if (values_.size() != views_ * bins_)
            throw DimensionError("Sinogram: value count does not match views*bins");
    }

    std::size_t num_views() const { return views_; }
    std::size_t num_bins() const { return bins_; }
    std::size_t size() const { return values_.size(); }

    double& operator()(std::size_t view, std::size_t bin) { return values_[view * bins_ + bin]; }
    double operator()(std::size_t view, std::size_t bin) const { return values_[view * bins_ + bin]; }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    std::span<double> view(std::size_t v) { return {values_.data() + v * bins_, bins_}; }
    std::span<const double> view(std::size_t v) const { return {values_.data() + v * bins_, bins_}; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    bool same_shape(const Sinogram& other) const {
        return views_ == other.views_ && bins_ == other.bins_;
    }

    friend bool operator==(const Sinogram&, const Sinogram&) = default;

private:
    std::size_t views_ = 0;
    std::size_t bins_ = 0;
    std::vector<double> values_;
};

/// Expected or sampled photon counts, same layout as Sinogram.
struct CountsSinogram {
    Sinogram counts;
};

namespace vec {

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("max_abs_diff: length mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline bool all_finite(std::span<const double> a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace vec

/// Sets negative entries to zero (projection onto the nonnegative orthant).
inline void clamp_nonnegative(Image& x) {
    for (double& v : x.values())
        if (v < 0.0) v = 0.0;
}

}  // namespace supct
