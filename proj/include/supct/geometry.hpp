#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "supct/image.hpp"

namespace supct {

class GeometryError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Flat-detector fan-beam scanner. Lengths in mm; attenuation in cm^-1, so
/// projector weights are path lengths in cm.
struct FanBeamGeometry {
    std::size_t num_pixels_per_side = 64;
    double pixel_size = 4.544;
    std::size_t num_views = 360;
    double angular_range = 360.0;  // degrees
    std::size_t num_detector_bins = 96;
    double detector_bin_size = 9.4;
    double source_to_center = 600.0;
    double source_to_detector = 1200.0;

    /// Default scanner for a square image: 1.5*side bins, detector pitch sized so
    /// the outermost rays clear the image corners with 2% margin.
    static FanBeamGeometry for_image(std::size_t side, double pixel_size, std::size_t num_views,
                                     double source_to_center = 600.0,
                                     double source_to_detector = 1200.0) {
        FanBeamGeometry g;
        g.num_pixels_per_side = side;
        g.pixel_size = pixel_size;
        g.num_views = num_views;
        g.source_to_center = source_to_center;
        g.source_to_detector = source_to_detector;
        g.num_detector_bins = static_cast<std::size_t>(std::ceil(1.5 * static_cast<double>(side)));
        const double corner_radius = std::sqrt(2.0) * 0.5 * static_cast<double>(side) * pixel_size;
        if (corner_radius < source_to_center) {
            const double half_width =
                source_to_detector * std::tan(std::asin(corner_radius / source_to_center));
            g.detector_bin_size = 1.02 * 2.0 * half_width /
                                  static_cast<double>(std::max<std::size_t>(g.num_detector_bins - 1, 1));
        }
        g.validate();
        return g;
    }

    double support_radius() const {
        return 0.5 * static_cast<double>(num_pixels_per_side) * pixel_size;
    }

    double view_angle(std::size_t view) const {
        return static_cast<double>(view) * angular_range / static_cast<double>(num_views) *
               std::numbers::pi / 180.0;
    }

    /// Throws GeometryError unless every invariant holds.
    void validate() const {
        auto fail = [](const std::string& what) { throw GeometryError("FanBeamGeometry: " + what); };
        if (num_pixels_per_side < 1) fail("num_pixels_per_side must be >= 1");
        if (num_views < 1) fail("num_views must be >= 1");
        if (num_detector_bins < 1) fail("num_detector_bins must be >= 1");
        if (!(pixel_size > 0.0) || !(detector_bin_size > 0.0) || !(source_to_center > 0.0) ||
            !(source_to_detector > 0.0) || !(angular_range > 0.0))
            fail("all lengths and the angular range must be strictly positive");
        if (!(source_to_detector > source_to_center))
            fail("source_to_detector must exceed source_to_center");
        const double r = support_radius();
        if (!(r < source_to_center)) fail("image support reaches the source orbit");
        if (!(r < source_to_detector - source_to_center)) fail("image support reaches the detector");
        const double outer_offset =
            0.5 * static_cast<double>(num_detector_bins - 1) * detector_bin_size;
        const double fan_half_angle = std::atan(outer_offset / source_to_detector);
        const double support_half_angle = std::asin(r / source_to_center);
        if (!(support_half_angle < fan_half_angle))
            fail("image support circle is not strictly inside the fan");
    }

    friend bool operator==(const FanBeamGeometry&, const FanBeamGeometry&) = default;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Visits the Joseph interpolation weights of the ray src->dst over a square
/// grid of `side` pixels with pitch `pixel_size_mm`. Weights are in cm.
/// The visitor receives (pixel index, weight); only nonzero weights are visited.
template <class Visitor>
void walk_joseph_ray(Point2 src, Point2 dst, std::size_t side, double pixel_size_mm,
                     Visitor&& visit) {
    double dx = dst.x - src.x;
    double dy = dst.y - src.y;
    const double len = std::hypot(dx, dy);
    if (!(len > 0.0)) return;
    dx /= len;
    dy /= len;
    const auto n = static_cast<std::ptrdiff_t>(side);
    const double half = 0.5 * static_cast<double>(side - 1);
    const double ps_cm = 0.1 * pixel_size_mm;

    if (std::abs(dx) >= std::abs(dy)) {
        const double w = ps_cm / std::abs(dx);
        for (std::ptrdiff_t c = 0; c < n; ++c) {
            const double xc = (static_cast<double>(c) - half) * pixel_size_mm;
            const double t = (xc - src.x) / dx;
            const double y = src.y + t * dy;
            const double rf = half - y / pixel_size_mm;
            const double r0f = std::floor(rf);
            const double f = rf - r0f;
            const auto r0 = static_cast<std::ptrdiff_t>(r0f);
            if (r0 >= 0 && r0 < n && f < 1.0) visit(static_cast<std::size_t>(r0 * n + c), w * (1.0 - f));
            if (r0 + 1 >= 0 && r0 + 1 < n && f > 0.0)
                visit(static_cast<std::size_t>((r0 + 1) * n + c), w * f);
        }
    } else {
        const double w = ps_cm / std::abs(dy);
        for (std::ptrdiff_t r = 0; r < n; ++r) {
            const double yr = (half - static_cast<double>(r)) * pixel_size_mm;
            const double t = (yr - src.y) / dy;
            const double x = src.x + t * dx;
            const double cf = x / pixel_size_mm + half;
            const double c0f = std::floor(cf);
            const double f = cf - c0f;
            const auto c0 = static_cast<std::ptrdiff_t>(c0f);
            if (c0 >= 0 && c0 < n && f < 1.0) visit(static_cast<std::size_t>(r * n + c0), w * (1.0 - f));
            if (c0 + 1 >= 0 && c0 + 1 < n && f > 0.0)
                visit(static_cast<std::size_t>(r * n + c0 + 1), w * f);
        }
    }
}

/// Line integral of a square image along src->dst under the Joseph model.
inline double integrate_ray(const Image& image, double pixel_size_mm, Point2 src, Point2 dst) {
    if (!image.is_square()) throw DimensionError("integrate_ray: image must be square");
    double sum = 0.0;
    walk_joseph_ray(src, dst, image.rows(), pixel_size_mm,
                    [&](std::size_t p, double w) { sum += w * image[p]; });
    return sum;
}

/// Anything that realizes A (forward) and A^T (back) on a view-structured sinogram.
template <class Op>
concept LinearProjector = requires(const Op& op, const Image& x, const Sinogram& y,
                                   std::span<const std::size_t> views) {
    { op.num_views() } -> std::convertible_to<std::size_t>;
    { op.num_bins() } -> std::convertible_to<std::size_t>;
    { op.image_rows() } -> std::convertible_to<std::size_t>;
    { op.image_cols() } -> std::convertible_to<std::size_t>;
    { op.forward(x, views) } -> std::same_as<Sinogram>;
    { op.back(y, views) } -> std::same_as<Image>;
};

namespace detail {

inline std::vector<std::size_t> all_views(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

inline void check_views(std::span<const std::size_t> views, std::size_t num_views) {
    for (std::size_t v : views)
        if (v >= num_views)
            throw std::out_of_range("view index " + std::to_string(v) + " out of range [0, " +
                                    std::to_string(num_views) + ")");
}

}  // namespace detail

/// Matrix-free Joseph projector for a FanBeamGeometry. Forward and back
/// projection share one ray walker, so the adjoint is exact up to rounding.
class JosephProjector {
public:
    explicit JosephProjector(FanBeamGeometry geom) : geom_(std::move(geom)) {
        geom_.validate();
        const std::size_t nb = geom_.num_detector_bins;
        sources_.resize(geom_.num_views);
        targets_.resize(geom_.num_views * nb);
        for (std::size_t v = 0; v < geom_.num_views; ++v) {
            const double th = geom_.view_angle(v);
            const double c = std::cos(th), s = std::sin(th);
            const Point2 src{geom_.source_to_center * c, geom_.source_to_center * s};
            const Point2 det_center{src.x - geom_.source_to_detector * c,
                                    src.y - geom_.source_to_detector * s};
            sources_[v] = src;
            for (std::size_t b = 0; b < nb; ++b) {
                const double u =
                    (static_cast<double>(b) - 0.5 * static_cast<double>(nb - 1)) * geom_.detector_bin_size;
                targets_[v * nb + b] = Point2{det_center.x - u * s, det_center.y + u * c};
            }
        }
    }

    const FanBeamGeometry& geometry() const { return geom_; }
    std::size_t num_views() const { return geom_.num_views; }
    std::size_t num_bins() const { return geom_.num_detector_bins; }
    std::size_t image_rows() const { return geom_.num_pixels_per_side; }
    std::size_t image_cols() const { return geom_.num_pixels_per_side; }

    Point2 ray_source(std::size_t view) const { return sources_.at(view); }
    Point2 ray_target(std::size_t view, std::size_t bin) const {
        return targets_.at(view * num_bins() + bin);
    }

    /// A_s x; the result has one row per entry of `views`, in that order.
    Sinogram forward(const Image& x, std::span<const std::size_t> views) const {
        check_image(x);
        detail::check_views(views, num_views());
        const std::size_t nb = num_bins();
        Sinogram out(views.size(), nb);
        for (std::size_t i = 0; i < views.size(); ++i) {
            const std::size_t v = views[i];
            for (std::size_t b = 0; b < nb; ++b) {
                double sum = 0.0;
                walk(v, b, [&](std::size_t p, double w) { sum += w * x[p]; });
                out(i, b) = sum;
            }
        }
        return out;
    }

    Sinogram forward(const Image& x) const {
        const auto views = detail::all_views(num_views());
        return forward(x, views);
    }

    /// A_s^T y, where row i of `y` belongs to view `views[i]`.
    Image back(const Sinogram& y, std::span<const std::size_t> views) const {
        detail::check_views(views, num_views());
        if (y.num_views() != views.size() || y.num_bins() != num_bins())
            throw DimensionError("back_project: sinogram shape does not match geometry/view list");
        const std::size_t nb = num_bins();
        Image out = Image::square(geom_.num_pixels_per_side);
        for (std::size_t i = 0; i < views.size(); ++i) {
            const std::size_t v = views[i];
            for (std::size_t b = 0; b < nb; ++b) {
                const double val = y(i, b);
                if (val == 0.0) continue;
                walk(v, b, [&](std::size_t p, double w) { out[p] += w * val; });
            }
        }
        return out;
    }

    Image back(const Sinogram& y) const {
        const auto views = detail::all_views(num_views());
        return back(y, views);
    }

private:
    template <class Visitor>
    void walk(std::size_t view, std::size_t bin, Visitor&& visit) const {
        walk_joseph_ray(sources_[view], targets_[view * num_bins() + bin], geom_.num_pixels_per_side,
                        geom_.pixel_size, std::forward<Visitor>(visit));
    }

    void check_image(const Image& x) const {
        if (x.rows() != geom_.num_pixels_per_side || x.cols() != geom_.num_pixels_per_side)
            throw DimensionError("forward_project: image is " + std::to_string(x.rows()) + "x" +
                                 std::to_string(x.cols()) + ", geometry expects side " +
                                 std::to_string(geom_.num_pixels_per_side));
    }

    FanBeamGeometry geom_;
    std::vector<Point2> sources_;
    std::vector<Point2> targets_;
};

/// Explicit I x J system matrix grouped into views of `bins` rows each. Meant
/// for small problems and for checking the matrix-free operators.
class DenseProjector {
public:
    DenseProjector(std::size_t num_views, std::size_t bins, std::size_t image_rows,
                   std::size_t image_cols, std::vector<double> matrix)
        : views_(num_views), bins_(bins), rows_(image_rows), cols_(image_cols), a_(std::move(matrix)) {
        if (a_.size() != views_ * bins_ * rows_ * cols_)
            throw DimensionError("DenseProjector: matrix size does not match dimensions");
    }

    /// Assembles the matrix column by column from another projector.
    template <LinearProjector Op>
    static DenseProjector assemble(const Op& op) {
        const std::size_t I = op.num_views() * op.num_bins();
        const std::size_t J = op.image_rows() * op.image_cols();
        const auto views = detail::all_views(op.num_views());
        std::vector<double> a(I * J, 0.0);
        Image e(op.image_rows(), op.image_cols());
        for (std::size_t j = 0; j < J; ++j) {
            e[j] = 1.0;
            const Sinogram col = op.forward(e, views);
            for (std::size_t i = 0; i < I; ++i) a[i * J + j] = col[i];
            e[j] = 0.0;
        }
        return DenseProjector(op.num_views(), op.num_bins(), op.image_rows(), op.image_cols(),
                              std::move(a));
    }

    std::size_t num_views() const { return views_; }
    std::size_t num_bins() const { return bins_; }
    std::size_t image_rows() const { return rows_; }
    std::size_t image_cols() const { return cols_; }
    std::size_t num_rays() const { return views_ * bins_; }
    std::size_t num_pixels() const { return rows_ * cols_; }
    double entry(std::size_t ray, std::size_t pixel) const { return a_[ray * num_pixels() + pixel]; }

    Sinogram forward(const Image& x, std::span<const std::size_t> views) const {
        if (x.rows() != rows_ || x.cols() != cols_) throw DimensionError("DenseProjector: image shape");
        detail::check_views(views, views_);
        const std::size_t J = num_pixels();
        Sinogram out(views.size(), bins_);
        for (std::size_t i = 0; i < views.size(); ++i)
            for (std::size_t b = 0; b < bins_; ++b) {
                const double* row = a_.data() + (views[i] * bins_ + b) * J;
                double s = 0.0;
                for (std::size_t j = 0; j < J; ++j) s += row[j] * x[j];
                out(i, b) = s;
            }
        return out;
    }

    Sinogram forward(const Image& x) const {
        const auto views = detail::all_views(views_);
        return forward(x, views);
    }

    Image back(const Sinogram& y, std::span<const std::size_t> views) const {
        detail::check_views(views, views_);
        if (y.num_views() != views.size() || y.num_bins() != bins_)
            throw DimensionError("DenseProjector: sinogram shape");
        const std::size_t J = num_pixels();
        Image out(rows_, cols_);
        for (std::size_t i = 0; i < views.size(); ++i)
            for (std::size_t b = 0; b < bins_; ++b) {
                const double* row = a_.data() + (views[i] * bins_ + b) * J;
                const double val = y(i, b);
                for (std::size_t j = 0; j < J; ++j) out[j] += row[j] * val;
            }
        return out;
    }

    Image back(const Sinogram& y) const {
        const auto views = detail::all_views(views_);
        return back(y, views);
    }

private:
    std::size_t views_, bins_, rows_, cols_;
    std::vector<double> a_;
};

template <LinearProjector Op>
Sinogram forward_project(const Op& op, const Image& x,
                         std::optional<std::span<const std::size_t>> views = std::nullopt) {
    if (views) return op.forward(x, *views);
    const auto all = detail::all_views(op.num_views());
    return op.forward(x, all);
}

template <LinearProjector Op>
Image back_project(const Op& op, const Sinogram& y,
                   std::optional<std::span<const std::size_t>> views = std::nullopt) {
    if (views) return op.back(y, *views);
    const auto all = detail::all_views(op.num_views());
    return op.back(y, all);
}

inline Sinogram forward_project(const Image& x, const FanBeamGeometry& geom,
                                std::optional<std::span<const std::size_t>> views = std::nullopt) {
    return forward_project(JosephProjector(geom), x, views);
}

inline Image back_project(const Sinogram& y, const FanBeamGeometry& geom,
                          std::optional<std::span<const std::size_t>> views = std::nullopt) {
    return back_project(JosephProjector(geom), y, views);
}

struct RowColSums {
    Sinogram row_sums;  // A_s 1
    Image col_sums;     // A_s^T 1
};

/// Row and column sums of A restricted to `views` (all views when omitted).
/// Weights are nonnegative, so these equal the absolute-value sums.
template <LinearProjector Op>
RowColSums row_col_sums(const Op& op, std::optional<std::span<const std::size_t>> views = std::nullopt) {
    std::vector<std::size_t> owned;
    std::span<const std::size_t> vs;
    if (views) {
        vs = *views;
    } else {
        owned = detail::all_views(op.num_views());
        vs = owned;
    }
    const Image ones(op.image_rows(), op.image_cols(), 1.0);
    const Sinogram ones_sino(vs.size(), op.num_bins(), 1.0);
    return {op.forward(ones, vs), op.back(ones_sino, vs)};
}

inline RowColSums row_col_sums(const FanBeamGeometry& geom,
                               std::optional<std::span<const std::size_t>> views = std::nullopt) {
    return row_col_sums(JosephProjector(geom), views);
}

}  // namespace supct
