#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "supct/acquisition.hpp"
#include "supct/geometry.hpp"
#include "supct/phantom.hpp"
#include "test_util.hpp"

using namespace supct;

namespace {

struct Box {
    double x0, x1, y0, y1;
};

// Axis-aligned box of an ellipse on the [-1, 1]^2 domain.
Box bounding_box(const Ellipse& e) {
    const double t = e.angle_deg * std::numbers::pi / 180.0;
    const double hx = std::hypot(e.semi_x * std::cos(t), e.semi_y * std::sin(t));
    const double hy = std::hypot(e.semi_x * std::sin(t), e.semi_y * std::cos(t));
    return {e.center_x - hx, e.center_x + hx, e.center_y - hy, e.center_y + hy};
}

// Axis-centered, untilted ellipses count as their own partner.
bool has_mirror_partner(const Ellipse& e) {
    for (const auto& o : shepp_logan_ellipses())
        if (o.intensity == e.intensity && o.semi_x == e.semi_x && o.semi_y == e.semi_y &&
            o.center_x == -e.center_x && o.center_y == e.center_y && o.angle_deg == -e.angle_deg)
            return true;
    return false;
}

}  // namespace

TEST(SheppLogan, ValuesWithinScaleAndCornerIsZero) {
    const Image p = shepp_logan(64);
    double mx = 0.0;
    for (double v : p.values()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 0.3);
        mx = std::max(mx, v);
    }
    EXPECT_DOUBLE_EQ(mx, 0.3);
    EXPECT_EQ(p(0, 0), 0.0);
    EXPECT_EQ(p(63, 63), 0.0);
    EXPECT_THROW(shepp_logan(8), std::invalid_argument);
}

TEST(SheppLogan, MirrorSymmetricOutsideAsymmetricEllipses) {
    const std::size_t side = 128;
    const Image p = shepp_logan(side);
    std::vector<Box> excluded;
    for (const auto& e : shepp_logan_ellipses()) {
        if (has_mirror_partner(e)) continue;
        Box b = bounding_box(e);
        excluded.push_back(b);
        excluded.push_back({-b.x1, -b.x0, b.y0, b.y1});
    }
    std::size_t differing = 0;
    const double pad = 2.0 / side;  // one pixel of slack
    for (std::size_t r = 0; r < side; ++r)
        for (std::size_t c = 0; c < side; ++c) {
            if (p(r, c) == p(r, side - 1 - c)) continue;
            const double x = (c - 0.5 * (side - 1)) * 2.0 / side, y = -(r - 0.5 * (side - 1)) * 2.0 / side;
            bool inside = false;
            for (const auto& b : excluded)
                inside = inside || (x >= b.x0 - pad && x <= b.x1 + pad && y >= b.y0 - pad && y <= b.y1 + pad);
            EXPECT_TRUE(inside) << "asymmetric pixel outside the excluded boxes at " << r << "," << c;
            ++differing;
        }
    EXPECT_GT(differing, 0u);  // the asymmetric ellipses are really there
}

TEST(RandomPhantom, DeterministicAndNonnegative) {
    const Image a = random_ellipse_phantom(64, 10, 42);
    const Image b = random_ellipse_phantom(64, 10, 42);
    EXPECT_EQ(a, b);
    for (double v : a.values()) EXPECT_GE(v, 0.0);
    EXPECT_THROW(random_ellipse_phantom(8, 10, 1), std::invalid_argument);
}

TEST(RandomPhantom, DifferentSeedsDiffer) {
    for (std::uint64_t s = 0; s < 100; ++s) {
        const Image a = random_ellipse_phantom(64, 10, 2 * s);
        const Image b = random_ellipse_phantom(64, 10, 2 * s + 1);
        std::size_t diff = 0;
        for (std::size_t i = 0; i < a.size(); ++i) diff += a[i] != b[i];
        EXPECT_GE(diff, a.size() / 100) << "seed pair " << s;
    }
}

TEST(RandomPhantom, ClippedToSupportCircle) {
    const Image a = random_ellipse_phantom(64, 10, 5);
    for (std::size_t r = 0; r < 64; ++r)
        for (std::size_t c = 0; c < 64; ++c) {
            const double x = (c - 31.5) / 32.0, y = (r - 31.5) / 32.0;
            if (x * x + y * y > 1.0) {
                EXPECT_EQ(a(r, c), 0.0);
            }
        }
}

TEST(SimulateCounts, PoissonMeanAndVarianceAtHighCount) {
    const std::size_t n = 100000;
    const Sinogram zero(1, n);
    const CountsSinogram c = simulate_counts(zero, 1e6, 7);
    double mean = 0.0;
    for (double v : c.counts.values()) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : c.counts.values()) var += (v - mean) * (v - mean);
    var /= n - 1;
    EXPECT_NEAR(mean, 1e6, 0.005 * 1e6);
    EXPECT_NEAR(var, 1e6, 0.05 * 1e6);
}

TEST(SimulateCounts, PoissonMeanAndVarianceAtLowCount) {
    // Mean 5 exercises the inversion sampler.
    const std::size_t n = 100000;
    const Sinogram p(1, n, std::log(1e4 / 5.0));
    const CountsSinogram c = simulate_counts(p, 1e4, 11);
    double mean = 0.0;
    for (double v : c.counts.values()) {
        EXPECT_EQ(v, std::floor(v));
        mean += v;
    }
    mean /= n;
    double var = 0.0;
    for (double v : c.counts.values()) var += (v - mean) * (v - mean);
    var /= n - 1;
    EXPECT_NEAR(mean, 5.0, 0.005 * 5.0);
    EXPECT_NEAR(var, 5.0, 0.05 * 5.0);
}

TEST(SimulateCounts, ReproducibleAndSeedDependent) {
    const JosephProjector op(FanBeamGeometry::for_image(32, 9.0, 30));
    const Sinogram p = op.forward(shepp_logan(32));
    EXPECT_EQ(simulate_counts(p, 1e4, 3).counts, simulate_counts(p, 1e4, 3).counts);
    EXPECT_NE(simulate_counts(p, 1e4, 3).counts, simulate_counts(p, 1e4, 4).counts);
}

TEST(SimulateCounts, NoiselessReturnsExpectation) {
    const Sinogram p = testutil::random_sinogram(4, 8, 2);
    const CountsSinogram c = simulate_counts(p, 1e5, 0, true);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_DOUBLE_EQ(c.counts[i], 1e5 * std::exp(-p[i]));
}

TEST(LogTransform, Examples) {
    Sinogram c(1, 2);
    c[0] = 1e4;
    c[1] = 0.0;
    const Sinogram b = log_transform({c}, 1e4);
    EXPECT_EQ(b[0], 0.0);
    EXPECT_NEAR(b[1], 9.2103, 1e-4);
}

TEST(LogTransform, NoiselessRoundTrip) {
    const JosephProjector op(FanBeamGeometry::for_image(32, 9.0, 30));
    const Sinogram p = op.forward(shepp_logan(32));
    const Sinogram b = log_transform(expected_counts(p, 1e6), 1e6);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(b[i], p[i], 1e-12);
}

TEST(SubsampleViews, KeepsEveryKthView) {
    const Sinogram s = testutil::random_sinogram(900, 5, 1);
    const Sinogram t = subsample_views(s, 15);
    ASSERT_EQ(t.num_views(), 60u);
    for (std::size_t k = 0; k < 60; ++k)
        for (std::size_t b = 0; b < 5; ++b) EXPECT_EQ(t(k, b), s(15 * k, b));
    EXPECT_EQ(subsample_views(s, 1), s);
    EXPECT_THROW(subsample_views(s, 7), std::invalid_argument);
}

TEST(SubsampleViews, GeometryMatchesSubsampledData) {
    const auto g = FanBeamGeometry::for_image(32, 9.0, 60);
    const Image x = shepp_logan(32);
    const Sinogram full = JosephProjector(g).forward(x);
    const Sinogram sub = JosephProjector(subsample_geometry(g, 4)).forward(x);
    const Sinogram picked = subsample_views(full, 4);
    for (std::size_t i = 0; i < sub.size(); ++i) EXPECT_NEAR(sub[i], picked[i], 1e-12);
}
